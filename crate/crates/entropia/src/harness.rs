//! Experiment runner: dispatches configs to the module pipelines, collects
//! CSV payloads and pass/fail verdicts, and archives reproducible runs.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::bounds::{BoundSchedule, CauchyEnvelope, MuNuModel, SRule};
use crate::bounds::{cauchy_derivative_bound, check_rescaled_bound};
use crate::config::{ExperimentConfig, Task};
use crate::covering::{RateOptions, ScaleRate, entropy_limit_fit};
use crate::error::{Error, Result};
use crate::local::{LocalEntropyEstimate, LocalParams, SamplingPlan, local_entropy_sup};
use crate::system::{RescaledMap, jet_norms};
use crate::zoo::{NamedSystem, by_name};

pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub version: &'static str,
    pub wall_seconds: f64,
    /// (file name, payload) pairs; count columns are bit-reproducible
    pub csv: Vec<(String, String)>,
    pub verdicts: Vec<Verdict>,
    /// the time budget cut the run short
    pub partial: bool,
}

impl RunRecord {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass) && !self.partial
    }

    /// Write CSVs, the config snapshot, the verdict summary, and a
    /// renderer-agnostic plot declaration into the output directory.
    pub fn write_outputs(&self) -> Result<()> {
        let dir = match &self.config.output_dir {
            Some(d) => d.clone(),
            None => return Ok(()),
        };
        std::fs::create_dir_all(&dir)?;
        for (name, payload) in &self.csv {
            std::fs::write(dir.join(name), payload)?;
        }
        std::fs::write(dir.join("config.txt"), self.config.to_text())?;
        let mut summary = format!(
            "version {}\nwall_seconds {:.3}\npartial {}\n",
            self.version, self.wall_seconds, self.partial
        );
        for v in &self.verdicts {
            let _ = writeln!(
                summary,
                "{} {} {}",
                if v.pass { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            );
        }
        std::fs::write(dir.join("verdicts.txt"), summary)?;
        std::fs::write(dir.join("plot.txt"), self.plot_declaration())?;
        Ok(())
    }

    fn plot_declaration(&self) -> String {
        match self.config.task {
            Task::Entropy | Task::VerifyCorollary => {
                "file entropy_rates.csv\nx eps\ny rate\nscale-x log\n".into()
            }
            Task::LocalEntropy | Task::VerifyTheorem => {
                "file local_entropy.csv\nx eps\ny rate\nscale-x log\n".into()
            }
            Task::BoundCurve | Task::ScheduleReport => {
                "file bound_curve.csv\nx n\ny a\nscale-y log\n".into()
            }
            Task::CertifyEnvelopes => "file envelope.csv\nx n\ny worst_margin\n".into(),
        }
    }
}

fn fnum(v: f64) -> String {
    format!("{v:.12e}")
}

fn deadline_of(cfg: &ExperimentConfig) -> Option<Instant> {
    cfg.budget_seconds
        .map(|s| Instant::now() + Duration::from_secs_f64(s))
}

fn resolve(cfg: &ExperimentConfig) -> Result<NamedSystem> {
    by_name(&cfg.system)
}

fn rate_csv(system: &str, rates: &[(f64, ScaleRate)]) -> (String, String) {
    let mut counts = String::from("system,eps,n,s_lower,r_upper,method,grid_g\n");
    let mut fits =
        String::from("system,eps,rate,half_width,residual,window_lo,window_hi,truncated,partial\n");
    for (eps, rate) in rates {
        for sr in &rate.counts {
            let _ = writeln!(
                counts,
                "{system},{},{},{},{},{},{}",
                fnum(*eps),
                sr.n,
                sr.s_lower.map_or(String::new(), |v| v.to_string()),
                sr.r_upper.map_or(String::new(), |v| v.to_string()),
                sr.method,
                sr.grid_g
            );
        }
        let e = &rate.estimate;
        let _ = writeln!(
            fits,
            "{system},{},{},{},{},{},{},{},{}",
            fnum(*eps),
            fnum(e.value),
            fnum(e.half_width),
            fnum(e.residual),
            e.window.0,
            e.window.1,
            rate.truncated,
            rate.partial
        );
    }
    (counts, fits)
}

/// Sandwich verdict over all computed count instances: within one scale
/// `r_upper <= s_lower`, and across octave pairs `s_lower(2 eps) <=
/// r_upper(eps)` at equal `n`.
fn sandwich_verdict(rates: &[(f64, ScaleRate)]) -> Verdict {
    let mut checked = 0usize;
    let mut failed = 0usize;
    for (_, rate) in rates {
        for sr in &rate.counts {
            if let (Some(s), Some(r)) = (sr.s_lower, sr.r_upper) {
                checked += 1;
                if r > s {
                    failed += 1;
                }
            }
        }
    }
    for a in rates {
        for b in rates {
            if (a.0 - 2.0 * b.0).abs() > 1e-12 * a.0 {
                continue;
            }
            for sa in &a.1.counts {
                for sb in &b.1.counts {
                    if sa.n != sb.n {
                        continue;
                    }
                    if let (Some(s2), Some(r)) = (sa.s_lower, sb.r_upper) {
                        checked += 1;
                        if s2 > r {
                            failed += 1;
                        }
                    }
                }
            }
        }
    }
    Verdict {
        name: "sandwich".into(),
        pass: failed == 0 && checked > 0,
        detail: format!("{failed} violations over {checked} instances"),
    }
}

fn run_entropy(cfg: &ExperimentConfig) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    let named = resolve(cfg)?;
    let sys = named.system();
    let mut opts = RateOptions::new(cfg.window);
    opts.deadline = deadline_of(cfg);
    let rates = entropy_limit_fit(sys, cfg.grid_g, &cfg.eps_ladder, &opts)?;
    let partial = rates.iter().any(|(_, r)| r.partial);
    let (counts, fits) = rate_csv(&cfg.system, &rates);
    let verdicts = vec![sandwich_verdict(&rates)];
    Ok((
        vec![
            ("entropy_counts.csv".into(), counts),
            ("entropy_rates.csv".into(), fits),
        ],
        verdicts,
        partial,
    ))
}

fn local_csv(system: &str, sups: &[LocalEntropyEstimate]) -> String {
    let mut out = String::from("system,eps,center,n_proxy,stabilized,ball_cells,rate,residual\n");
    for sup in sups {
        for rec in &sup.per_center {
            let center = rec
                .center
                .iter()
                .map(|c| format!("{c:.9}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                out,
                "{system},{},{center},{},{},{},{},{}",
                fnum(sup.eps),
                sup.n_proxy,
                rec.stabilized,
                rec.ball_cells,
                fnum(rec.estimate.value),
                fnum(rec.estimate.residual)
            );
        }
    }
    out
}

fn run_local(cfg: &ExperimentConfig) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    let named = resolve(cfg)?;
    let sys = named.system();
    let plan = SamplingPlan {
        lattice_g: 3,
        quasi_random: cfg.centers,
        seed: cfg.seed,
    };
    let params = LocalParams {
        n_proxy: cfg.n_proxy,
        window: cfg.window,
        grid_g: cfg.grid_g,
    };
    let mut sups = Vec::new();
    for &eps in &cfg.eps_ladder {
        sups.push(local_entropy_sup(sys, eps, &plan, &params)?);
    }
    let mut summary = String::from("system,eps,value,argmax,stabilized_frac,half_width\n");
    for sup in &sups {
        let argmax = sup
            .argmax_center
            .iter()
            .map(|c| format!("{c:.9}"))
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            summary,
            "{},{},{},{argmax},{},{}",
            cfg.system,
            fnum(sup.eps),
            fnum(sup.value),
            fnum(sup.stabilized_frac),
            fnum(sup.half_width)
        );
    }
    let nonneg = sups.iter().all(|s| s.value >= 0.0);
    let verdicts = vec![Verdict {
        name: "local-entropy-nonnegative".into(),
        pass: nonneg,
        detail: String::new(),
    }];
    Ok((
        vec![
            ("local_entropy.csv".into(), local_csv(&cfg.system, &sups)),
            ("local_entropy_summary.csv".into(), summary),
        ],
        verdicts,
        false,
    ))
}

fn default_schedule(named: &NamedSystem) -> BoundSchedule {
    match named {
        // the suspension's own L-tilde sits below the base L0 by
        // construction; the schedule keeps the base L0
        NamedSystem::Suspended(s) => {
            BoundSchedule::for_system(&s.base, MuNuModel::Default, SRule::default())
        }
        NamedSystem::Plain(s) => BoundSchedule::for_system(s, MuNuModel::Default, SRule::default()),
    }
}

fn run_bound_curve(cfg: &ExperimentConfig) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    let named = resolve(cfg)?;
    let sched = default_schedule(&named);
    let threshold = sched.n_threshold();
    let mut out = String::from("n,s,ln_delta,a,hloc_bound\n");
    for n in 1..=10_000usize {
        let hloc = if n >= threshold {
            fnum(sched.hloc_bound(n)?)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{n},{},{},{},{hloc}",
            sched.s_of_n(n),
            fnum(sched.ln_delta(n)),
            fnum(sched.a_at(n))
        );
    }
    let verdicts = vec![Verdict {
        name: "bound-curve-threshold".into(),
        pass: true,
        detail: format!("n_threshold {threshold}"),
    }];
    Ok((vec![("bound_curve.csv".into(), out)], verdicts, false))
}

/// Theorem-shape check: fit `C` once at the largest eps, then require
/// `h_loc(eps) <= C a(eps) + slack` down the ladder.
pub fn verify_theorem(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run_with(cfg, Task::VerifyTheorem)
}

/// Corollary-shape check: `h(f) - h(f, eps) <= C a(eps) + slack` with the
/// same anchored-C protocol.
pub fn verify_corollary(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run_with(cfg, Task::VerifyCorollary)
}

fn run_verify_theorem(
    cfg: &ExperimentConfig,
) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    if cfg.eps_ladder.len() < 3 {
        return Err(Error::Config(
            "verify-theorem needs an eps ladder of length >= 3".into(),
        ));
    }
    let named = resolve(cfg)?;
    let sys = named.system();
    let sched = default_schedule(&named);
    let plan = SamplingPlan {
        lattice_g: 3,
        quasi_random: cfg.centers,
        seed: cfg.seed,
    };
    let params = LocalParams {
        n_proxy: cfg.n_proxy,
        window: cfg.window,
        grid_g: cfg.grid_g,
    };
    let mut sups = Vec::new();
    for &eps in &cfg.eps_ladder {
        sups.push(local_entropy_sup(sys, eps, &plan, &params)?);
    }
    let anchor = &sups[0];
    let c = anchor.value / sched.a_of_t(anchor.eps);
    let mut table = String::from("system,eps,hloc,a,c_times_a,slack,pass\n");
    let mut all_pass = true;
    for sup in &sups {
        let bound = c * sched.a_of_t(sup.eps);
        let slack = anchor.half_width + sup.half_width + 1e-9;
        let pass = sup.value <= bound + slack;
        all_pass &= pass;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{pass}",
            cfg.system,
            fnum(sup.eps),
            fnum(sup.value),
            fnum(sched.a_of_t(sup.eps)),
            fnum(bound),
            fnum(slack)
        );
    }
    let verdicts = vec![Verdict {
        name: "theorem-shape".into(),
        pass: all_pass,
        detail: format!("C = {c:.6e} anchored at eps = {}", anchor.eps),
    }];
    Ok((
        vec![
            ("local_entropy.csv".into(), local_csv(&cfg.system, &sups)),
            ("theorem.csv".into(), table),
        ],
        verdicts,
        false,
    ))
}

fn run_verify_corollary(
    cfg: &ExperimentConfig,
) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    if cfg.eps_ladder.len() < 3 {
        return Err(Error::Config(
            "verify-corollary needs an eps ladder of length >= 3".into(),
        ));
    }
    let named = resolve(cfg)?;
    let sys = named.system();
    let sched = default_schedule(&named);
    let mut opts = RateOptions::new(cfg.window);
    opts.deadline = deadline_of(cfg);
    let rates = entropy_limit_fit(sys, cfg.grid_g, &cfg.eps_ladder, &opts)?;
    let partial = rates.iter().any(|(_, r)| r.partial);
    let h = sys
        .exact_entropy
        .unwrap_or_else(|| rates.last().unwrap().1.estimate.value);
    let anchor = &rates[0];
    let anchor_gap = (h - anchor.1.estimate.value).max(0.0);
    let c = anchor_gap / sched.a_of_t(anchor.0);
    let mut table = String::from("system,eps,h,h_eps,gap,c_times_a,slack,pass\n");
    let mut all_pass = true;
    for (eps, rate) in &rates {
        let gap = h - rate.estimate.value;
        let bound = c * sched.a_of_t(*eps);
        let slack = anchor.1.estimate.half_width + rate.estimate.half_width + 1e-9;
        let pass = gap <= bound + slack;
        all_pass &= pass;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{pass}",
            cfg.system,
            fnum(*eps),
            fnum(h),
            fnum(rate.estimate.value),
            fnum(gap),
            fnum(bound),
            fnum(slack)
        );
    }
    let (counts, fits) = rate_csv(&cfg.system, &rates);
    let verdicts = vec![
        sandwich_verdict(&rates),
        Verdict {
            name: "corollary-shape".into(),
            pass: all_pass,
            detail: format!("C = {c:.6e} anchored at eps = {}", anchor.0),
        },
    ];
    Ok((
        vec![
            ("entropy_counts.csv".into(), counts),
            ("entropy_rates.csv".into(), fits),
            ("corollary.csv".into(), table),
        ],
        verdicts,
        partial,
    ))
}

fn run_certify_envelopes(
    cfg: &ExperimentConfig,
) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    let named = resolve(cfg)?;
    let sys = named.system();
    if !sys.has_jets() {
        return Err(Error::NoJet(sys.name.clone()));
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = sys.space.dim();
    let mut out = String::from("system,n,k,samples,violations,worst_margin\n");
    let mut total_violations = 0usize;
    let samples = 1_000usize;
    for n in 1..=6usize {
        let mut worst = vec![f64::NEG_INFINITY; 5];
        let mut violations = vec![0usize; 5];
        for _ in 0..samples {
            let mut x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            sys.space.normalize(&mut x);
            let norms = jet_norms(sys, &x, n, 5)?;
            for (k1, est) in norms.iter().enumerate() {
                if *est <= 0.0 {
                    continue;
                }
                let mut alpha = vec![0usize; m];
                alpha[0] = k1 + 1;
                let env = CauchyEnvelope {
                    m,
                    m0: sys.m0,
                    rho: sys.rho,
                    l0: sys.l0,
                    n,
                };
                let b = cauchy_derivative_bound(&env, &alpha);
                let margin = est.ln() - b.ln_post;
                if margin > worst[k1] {
                    worst[k1] = margin;
                }
                if margin > 1e-9 {
                    violations[k1] += 1;
                }
            }
        }
        for k1 in 0..5 {
            total_violations += violations[k1];
            let _ = writeln!(
                out,
                "{},{n},{},{samples},{},{}",
                cfg.system,
                k1 + 1,
                violations[k1],
                if worst[k1].is_finite() {
                    fnum(worst[k1])
                } else {
                    String::new()
                }
            );
        }
    }
    // rescaled-chart certificate alongside the raw envelope sweep
    let mut x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    sys.space.normalize(&mut x);
    let rm = RescaledMap::new(sys, &x, 3, 3)?;
    let rep = check_rescaled_bound(&rm, 3.min(5), 200)?;
    total_violations += rep.violations;
    let verdicts = vec![Verdict {
        name: "envelope-certification".into(),
        pass: total_violations == 0,
        detail: format!(
            "{total_violations} violations; rescaled worst margin {:.3e}",
            rep.worst_margin
        ),
    }];
    Ok((vec![("envelope.csv".into(), out)], verdicts, false))
}

fn run_schedule_report(
    cfg: &ExperimentConfig,
) -> Result<(Vec<(String, String)>, Vec<Verdict>, bool)> {
    let named = resolve(cfg)?;
    let sched = default_schedule(&named);
    let report = sched.schedule_conditions_check(1_000_000)?;
    let threshold = sched.n_threshold();
    let decade_ok = sched.a_at(1_000_000) < 0.2 * sched.a_at(10);
    let mut text = String::new();
    let _ = writeln!(text, "schedule report for {}", cfg.system);
    let _ = writeln!(text, "model {}", sched.model.label());
    let _ = writeln!(text, "s rule {}", sched.s_rule.label());
    let _ = writeln!(text, "n_threshold {threshold}");
    let _ = writeln!(text, "last s jump {:?}", report.last_s_jump);
    let _ = writeln!(
        text,
        "mu ratio ln peak {:.6} final {:.6}",
        report.mu_peak_ln, report.mu_final_ln
    );
    let _ = writeln!(
        text,
        "nu ratio ln peak {:.6} final {:.6}",
        report.nu_peak_ln, report.nu_final_ln
    );
    let _ = writeln!(text, "a(delta(1e6)) < 0.2 a(delta(10)): {decade_ok}");
    let verdicts = vec![Verdict {
        name: "schedule-health".into(),
        pass: decade_ok,
        detail: format!("n_threshold {threshold}"),
    }];
    Ok((vec![("schedule_report.txt".into(), text)], verdicts, false))
}

fn run_with(cfg: &ExperimentConfig, task: Task) -> Result<RunRecord> {
    let mut cfg = cfg.clone();
    cfg.task = task;
    run(&cfg)
}

/// Execute one experiment; callers decide whether to persist via
/// [`RunRecord::write_outputs`].
pub fn run(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    if let Some(w) = cfg.workers {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    let start = Instant::now();
    let (csv, verdicts, partial) = match cfg.task {
        Task::Entropy => run_entropy(cfg)?,
        Task::LocalEntropy => run_local(cfg)?,
        Task::BoundCurve => run_bound_curve(cfg)?,
        Task::VerifyTheorem => run_verify_theorem(cfg)?,
        Task::VerifyCorollary => run_verify_corollary(cfg)?,
        Task::CertifyEnvelopes => run_certify_envelopes(cfg)?,
        Task::ScheduleReport => run_schedule_report(cfg)?,
    };
    let record = RunRecord {
        config: cfg.clone(),
        version: ARTIFACT_VERSION,
        wall_seconds: start.elapsed().as_secs_f64(),
        csv,
        verdicts,
        partial,
    };
    record.write_outputs()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_entropy_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.system = "doubling".into();
        cfg.task = Task::Entropy;
        cfg.eps_ladder = vec![0.0625, 0.03125];
        cfg.grid_g = 12;
        cfg.window = (4, 10);
        cfg
    }

    #[test]
    fn entropy_task_near_ln2() {
        let rec = run(&quick_entropy_cfg()).unwrap();
        assert!(rec.all_pass());
        let fits = &rec.csv.iter().find(|(n, _)| n == "entropy_rates.csv").unwrap().1;
        let last = fits.lines().last().unwrap();
        let rate: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
        assert!((rate - 2.0f64.ln()).abs() < 0.1 * 2.0f64.ln(), "rate {rate}");
    }

    #[test]
    fn bound_curve_rows() {
        let mut cfg = ExperimentConfig::default();
        cfg.task = Task::BoundCurve;
        let rec = run(&cfg).unwrap();
        let curve = &rec.csv[0].1;
        assert_eq!(curve.lines().count(), 10_001, "header plus one row per n");
    }

    #[test]
    fn determinism_byte_identical() {
        let cfg = quick_entropy_cfg();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.csv, b.csv);
    }

    #[test]
    fn theorem_rotation_passes() {
        let mut cfg = ExperimentConfig::default();
        cfg.task = Task::VerifyTheorem;
        cfg.system = "rotation:0.30902".into();
        cfg.eps_ladder = vec![0.25, 0.125, 0.0625];
        cfg.grid_g = 12;
        cfg.window = (1, 5);
        cfg.n_proxy = 8;
        cfg.centers = 16;
        let rec = verify_theorem(&cfg).unwrap();
        assert!(rec.all_pass());
    }

    #[test]
    fn corollary_identity_trivial() {
        let mut cfg = ExperimentConfig::default();
        cfg.task = Task::VerifyCorollary;
        cfg.system = "identity".into();
        cfg.eps_ladder = vec![0.25, 0.125, 0.0625];
        cfg.grid_g = 10;
        cfg.window = (2, 6);
        let rec = verify_corollary(&cfg).unwrap();
        assert!(rec.all_pass());
    }

    #[test]
    fn outputs_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick_entropy_cfg();
        cfg.output_dir = Some(dir.path().to_path_buf());
        run(&cfg).unwrap();
        for f in ["entropy_rates.csv", "config.txt", "verdicts.txt", "plot.txt"] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
    }

    #[test]
    fn unknown_system_is_config_error() {
        let mut cfg = ExperimentConfig::default();
        cfg.system = "mystery".into();
        assert!(run(&cfg).is_err());
    }
}
