//! The delta(n)/s(n)/a(t) schedule and the local-entropy bound chain.
//!
//! `delta(n) = (L0^n n^2)^{-1}` links scales to times; `s(n)` is a slowly
//! growing smoothing order; `a(t)` is the piecewise-constant modulus from
//! those two. All arithmetic is in log-space so the schedule survives
//! `L0^n` at `n = 10^6`.

use crate::bounds::envelope::compute_c0;
use crate::error::{Error, Result};
use crate::system::AnalyticSystem;

/// Rule for the smoothing order `s(n)`, always clamped to `[1, n]`.
#[derive(Debug, Clone)]
pub enum SRule {
    /// `max(1, floor((ln n)^p))`; the default uses `p = 0.6`
    LogPow(f64),
    /// `ceil(sqrt(n))`
    CeilSqrtN,
    /// constant order (violates the growth condition; for counterexamples)
    Constant(usize),
    /// `s(n) = n` (violates the slow-growth condition; for counterexamples)
    Identity,
}

impl Default for SRule {
    fn default() -> Self {
        SRule::LogPow(0.6)
    }
}

impl SRule {
    pub fn s(&self, n: usize) -> usize {
        assert!(n >= 1);
        let raw = match self {
            SRule::LogPow(p) => (n as f64).ln().max(0.0).powf(*p).floor() as usize,
            SRule::CeilSqrtN => (n as f64).sqrt().ceil() as usize,
            SRule::Constant(k) => *k,
            SRule::Identity => n,
        };
        raw.clamp(1, n)
    }

    pub fn label(&self) -> String {
        match self {
            SRule::LogPow(p) => format!("logpow:{p}"),
            SRule::CeilSqrtN => "ceil-sqrt".into(),
            SRule::Constant(k) => format!("constant:{k}"),
            SRule::Identity => "identity".into(),
        }
    }
}

/// Model for the combinatorial constants `mu(s, m)`, `nu(s, m)`.
#[derive(Debug, Clone)]
pub enum MuNuModel {
    /// `mu = 8^m sqrt(s)`, `nu = m sqrt(s)`: grows slowly enough in `s`
    /// that the default `s(n)` passes the slow/converging conditions
    Default,
    /// fixed values, for pinned-constant evaluations
    Constant { mu: f64, nu: f64 },
    /// `mu = 2^{m s}`, `nu = m s`: a deliberate counterexample that
    /// violates the slow condition under fast `s(n)`
    Exponential,
}

impl MuNuModel {
    pub fn ln_mu(&self, s: f64, m: usize) -> f64 {
        assert!(s >= 1.0);
        match self {
            MuNuModel::Default => m as f64 * 8.0f64.ln() + 0.5 * s.ln(),
            MuNuModel::Constant { mu, .. } => mu.ln(),
            MuNuModel::Exponential => m as f64 * s * 2.0f64.ln(),
        }
    }

    pub fn nu(&self, s: f64, m: usize) -> f64 {
        assert!(s >= 1.0);
        match self {
            MuNuModel::Default => m as f64 * s.sqrt(),
            MuNuModel::Constant { nu, .. } => *nu,
            MuNuModel::Exponential => m as f64 * s,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MuNuModel::Default => "default".into(),
            MuNuModel::Constant { mu, nu } => format!("constant:{mu},{nu}"),
            MuNuModel::Exponential => "exponential".into(),
        }
    }
}

/// Everything needed to evaluate the bound chain for one system.
#[derive(Debug, Clone)]
pub struct BoundSchedule {
    pub l0: f64,
    pub m: usize,
    pub rho: f64,
    pub c0: f64,
    pub model: MuNuModel,
    pub s_rule: SRule,
}

const THRESHOLD_SCAN_LIMIT: usize = 1_000_000;

impl BoundSchedule {
    pub fn new(l0: f64, m: usize, rho: f64, c0: f64, model: MuNuModel, s_rule: SRule) -> Self {
        assert!(l0 > 1.0 && m >= 1 && rho > 0.0 && c0 > 0.0);
        BoundSchedule {
            l0,
            m,
            rho,
            c0,
            model,
            s_rule,
        }
    }

    /// Schedule with `C0` derived from the system's certified constants.
    pub fn for_system(sys: &AnalyticSystem, model: MuNuModel, s_rule: SRule) -> Self {
        let m = sys.space.dim();
        let c0 = compute_c0(m, sys.m0, sys.rho);
        BoundSchedule::new(sys.l0, m, sys.rho, c0, model, s_rule)
    }

    pub fn s_of_n(&self, n: usize) -> usize {
        self.s_rule.s(n)
    }

    /// `ln delta(n)` with `delta(n) = L0^{-n} n^{-2}`.
    pub fn ln_delta(&self, n: usize) -> f64 {
        assert!(n >= 1);
        -(n as f64) * self.l0.ln() - 2.0 * (n as f64).ln()
    }

    pub fn delta_of_n(&self, n: usize) -> f64 {
        self.ln_delta(n).exp()
    }

    /// The branch index `n` with `delta(n+1) < t <= delta(n)`; `None` when
    /// `t > delta(1)` (the constant-1 branch of `a`).
    pub fn branch_of_t(&self, t: f64) -> Option<usize> {
        assert!(t > 0.0 && t.is_finite());
        let ln_t = t.ln();
        if ln_t > self.ln_delta(1) {
            return None;
        }
        // largest n with ln delta(n) >= ln t
        let mut hi = 2usize;
        while self.ln_delta(hi) >= ln_t {
            if hi > usize::MAX / 4 {
                break;
            }
            hi *= 2;
        }
        let mut lo = 1usize; // invariant: delta(lo) >= t > delta(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.ln_delta(mid) >= ln_t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// `s-bar(t) = s(n)` on the branch containing `t`; requires
    /// `t <= delta(1)`.
    pub fn s_bar(&self, t: f64) -> Result<usize> {
        match self.branch_of_t(t) {
            Some(n) => Ok(self.s_of_n(n)),
            None => Err(Error::ParamOutOfRange(format!(
                "s-bar undefined for t = {t} above delta(1)"
            ))),
        }
    }

    /// `a(delta(n))` evaluated directly on branch `n` (log-space safe for
    /// huge `n`).
    pub fn a_at(&self, n: usize) -> f64 {
        1.0 / self.s_of_n(n) as f64 + 1.0 / (-self.ln_delta(n)).sqrt()
    }

    /// The modulus `a(t)`: 1 above `delta(1)`, otherwise
    /// `1/s-bar(delta(n)) + 1/sqrt(-ln delta(n))` on branch `n`.
    pub fn a_of_t(&self, t: f64) -> f64 {
        match self.branch_of_t(t) {
            None => 1.0,
            Some(n) => self.a_at(n),
        }
    }

    /// `ln C_n` with `C_n = C0 L0^n`.
    pub fn ln_c_n(&self, n: usize) -> f64 {
        self.c0.ln() + n as f64 * self.l0.ln()
    }

    /// The "large n" side condition: `delta(n)` below both scale guards and
    /// the logarithmic smallness `ln(4 sqrt(m) n^2 / rho) / n < 1`.
    pub fn large_n_check(&self, n: usize) -> bool {
        let ld = self.ln_delta(n);
        let nf = n as f64;
        let geo = (4.0 * (self.m as f64).sqrt() / self.rho).ln();
        let cond1 = ld <= -(geo + nf * self.l0.ln() + nf.ln());
        let cond2 = ld <= self.rho.ln() - nf * self.l0.ln();
        let cond3 = (geo + 2.0 * nf.ln()) / nf < 1.0;
        cond1 && cond2 && cond3
    }

    /// First `n >= 3` passing `large_n_check`.
    pub fn n_threshold(&self) -> usize {
        for n in 3..=THRESHOLD_SCAN_LIMIT {
            if self.large_n_check(n) {
                return n;
            }
        }
        panic!("no large-n threshold below {THRESHOLD_SCAN_LIMIT}");
    }

    /// `ln kappa = ln mu + nu ln ln C_n + (2m/s) ln C_n`.
    pub fn ln_kappa(&self, n: usize, s: usize) -> Result<f64> {
        assert!(s >= 1 && s <= n);
        let ln_cn = self.ln_c_n(n);
        if ln_cn <= 1.0 {
            return Err(Error::ScaleTooSmall(ln_cn));
        }
        let sf = s as f64;
        Ok(self.model.ln_mu(sf, self.m)
            + self.model.nu(sf, self.m) * ln_cn.ln()
            + 2.0 * self.m as f64 / sf * ln_cn)
    }

    /// The per-step local-entropy bound `(1/n) ln kappa` at `s = s(n)`,
    /// cross-checked against the expanded display form.
    pub fn hloc_bound(&self, n: usize) -> Result<f64> {
        let threshold = self.n_threshold();
        if n < threshold {
            return Err(Error::BelowThreshold { n, threshold });
        }
        let s = self.s_of_n(n) as f64;
        let nf = n as f64;
        let ln_cn = self.ln_c_n(n);
        let primary = (2.0 * self.m as f64 / s * ln_cn
            + self.model.nu(s, self.m) * ln_cn.ln()
            + self.model.ln_mu(s, self.m))
            / nf;
        let expanded = 2.0 * self.m as f64 / s * (self.c0.ln() / nf + self.l0.ln())
            + (self.model.nu(s, self.m) * (nf * self.l0.ln() + self.c0.ln()).ln()
                + self.model.ln_mu(s, self.m))
                / nf;
        assert!(
            (primary - expanded).abs() <= 1e-10 * primary.abs().max(1.0),
            "bound chain algebra mismatch: {primary} vs {expanded}"
        );
        Ok(primary)
    }

    /// Verify the schedule side conditions up to `n_max`: monotone `s` with
    /// unit increments and `s <= n`, growth of `s`, and the slow-growth of
    /// `mu`/`nu` against `n^{1/4}` (finite-horizon proxy: eventually
    /// decreasing on a dyadic ladder, final value below 10% of peak).
    pub fn schedule_conditions_check(&self, n_max: usize) -> Result<ScheduleReport> {
        assert!(n_max >= 100);
        let md = self.m + 1;
        let mut prev = self.s_of_n(1);
        let mut last_jump = None;
        let mut mu_peak = f64::NEG_INFINITY;
        let mut nu_peak = f64::NEG_INFINITY;
        let mut mu_final = 0.0;
        let mut nu_final = 0.0;
        for n in 1..=n_max {
            let s = self.s_of_n(n);
            if n > 1 {
                if s < prev {
                    return Err(Error::Config(format!("increasing: s drops at n = {n}")));
                }
                if s - prev > 1 {
                    return Err(Error::Config(format!(
                        "increasing: jump larger than 1 at n = {n}"
                    )));
                }
                if s > prev {
                    last_jump = Some(n);
                }
            }
            if s > n {
                return Err(Error::Config(format!("increasing: s(n) > n at n = {n}")));
            }
            prev = s;
            let sf = s as f64;
            let quarter = 0.25 * (n as f64).ln();
            let mu_r = self.model.ln_mu(sf, md) - quarter;
            let nu_val = self.model.nu(sf, md);
            let nu_r = if nu_val > 0.0 {
                nu_val.ln() - quarter
            } else {
                f64::NEG_INFINITY
            };
            mu_peak = mu_peak.max(mu_r);
            nu_peak = nu_peak.max(nu_r);
            if n == n_max {
                mu_final = mu_r;
                nu_final = nu_r;
            }
        }
        if self.s_of_n(n_max) <= self.s_of_n(1) {
            return Err(Error::Config(format!(
                "increasing: s fails to grow by n = {n_max}"
            )));
        }
        // eventually decreasing, read on a factor-4 ladder: a unit jump of s
        // can raise mu by up to sqrt(2), which quadrupling n always absorbs
        // (4^{1/4} = sqrt(2)); a dyadic ladder would flag those jumps
        let mut k = 64usize;
        while 4 * k <= n_max {
            let r = |n: usize| self.model.ln_mu(self.s_of_n(n) as f64, md) - 0.25 * (n as f64).ln();
            if r(4 * k) > r(k) + 1e-12 {
                return Err(Error::Config(format!(
                    "slow: mu ratio increases from n = {k} to {}",
                    4 * k
                )));
            }
            k *= 4;
        }
        let tol = 0.1f64.ln();
        if mu_final > mu_peak + tol {
            return Err(Error::Config(format!(
                "slow: mu ratio at n = {n_max} above 10% of peak"
            )));
        }
        if nu_final > nu_peak + tol {
            return Err(Error::Config(format!(
                "slow: nu ratio at n = {n_max} above 10% of peak"
            )));
        }
        Ok(ScheduleReport {
            n_max,
            mu_peak_ln: mu_peak,
            mu_final_ln: mu_final,
            nu_peak_ln: nu_peak,
            nu_final_ln: nu_final,
            last_s_jump: last_jump,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleReport {
    pub n_max: usize,
    pub mu_peak_ln: f64,
    pub mu_final_ln: f64,
    pub nu_peak_ln: f64,
    pub nu_final_ln: f64,
    pub last_s_jump: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct SmallLipschitz {
    /// first time the scale condition `delta(n) <= rho-tilde L-tilde^{-n}`
    /// holds
    pub n1: usize,
    /// the dimension-aware bound value at `n`
    pub bound: f64,
    /// implied constant `C1 = bound / a(delta(n))`
    pub c1: f64,
}

/// Bound chain for a map whose own Lipschitz constant sits strictly below
/// the schedule's `L0`, evaluated at time `n`.
pub fn small_lipschitz_bound(
    sys: &AnalyticSystem,
    sched: &BoundSchedule,
    n: usize,
) -> Result<SmallLipschitz> {
    let l_tilde = sys.l0;
    if l_tilde >= sched.l0 {
        return Err(Error::LipschitzPrecondition {
            ltilde: l_tilde,
            l0: sched.l0,
        });
    }
    let mut n1 = None;
    for k in 1..=THRESHOLD_SCAN_LIMIT {
        if sched.ln_delta(k) <= sys.rho.ln() - k as f64 * l_tilde.ln() {
            n1 = Some(k);
            break;
        }
    }
    let n1 = n1.expect("scale condition must eventually hold for L-tilde < L0");
    if n < n1 {
        return Err(Error::BelowThreshold { n, threshold: n1 });
    }
    let md = sys.space.dim();
    let c0t = compute_c0(md, sys.m0, sys.rho);
    let s = sched.s_of_n(n) as f64;
    let nf = n as f64;
    let bound = 2.0 * md as f64 / s * (c0t.ln() + l_tilde.ln())
        + (sched.model.nu(s, md) * (nf * l_tilde.ln() + c0t.ln()).ln()
            + sched.model.ln_mu(s, md))
            / nf;
    let c1 = bound / sched.a_at(n);
    Ok(SmallLipschitz { n1, bound, c1 })
}
