//! Benchmark systems with exactly known entropy, plus the mapping-torus
//! suspension and its time-1/i map.
//!
//! Certified constants: `l0` is a closed-form bound on `sup ||Df||`, `rho` an
//! analytic radius on which the complex extension stays bounded by `m0`. All
//! of them are deliberately conservative.

use crate::error::{Error, Result};
use crate::space::StateSpace;
use crate::system::{empirical_lipschitz, AnalyticSystem, MapRule};

pub fn identity() -> AnalyticSystem {
    AnalyticSystem {
        name: "identity".into(),
        space: StateSpace::torus(1),
        rule: MapRule::Identity,
        l0: 1.0 + 1e-9,
        rho: 0.5,
        m0: 1.5,
        exact_entropy: Some(0.0),
    }
}

pub fn doubling() -> AnalyticSystem {
    AnalyticSystem {
        name: "doubling".into(),
        space: StateSpace::torus(1),
        rule: MapRule::Doubling,
        l0: 2.0,
        rho: 0.5,
        // sup |2z| over |z - x| <= 1/2, x in [0,1)
        m0: 3.0,
        exact_entropy: Some(2.0f64.ln()),
    }
}

pub fn rotation(alpha: f64) -> AnalyticSystem {
    AnalyticSystem {
        name: format!("rotation:{alpha}"),
        space: StateSpace::torus(1),
        rule: MapRule::Rotation { alpha },
        // isometry; L0 must still exceed 1
        l0: 1.0 + 1e-9,
        rho: 0.6,
        m0: 1.6 + alpha.abs(),
        exact_entropy: Some(0.0),
    }
}

/// `x -> 2x + c sin(2 pi x) mod 1`; requires `|c| < 1/(2 pi)` so the map stays
/// a degree-2 covering of the circle.
pub fn trig(c: f64) -> Result<AnalyticSystem> {
    let two_pi = 2.0 * std::f64::consts::PI;
    if c.abs() >= 1.0 / two_pi {
        return Err(Error::ParamOutOfRange(format!(
            "trig coefficient |{c}| must be below 1/(2 pi)"
        )));
    }
    let rho = 0.2;
    Ok(AnalyticSystem {
        name: format!("trig:{c}"),
        space: StateSpace::torus(1),
        rule: MapRule::Trig { c },
        l0: 2.0 + two_pi * c.abs(),
        rho,
        // |2z| + |c sin(2 pi z)| <= 2(1 + rho) + |c| cosh(2 pi rho)
        m0: 2.0 * (1.0 + rho) + c.abs() * (two_pi * rho).cosh(),
        exact_entropy: Some(2.0f64.ln()),
    })
}

/// Spectral norm of a 2x2 matrix (largest singular value).
fn spectral_norm_2x2(a: [[f64; 2]; 2]) -> f64 {
    // eigenvalues of A^T A
    let g00 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    let g01 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    let g11 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    let tr = g00 + g11;
    let det = g00 * g11 - g01 * g01;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    ((tr + disc) / 2.0).sqrt()
}

/// Entropy of a unimodular integer matrix: sum of `ln |lambda|` over
/// eigenvalues of modulus above 1.
fn toral_entropy(a: [[i64; 2]; 2]) -> f64 {
    let tr = (a[0][0] + a[1][1]) as f64;
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) as f64;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        let l1 = ((tr + r) / 2.0).abs();
        let l2 = ((tr - r) / 2.0).abs();
        let mut h = 0.0;
        if l1 > 1.0 {
            h += l1.ln();
        }
        if l2 > 1.0 {
            h += l2.ln();
        }
        h
    } else {
        // complex pair of modulus sqrt(|det|) = 1
        0.0
    }
}

pub fn toral_automorphism(a: [[i64; 2]; 2]) -> Result<AnalyticSystem> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det != 1 && det != -1 {
        return Err(Error::NonUnimodular(det));
    }
    let af = [
        [a[0][0] as f64, a[0][1] as f64],
        [a[1][0] as f64, a[1][1] as f64],
    ];
    let l0 = spectral_norm_2x2(af).max(1.0 + 1e-9);
    let rho = 0.25;
    let row_sum = (af[0][0].abs() + af[0][1].abs()).max(af[1][0].abs() + af[1][1].abs());
    Ok(AnalyticSystem {
        name: format!(
            "toral:{},{},{},{}",
            a[0][0], a[0][1], a[1][0], a[1][1]
        ),
        space: StateSpace::torus(2),
        rule: MapRule::Toral { a },
        l0,
        rho,
        m0: row_sum * (1.0 + rho) * 2.0f64.sqrt(),
        exact_entropy: Some(toral_entropy(a)),
    })
}

/// Arnold cat map `[[2,1],[1,1]]`.
pub fn cat_map() -> AnalyticSystem {
    let mut sys = toral_automorphism([[2, 1], [1, 1]]).expect("unimodular");
    sys.name = "cat".into();
    sys
}

pub fn logistic() -> AnalyticSystem {
    AnalyticSystem {
        name: "logistic".into(),
        space: StateSpace::cube(1),
        rule: MapRule::Logistic,
        l0: 4.0,
        rho: 0.25,
        // sup |4z(1-z)| over |z - x| <= 1/4, x in [0,1]
        m0: 6.25,
        exact_entropy: Some(2.0f64.ln()),
    }
}

/// A suspension (mapping torus) of a base system, represented through its
/// time-1/i flow map.
#[derive(Debug, Clone)]
pub struct SuspensionSystem {
    /// Time-1/i map of the suspension flow, as a full system on the
    /// mapping-torus space.
    pub system: AnalyticSystem,
    pub base: AnalyticSystem,
    pub i: u32,
}

impl SuspensionSystem {
    /// Apply the time-1/i map `i` times: the time-1 map of the flow.
    pub fn time_one(&self, z: &[f64]) -> Vec<f64> {
        let mut cur = z.to_vec();
        for _ in 0..self.i {
            cur = self.system.eval(&cur);
        }
        cur
    }

    /// Max deviation of the section return map from the base map over the
    /// sample points: composing the time-1/i map i times from `(0, x)` must
    /// land on `(0, f(x))`.
    pub fn section_conjugacy_error(&self, samples: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for x in samples {
            let mut z = vec![0.0];
            z.extend_from_slice(x);
            let w = self.time_one(&z);
            let fx = self.base.eval(x);
            let mut err = w[0].min(1.0 - w[0]).abs();
            for (a, b) in w[1..].iter().zip(&fx) {
                err = err.max((a - b).abs());
            }
            if err > worst {
                worst = err;
            }
        }
        worst
    }
}

fn suspension_candidate(base: &AnalyticSystem, i: u32, l0: f64) -> AnalyticSystem {
    AnalyticSystem {
        name: format!("suspend:{}:{i}", base.name),
        space: StateSpace::Suspension {
            base: Box::new(base.clone()),
        },
        rule: MapRule::SuspensionStep {
            base: Box::new(base.clone()),
            i,
        },
        l0,
        rho: base.rho * 0.5,
        // nominal: no certified complex extension for the flow map
        m0: base.m0 + 1.0,
        exact_entropy: None,
    }
}

const SUSPEND_MAX_I: u64 = 1_000_000;
const SUSPEND_PAIRS: usize = 10_000;
const SUSPEND_SEED: u64 = 0x5u64 ^ 0x1157;

fn suspension_sup(base: &AnalyticSystem, i: u32, target: f64) -> f64 {
    let cand = suspension_candidate(base, i, target);
    empirical_lipschitz(&cand, SUSPEND_PAIRS, SUSPEND_SEED)
}

/// Choose the smallest subdivision `i` whose time-1/i map has empirical
/// `sup ||D psi^{1/i}||` below `l0_target` (with a small safety margin), and
/// return the suspension built with it. The empirical sup is nonincreasing in
/// `i` for the interpolated mapping-torus metric, so a bracketing search over
/// `i` is sound; minimality is confirmed at `i - 1`.
pub fn suspend(base: &AnalyticSystem, l0_target: f64) -> Result<SuspensionSystem> {
    if l0_target <= 1.0 {
        return Err(Error::ParamOutOfRange(format!(
            "l0_target {l0_target} must exceed 1"
        )));
    }
    let margin = l0_target * (1.0 - 1e-3);
    let accept = |i: u32| suspension_sup(base, i, l0_target) < margin;

    // fast path plus geometric bracketing
    let mut hi: u64 = 1;
    while hi <= SUSPEND_MAX_I && !accept(hi as u32) {
        hi *= 2;
    }
    if hi > SUSPEND_MAX_I {
        return Err(Error::SuspensionTargetUnreachable {
            max_i: SUSPEND_MAX_I,
            target: l0_target,
        });
    }
    let mut lo = hi / 2; // largest rejected (0 when hi == 1)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accept(mid as u32) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let i = hi as u32;
    Ok(SuspensionSystem {
        system: suspension_candidate(base, i, l0_target),
        base: base.clone(),
        i,
    })
}

/// A zoo system resolved from a name string.
pub enum NamedSystem {
    Plain(AnalyticSystem),
    Suspended(SuspensionSystem),
}

impl NamedSystem {
    pub fn system(&self) -> &AnalyticSystem {
        match self {
            NamedSystem::Plain(s) => s,
            NamedSystem::Suspended(s) => &s.system,
        }
    }
}

/// Resolve `"doubling"`, `"rotation:0.309"`, `"cat"`, `"logistic"`,
/// `"trig:0.05"`, `"identity"`, `"toral:a,b,c,d"`, or
/// `"suspend:<base>:<l0_target>"`.
pub fn by_name(name: &str) -> Result<NamedSystem> {
    let mut parts = name.splitn(2, ':');
    let head = parts.next().unwrap_or_default();
    let rest = parts.next();
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad numeric parameter `{s}` in `{name}`")))
    };
    match head {
        "identity" => Ok(NamedSystem::Plain(identity())),
        "doubling" => Ok(NamedSystem::Plain(doubling())),
        "logistic" => Ok(NamedSystem::Plain(logistic())),
        "cat" => Ok(NamedSystem::Plain(cat_map())),
        "rotation" => {
            let alpha = parse_f64(rest.ok_or_else(|| {
                Error::Config("rotation requires a parameter, e.g. rotation:0.309".into())
            })?)?;
            Ok(NamedSystem::Plain(rotation(alpha)))
        }
        "trig" => {
            let c = parse_f64(rest.ok_or_else(|| {
                Error::Config("trig requires a parameter, e.g. trig:0.05".into())
            })?)?;
            Ok(NamedSystem::Plain(trig(c)?))
        }
        "toral" => {
            let rest = rest
                .ok_or_else(|| Error::Config("toral requires 4 entries a,b,c,d".into()))?;
            let vals: Vec<i64> = rest
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Config(format!("bad matrix entry `{s}`")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != 4 {
                return Err(Error::Config("toral requires 4 entries a,b,c,d".into()));
            }
            Ok(NamedSystem::Plain(toral_automorphism([
                [vals[0], vals[1]],
                [vals[2], vals[3]],
            ])?))
        }
        "suspend" => {
            let rest = rest.ok_or_else(|| {
                Error::Config("suspend requires base and target, e.g. suspend:doubling:1.25".into())
            })?;
            let (base_name, target) = rest.rsplit_once(':').ok_or_else(|| {
                Error::Config("suspend requires base and target, e.g. suspend:doubling:1.25".into())
            })?;
            let base = match by_name(base_name)? {
                NamedSystem::Plain(s) => s,
                NamedSystem::Suspended(_) => {
                    return Err(Error::Config("nested suspensions are not supported".into()))
                }
            };
            Ok(NamedSystem::Suspended(suspend(&base, parse_f64(target)?)?))
        }
        _ => Err(Error::UnknownSystem(name.into())),
    }
}

/// Sampled certification of a system's declared invariants: domain
/// preservation, the Lipschitz bound, and real/complex agreement.
pub fn certify(sys: &AnalyticSystem) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xCE27);
    let m = sys.space.dim();
    for _ in 0..500 {
        let mut x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        sys.space.normalize(&mut x);
        let y = sys.eval(&x);
        let mut y2 = y.clone();
        sys.space.normalize(&mut y2);
        for (a, b) in y.iter().zip(&y2) {
            if (a - b).abs() > 1e-12 {
                return Err(Error::ParamOutOfRange(format!(
                    "{}: eval left the fundamental domain",
                    sys.name
                )));
            }
        }
        if sys.has_complex_extension() {
            let z: Vec<num_complex::Complex64> = x
                .iter()
                .map(|c| num_complex::Complex64::new(*c, 0.0))
                .collect();
            let w = sys.eval_complex(&z)?;
            // compare against the un-normalized real rule via mod-1 agreement
            for (wc, yc) in w.iter().zip(&y) {
                if wc.im.abs() > 1e-12 {
                    return Err(Error::ParamOutOfRange(format!(
                        "{}: complex extension not real on real inputs",
                        sys.name
                    )));
                }
                let diff = match sys.space {
                    StateSpace::Torus { .. } => {
                        let d = (wc.re - yc).rem_euclid(1.0);
                        d.min(1.0 - d)
                    }
                    _ => (wc.re - yc).abs(),
                };
                if diff > 1e-12 {
                    return Err(Error::ParamOutOfRange(format!(
                        "{}: complex/real disagreement {diff}",
                        sys.name
                    )));
                }
            }
        }
    }
    let lip = empirical_lipschitz(sys, 2000, 0xCE27);
    if lip > sys.l0 * (1.0 + 1e-6) {
        return Err(Error::ParamOutOfRange(format!(
            "{}: empirical Lipschitz {lip} exceeds certified {}",
            sys.name, sys.l0
        )));
    }
    Ok(())
}
