//! Dynamical systems on flat model spaces: evaluation, orbit iteration, the
//! n-step Bowen metric, higher-order derivative probes, and the rescaled maps
//! used by the derivative-bound certifiers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{factorial, Jet};
use crate::space::{Point, StateSpace};

/// Closed-form rule of a benchmark map. Keeping an explicit rule (rather than
/// a boxed closure) is what makes Taylor-mode jets and complex extensions
/// available without extra bookkeeping.
#[derive(Debug, Clone)]
pub enum MapRule {
    Identity,
    /// x -> 2x mod 1 on the circle.
    Doubling,
    /// x -> x + alpha mod 1.
    Rotation { alpha: f64 },
    /// x -> 2x + c sin(2 pi x) mod 1; a degree-2 expanding circle map for
    /// |c| < 1/(2 pi).
    Trig { c: f64 },
    /// x -> A x mod 1 on the 2-torus.
    Toral { a: [[i64; 2]; 2] },
    /// x -> 4x(1-x) on [0,1].
    Logistic,
    /// Time-1/i map of the suspension flow over `base`: advances the vertical
    /// coordinate by 1/i and applies the base map when crossing the seam.
    SuspensionStep { base: Box<AnalyticSystem>, i: u32 },
}

/// A self-describing dynamical map together with its certified analytic data:
/// a Lipschitz bound `l0 > 1`, an analytic radius `rho` in (0,1), a sup bound
/// `m0` for the complex extension on radius-`rho` polydiscs, and (for zoo
/// systems) the exact topological entropy.
#[derive(Debug, Clone)]
pub struct AnalyticSystem {
    pub name: String,
    pub space: StateSpace,
    pub rule: MapRule,
    pub l0: f64,
    pub rho: f64,
    pub m0: f64,
    pub exact_entropy: Option<f64>,
}

const SEAM_TOL: f64 = 1e-12;

impl AnalyticSystem {
    /// Apply the map once; the result is normalized into the fundamental domain.
    pub fn eval(&self, x: &[f64]) -> Point {
        let mut out = match &self.rule {
            MapRule::Identity => x.to_vec(),
            MapRule::Doubling => vec![2.0 * x[0]],
            MapRule::Rotation { alpha } => vec![x[0] + alpha],
            MapRule::Trig { c } => {
                vec![2.0 * x[0] + c * (2.0 * std::f64::consts::PI * x[0]).sin()]
            }
            MapRule::Toral { a } => vec![
                a[0][0] as f64 * x[0] + a[0][1] as f64 * x[1],
                a[1][0] as f64 * x[0] + a[1][1] as f64 * x[1],
            ],
            MapRule::Logistic => vec![4.0 * x[0] * (1.0 - x[0])],
            MapRule::SuspensionStep { base, i } => {
                let mut out = x.to_vec();
                out[0] += 1.0 / *i as f64;
                if out[0] >= 1.0 - SEAM_TOL {
                    out[0] -= 1.0;
                    let fx = base.eval(&x[1..]);
                    out[1..].copy_from_slice(&fx);
                }
                out
            }
        };
        self.space.normalize(&mut out);
        out
    }

    pub fn has_complex_extension(&self) -> bool {
        !matches!(self.rule, MapRule::SuspensionStep { .. })
    }

    /// Complex extension of the rule (no wraparound: the extension lives on
    /// polydiscs around real centers).
    pub fn eval_complex(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.rule {
            MapRule::Identity => Ok(z.to_vec()),
            MapRule::Doubling => Ok(vec![2.0 * z[0]]),
            MapRule::Rotation { alpha } => Ok(vec![z[0] + alpha]),
            MapRule::Trig { c } => {
                let two_pi = Complex64::new(2.0 * std::f64::consts::PI, 0.0);
                Ok(vec![2.0 * z[0] + *c * (two_pi * z[0]).sin()])
            }
            MapRule::Toral { a } => Ok(vec![
                a[0][0] as f64 * z[0] + a[0][1] as f64 * z[1],
                a[1][0] as f64 * z[0] + a[1][1] as f64 * z[1],
            ]),
            MapRule::Logistic => Ok(vec![4.0 * z[0] * (1.0 - z[0])]),
            MapRule::SuspensionStep { .. } => {
                Err(Error::NoComplexExtension(self.name.clone()))
            }
        }
    }

    pub fn has_jets(&self) -> bool {
        !matches!(self.rule, MapRule::SuspensionStep { .. })
    }

    /// One step of the map in truncated-Taylor arithmetic. For torus rules the
    /// constant term is reduced mod 1 (an integer shift leaves the rules
    /// invariant), which keeps coefficients well-scaled along long orbits.
    pub fn eval_jet(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let mut out = match &self.rule {
            MapRule::Identity => x.to_vec(),
            MapRule::Doubling => vec![x[0].scale(2.0)],
            MapRule::Rotation { alpha } => vec![x[0].add_const(*alpha)],
            MapRule::Trig { c } => {
                let u = x[0].scale(2.0 * std::f64::consts::PI);
                let (s, _) = u.sin_cos();
                vec![x[0].scale(2.0).add(&s.scale(*c))]
            }
            MapRule::Toral { a } => vec![
                x[0].scale(a[0][0] as f64).add(&x[1].scale(a[0][1] as f64)),
                x[0].scale(a[1][0] as f64).add(&x[1].scale(a[1][1] as f64)),
            ],
            MapRule::Logistic => {
                let one_minus = x[0].scale(-1.0).add_const(1.0);
                vec![x[0].mul(&one_minus).scale(4.0)]
            }
            MapRule::SuspensionStep { .. } => return Err(Error::NoJet(self.name.clone())),
        };
        if matches!(self.space, StateSpace::Torus { .. }) {
            for j in out.iter_mut() {
                j.c[0] = j.c[0].rem_euclid(1.0);
            }
        }
        Ok(out)
    }
}

/// Orbit segment `x, f(x), ..., f^n(x)` (n+1 points), each normalized into the
/// fundamental domain. Non-finite coordinates abort with the offending step.
pub fn iterate_orbit(sys: &AnalyticSystem, x: &[f64], n: usize) -> Result<Vec<Point>> {
    let mut orbit = Vec::with_capacity(n + 1);
    let mut cur = x.to_vec();
    sys.space.normalize(&mut cur);
    orbit.push(cur.clone());
    for step in 0..n {
        cur = sys.eval(&cur);
        if cur.iter().any(|c| !c.is_finite()) {
            return Err(Error::NumericEscape { step: step + 1 });
        }
        orbit.push(cur.clone());
    }
    Ok(orbit)
}

/// Bowen distance `d_n(x, y) = max_{0 <= i < n} d(f^i x, f^i y)`; `n = 1`
/// recovers the static metric.
pub fn bowen_distance(sys: &AnalyticSystem, x: &[f64], y: &[f64], n: usize) -> Result<f64> {
    assert!(n >= 1);
    let ox = iterate_orbit(sys, x, n - 1)?;
    let oy = iterate_orbit(sys, y, n - 1)?;
    let mut d = 0.0f64;
    for i in 0..n {
        d = d.max(sys.space.distance(&ox[i], &oy[i]));
    }
    Ok(d)
}

/// Fixed probe directions on the unit sphere: evenly spaced for m <= 2,
/// seeded Gaussian otherwise. Deterministic across runs.
pub fn probe_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x9d1_face);
            (0..count)
                .map(|_| {
                    let mut v: Vec<f64> = (0..m)
                        .map(|_| {
                            // Box-Muller
                            let u1: f64 = rng.gen::<f64>().max(1e-12);
                            let u2: f64 = rng.gen();
                            (-2.0 * u1.ln()).sqrt()
                                * (2.0 * std::f64::consts::PI * u2).cos()
                        })
                        .collect();
                    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
                    v.iter_mut().for_each(|c| *c /= norm);
                    v
                })
                .collect()
        }
    }
}

/// Directional estimates of `||d^k f^n(x)||` for k = 1..kmax, obtained by
/// maximizing `|d^k/dt^k f^n(x + t v)|` over a fixed direction sample. These
/// are lower estimates of the true operator norms.
pub fn jet_norms(sys: &AnalyticSystem, x: &[f64], n: usize, kmax: usize) -> Result<Vec<f64>> {
    if !sys.has_jets() {
        return Err(Error::NoJet(sys.name.clone()));
    }
    assert!(kmax >= 1 && kmax <= 8, "kmax must be in 1..=8");
    let m = sys.space.dim();
    let dirs = probe_directions(m, 64);
    let mut best = vec![0.0f64; kmax];
    for v in &dirs {
        let mut jets: Vec<Jet> = (0..m)
            .map(|c| Jet::variable(x[c], v[c], kmax))
            .collect();
        for _ in 0..n {
            jets = sys.eval_jet(&jets)?;
        }
        for k in 1..=kmax {
            let norm = jets
                .iter()
                .map(|j| j.c[k] * j.c[k])
                .sum::<f64>()
                .sqrt()
                * factorial(k);
            if norm > best[k - 1] {
                best[k - 1] = norm;
            }
        }
    }
    Ok(best)
}

/// Max modulus of the complex extension over `samples` points on the boundary
/// of the radius-`radius` polydisc around `center` (max over components).
/// The sample sequence is a fixed Kronecker lattice, so results are monotone
/// nondecreasing in `samples`.
pub fn polydisc_sup(
    sys: &AnalyticSystem,
    center: &[f64],
    radius: f64,
    samples: usize,
) -> Result<f64> {
    if !sys.has_complex_extension() {
        return Err(Error::NoComplexExtension(sys.name.clone()));
    }
    if radius > sys.rho {
        return Err(Error::ParamOutOfRange(format!(
            "radius {radius} exceeds analytic radius {}",
            sys.rho
        )));
    }
    let m = sys.space.dim();
    // irrational rotations per coordinate: fractional parts of sqrt(primes)
    let betas: [f64; 4] = [
        2.0f64.sqrt() - 1.0,
        3.0f64.sqrt() - 1.0,
        5.0f64.sqrt() - 2.0,
        7.0f64.sqrt() - 2.0,
    ];
    let mut sup = 0.0f64;
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..samples {
        for (c, zc) in z.iter_mut().enumerate() {
            let theta =
                2.0 * std::f64::consts::PI * ((j as f64) * betas[c % betas.len()]).fract();
            *zc = Complex64::new(center[c] + radius * theta.cos(), radius * theta.sin());
        }
        let w = sys.eval_complex(&z)?;
        for wc in &w {
            let a = wc.norm();
            if a > sup {
                sup = a;
            }
        }
    }
    Ok(sup)
}

/// Empirical Lipschitz constant: max of `d(f a, f b) / d(a, b)` over `pairs`
/// random close pairs. Used both for certifying `l0` and for the suspension
/// subdivision search.
pub fn empirical_lipschitz(sys: &AnalyticSystem, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sys.space.dim();
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let mut a: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        sys.space.normalize(&mut a);
        let scale = 1e-5;
        let mut b: Vec<f64> = a
            .iter()
            .map(|c| c + scale * (rng.gen::<f64>() - 0.5))
            .collect();
        sys.space.normalize(&mut b);
        let d0 = sys.space.distance(&a, &b);
        if d0 < 1e-12 {
            continue;
        }
        let fa = sys.eval(&a);
        let fb = sys.eval(&b);
        let d1 = sys.space.distance(&fa, &fb);
        let r = d1 / d0;
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// The rescaled maps `g_i(t) = s1 (g(t/s1 + g^{i-1} x) - g^i x)` with
/// `g = f^n` and `s1 = L0^n n^2`, defined on `B(0, 2)`.
#[derive(Debug, Clone)]
pub struct RescaledMap {
    pub base: AnalyticSystem,
    pub n: usize,
    /// `x, g(x), g^2(x), ...` under `g = f^n`.
    pub anchor_orbit: Vec<Point>,
    pub s1: f64,
    pub ln_s1: f64,
}

impl RescaledMap {
    pub fn new(base: &AnalyticSystem, x: &[f64], n: usize, segments: usize) -> Result<Self> {
        assert!(n >= 1);
        let full = iterate_orbit(base, x, n * segments)?;
        let anchor_orbit: Vec<Point> = (0..=segments).map(|i| full[i * n].clone()).collect();
        let ln_s1 = n as f64 * base.l0.ln() + 2.0 * (n as f64).ln();
        Ok(RescaledMap {
            base: base.clone(),
            n,
            anchor_orbit,
            s1: ln_s1.exp(),
            ln_s1,
        })
    }

    /// Evaluate `g_i` at `t` (1-indexed `i`, `|t| <= 2`). Works in the local
    /// chart around the anchor: the image offset is taken with minimal-image
    /// signed differences so torus wraparound cannot corrupt the rescaling.
    pub fn eval_segment(&self, i: usize, t: &[f64]) -> Result<Point> {
        assert!(i >= 1 && i < self.anchor_orbit.len());
        let anchor = &self.anchor_orbit[i - 1];
        let next = &self.anchor_orbit[i];
        let m = anchor.len();
        let y: Vec<f64> = (0..m).map(|c| anchor[c] + t[c] / self.s1).collect();
        let gy = iterate_orbit(&self.base, &y, self.n)?
            .pop()
            .expect("orbit nonempty");
        let mut delta = vec![0.0; m];
        self.base.space.signed_delta(next, &gy, &mut delta);
        Ok(delta.iter().map(|d| d * self.s1).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn orbit_identity() {
        let sys = zoo::identity();
        let orbit = iterate_orbit(&sys, &[0.3], 5).unwrap();
        assert_eq!(orbit.len(), 6);
        for p in &orbit {
            assert!((p[0] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn orbit_doubling() {
        let sys = zoo::doubling();
        let orbit = iterate_orbit(&sys, &[0.3], 2).unwrap();
        let expect = [0.3, 0.6, 0.2];
        for (p, e) in orbit.iter().zip(expect) {
            assert!((p[0] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_logistic_critical() {
        let sys = zoo::logistic();
        let orbit = iterate_orbit(&sys, &[0.5], 2).unwrap();
        assert!((orbit[1][0] - 1.0).abs() < 1e-15);
        assert!(orbit[2][0].abs() < 1e-15);
    }

    #[test]
    fn bowen_distance_identity_and_doubling() {
        let id = zoo::identity();
        let d = bowen_distance(&id, &[0.1], &[0.4], 7).unwrap();
        assert!((d - 0.3).abs() < 1e-14);

        let db = zoo::doubling();
        // orbits of 0 and 0.1: distances 0.1, 0.2, 0.4 (wrap min(0.4, 0.6))
        let d = bowen_distance(&db, &[0.0], &[0.1], 3).unwrap();
        assert!((d - 0.4).abs() < 1e-12);
    }

    #[test]
    fn bowen_distance_rotation_isometry() {
        let sys = zoo::rotation(0.30902);
        let d1 = sys.space.distance(&[0.2], &[0.55]);
        for n in [1, 3, 9] {
            let dn = bowen_distance(&sys, &[0.2], &[0.55], n).unwrap();
            assert!((dn - d1).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_norms_doubling_linear() {
        let sys = zoo::doubling();
        let jn = jet_norms(&sys, &[0.37], 4, 2).unwrap();
        assert!((jn[0] - 16.0).abs() < 1e-9);
        assert!(jn[1].abs() < 1e-9);
    }

    #[test]
    fn jet_norms_cat_spectral() {
        let sys = zoo::cat_map();
        let jn = jet_norms(&sys, &[0.1, 0.2], 2, 1).unwrap();
        // ||A^2|| for A = [[2,1],[1,1]]: largest singular value of [[5,3],[3,2]]
        let expect = (7.0 + 45.0f64.sqrt()) / 2.0;
        assert!(jn[0] <= expect + 1e-9, "lower estimate");
        assert!((jn[0] - expect).abs() / expect < 1e-2, "{} vs {expect}", jn[0]);
    }

    #[test]
    fn jet_norms_logistic_critical() {
        let sys = zoo::logistic();
        let jn = jet_norms(&sys, &[0.5], 1, 2).unwrap();
        assert!(jn[0].abs() < 1e-12);
        assert!((jn[1] - 8.0).abs() < 1e-9);
    }

    #[test]
    fn polydisc_sup_linear_cases() {
        let db = zoo::doubling();
        let s = polydisc_sup(&db, &[0.0], 0.25, 4000).unwrap();
        assert!(s <= 0.5 + 1e-12);
        assert!((s - 0.5).abs() < 1e-4);

        let rot = zoo::rotation(0.3);
        let s = polydisc_sup(&rot, &[0.0], 0.25, 20000).unwrap();
        assert!(s <= 0.55 + 1e-12);
        assert!((s - 0.55).abs() < 1e-4);
    }

    #[test]
    fn polydisc_sup_monotone_in_samples() {
        let sys = zoo::logistic();
        let a = polydisc_sup(&sys, &[0.5], 0.2, 500).unwrap();
        let b = polydisc_sup(&sys, &[0.5], 0.2, 5000).unwrap();
        assert!(b >= a);
        // 4z(1-z) = 1 - 4w^2 with w = z - 0.5, so the boundary max at
        // radius 0.2 is 1 + 4 * 0.04 = 1.16
        assert!((b - 1.16).abs() < 1e-3);
    }

    #[test]
    fn polydisc_sup_matches_dense_boundary_oracle() {
        let sys = zoo::trig(0.05).unwrap();
        let got = polydisc_sup(&sys, &[0.4], 0.2, 20000).unwrap();
        // brute-force boundary sampling oracle
        let mut oracle = 0.0f64;
        for j in 0..100_000 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 1e5;
            let z = [Complex64::new(0.4 + 0.2 * theta.cos(), 0.2 * theta.sin())];
            let w = sys.eval_complex(&z).unwrap();
            oracle = oracle.max(w[0].norm());
        }
        assert!(got <= oracle + 1e-12);
        assert!((got - oracle).abs() < 1e-4, "{got} vs {oracle}");
    }

    #[test]
    fn rescaled_map_fixes_origin() {
        for sys in [zoo::doubling(), zoo::logistic(), zoo::trig(0.05).unwrap()] {
            let rm = RescaledMap::new(&sys, &[0.3], 3, 4).unwrap();
            let expect_ln = 3.0 * sys.l0.ln() + 2.0 * 3.0f64.ln();
            assert!((rm.ln_s1 - expect_ln).abs() < 1e-12);
            for i in 1..=4 {
                let v = rm.eval_segment(i, &vec![0.0; sys.space.dim()]).unwrap();
                for c in v {
                    assert!(c.abs() < 1e-7, "g_i(0) = 0 up to rescaled rounding");
                }
            }
        }
    }

    #[test]
    fn rescaled_map_lipschitz_dominated_by_iterate() {
        // empirical Lipschitz of g_i on B(0,2) is at most that of f^n
        let sys = zoo::doubling();
        let n = 3;
        let rm = RescaledMap::new(&sys, &[0.3], n, 2).unwrap();
        let lip_fn = sys.l0.powi(n as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t1 = vec![4.0 * rng.gen::<f64>() - 2.0];
            let t2 = vec![t1[0] + 1e-4 * (rng.gen::<f64>() - 0.5)];
            let g1 = rm.eval_segment(1, &t1).unwrap();
            let g2 = rm.eval_segment(1, &t2).unwrap();
            let num = (g1[0] - g2[0]).abs();
            let den = (t1[0] - t2[0]).abs();
            if den > 1e-9 {
                assert!(num / den <= lip_fn * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn bowen_metric_properties_sampled() {
        let sys = zoo::trig(0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = vec![rng.gen::<f64>()];
            let y = vec![rng.gen::<f64>()];
            let z = vec![rng.gen::<f64>()];
            let d3 = bowen_distance(&sys, &x, &y, 3).unwrap();
            let d4 = bowen_distance(&sys, &x, &y, 4).unwrap();
            assert!(d4 + 1e-14 >= d3, "nondecreasing in n");
            let dxz = bowen_distance(&sys, &x, &z, 3).unwrap();
            let dzy = bowen_distance(&sys, &z, &y, 3).unwrap();
            assert!(d3 <= dxz + dzy + 1e-12, "triangle");
            let d1 = sys.space.distance(&x, &y);
            assert!(d3 <= sys.l0.powi(2) * d1 * (1.0 + 1e-9), "Lipschitz chain");
        }
    }
}
