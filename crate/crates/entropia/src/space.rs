//! Flat model state spaces and their metrics.
//!
//! Two base spaces are supported: the torus `[0,1)^m` with per-coordinate
//! wraparound distance and the cube `[0,1]^m` with absolute difference, both
//! combined Euclidean-style across coordinates. A third kind models the
//! mapping torus of a base system: `[0,1) x M` where the horizontal metric at
//! height `t` interpolates between `d(x,y)` and `d(f(x),f(y))` so that the
//! metric is consistent across the seam identification `(1,x) ~ (0,f(x))`.

use crate::system::AnalyticSystem;

/// Coordinates of a point in the fundamental domain.
pub type Point = Vec<f64>;

#[derive(Debug, Clone)]
pub enum StateSpace {
    Torus { dim: usize },
    Cube { dim: usize },
    /// Mapping-torus over a base system; `base` supplies both the base space
    /// and the gluing map for the seam.
    Suspension { base: Box<AnalyticSystem> },
}

impl StateSpace {
    pub fn torus(dim: usize) -> Self {
        assert!(dim >= 1);
        StateSpace::Torus { dim }
    }

    pub fn cube(dim: usize) -> Self {
        assert!(dim >= 1);
        StateSpace::Cube { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            StateSpace::Torus { dim } | StateSpace::Cube { dim } => *dim,
            StateSpace::Suspension { base } => 1 + base.space.dim(),
        }
    }

    /// True for torus/cube; the suspension metric needs map evaluations.
    pub fn is_flat(&self) -> bool {
        !matches!(self, StateSpace::Suspension { .. })
    }

    /// Wrap a raw coordinate vector into the fundamental domain.
    pub fn normalize(&self, p: &mut [f64]) {
        match self {
            StateSpace::Torus { .. } => {
                for c in p.iter_mut() {
                    *c = c.rem_euclid(1.0);
                    // rem_euclid can return 1.0 for tiny negative inputs
                    if *c >= 1.0 {
                        *c = 0.0;
                    }
                }
            }
            StateSpace::Cube { .. } => {
                for c in p.iter_mut() {
                    *c = c.clamp(0.0, 1.0);
                }
            }
            StateSpace::Suspension { base } => {
                p[0] = p[0].rem_euclid(1.0);
                if p[0] >= 1.0 {
                    p[0] = 0.0;
                }
                base.space.normalize(&mut p[1..]);
            }
        }
    }

    /// Per-coordinate distance folded Euclidean-style.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dim());
        debug_assert_eq!(b.len(), self.dim());
        match self {
            StateSpace::Torus { .. } => {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let d = wrap_dist(*x, *y);
                    acc += d * d;
                }
                acc.sqrt()
            }
            StateSpace::Cube { .. } => {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let d = x - y;
                    acc += d * d;
                }
                acc.sqrt()
            }
            StateSpace::Suspension { base } => suspension_distance(base, a, b),
        }
    }

    /// Minimal-image signed difference `b - a` per coordinate (torus wraps to
    /// `[-1/2, 1/2)`). Only defined on flat spaces.
    pub fn signed_delta(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self {
            StateSpace::Torus { .. } => {
                for i in 0..a.len() {
                    let mut d = b[i] - a[i];
                    if d >= 0.5 {
                        d -= 1.0;
                    } else if d < -0.5 {
                        d += 1.0;
                    }
                    out[i] = d;
                }
            }
            StateSpace::Cube { .. } => {
                for i in 0..a.len() {
                    out[i] = b[i] - a[i];
                }
            }
            StateSpace::Suspension { .. } => panic!("signed_delta on suspension space"),
        }
    }
}

#[inline]
pub fn wrap_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Horizontal metric at height `t` on the mapping torus: linear interpolation
/// between the base distance and its image distance, which makes the metric at
/// `t = 1` agree with the metric at `t = 0` after the seam identification.
fn height_metric(base: &AnalyticSystem, t: f64, x: &[f64], y: &[f64]) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let d0 = base.space.distance(x, y);
    if t == 0.0 {
        return d0;
    }
    let fx = base.eval(x);
    let fy = base.eval(y);
    let d1 = base.space.distance(&fx, &fy);
    (1.0 - t) * d0 + t * d1
}

/// Distance on the mapping torus: the minimum over the direct route and the
/// two forward routes through the seam. Non-invertible bases only get forward
/// routes, so this is a semiflow metric.
fn suspension_distance(base: &AnalyticSystem, a: &[f64], b: &[f64]) -> f64 {
    let (ta, xa) = (a[0], &a[1..]);
    let (tb, xb) = (b[0], &b[1..]);

    let direct = {
        let dz = ta - tb;
        let h = height_metric(base, 0.5 * (ta + tb), xa, xb);
        (dz * dz + h * h).sqrt()
    };

    // a climbs through the seam and lands near b
    let via_a = {
        let dz = (1.0 - ta) + tb;
        let fxa = base.eval(xa);
        let h = height_metric(base, 0.5 * ((1.0 - ta) + tb), &fxa, xb);
        (dz * dz + h * h).sqrt()
    };

    // b climbs through the seam and lands near a
    let via_b = {
        let dz = (1.0 - tb) + ta;
        let fxb = base.eval(xb);
        let h = height_metric(base, 0.5 * ((1.0 - tb) + ta), &fxb, xa);
        (dz * dz + h * h).sqrt()
    };

    direct.min(via_a).min(via_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torus_wrap_distance() {
        let s = StateSpace::torus(1);
        assert!((s.distance(&[0.1], &[0.9]) - 0.2).abs() < 1e-15);
        assert!((s.distance(&[0.0], &[0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cube_distance() {
        let s = StateSpace::cube(2);
        let d = s.distance(&[0.0, 0.0], &[0.3, 0.4]);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in [StateSpace::torus(2), StateSpace::cube(2)] {
            for _ in 0..500 {
                let p: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
                let q: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
                let r: Vec<f64> = (0..2).map(|_| rng.gen::<f64>()).collect();
                let dpq = space.distance(&p, &q);
                let dqp = space.distance(&q, &p);
                assert!((dpq - dqp).abs() < 1e-14, "symmetry");
                assert!(space.distance(&p, &p) == 0.0, "identity");
                assert!(
                    dpq <= space.distance(&p, &r) + space.distance(&r, &q) + 1e-14,
                    "triangle"
                );
            }
        }
    }

    #[test]
    fn signed_delta_wraps() {
        let s = StateSpace::torus(1);
        let mut out = [0.0];
        s.signed_delta(&[0.95], &[0.05], &mut out);
        assert!((out[0] - 0.1).abs() < 1e-15);
        s.signed_delta(&[0.05], &[0.95], &mut out);
        assert!((out[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn normalize_into_fundamental_domain() {
        let s = StateSpace::torus(1);
        let mut p = vec![1.25];
        s.normalize(&mut p);
        assert!((p[0] - 0.25).abs() < 1e-15);
        let mut q = vec![-1e-18];
        s.normalize(&mut q);
        assert!(q[0] >= 0.0 && q[0] < 1.0);
    }
}
