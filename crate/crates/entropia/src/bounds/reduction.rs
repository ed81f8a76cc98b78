//! Reduction constants for passing local-entropy bounds from the time-1/i
//! suspension flow map back to the base map: the chain
//! `h_loc(f, delta) <= i C2 a(delta L0^i) <= i C2 C3 a(delta)`.

use crate::bounds::schedule::{small_lipschitz_bound, BoundSchedule};
use crate::error::Result;
use crate::zoo::SuspensionSystem;

const C2_SWEEP_MAX: usize = 1_000;

/// The constant `C2` with `h_loc(psi^{1/i}, delta) <= C2 a(delta)`: the
/// sweep supremum of the small-Lipschitz `C1` for the time-1/i map.
pub fn c2_constant(susp: &SuspensionSystem, sched: &BoundSchedule) -> Result<f64> {
    let probe = small_lipschitz_bound(&susp.system, sched, C2_SWEEP_MAX)?;
    let mut c2 = 0.0f64;
    for n in probe.n1..=C2_SWEEP_MAX {
        c2 = c2.max(small_lipschitz_bound(&susp.system, sched, n)?.c1);
    }
    Ok(c2)
}

/// `i * C2 * a(delta L0^i)`: the bound on `h_loc` of the base map at scale
/// `delta` obtained through the suspension.
pub fn suspension_reduction_bound(
    susp: &SuspensionSystem,
    sched: &BoundSchedule,
    delta: f64,
) -> Result<f64> {
    let i = susp.i as f64;
    let c2 = c2_constant(susp, sched)?;
    let shifted = delta * sched.l0.powi(susp.i as i32);
    Ok(i * c2 * sched.a_of_t(shifted))
}

/// `C3 = max_{i < n <= n_max} a(delta(n-i)) / a(delta(n))`, the price of the
/// `i`-step scale shift; identically 1 at `i = 0`.
pub fn c3_ratio_bound(sched: &BoundSchedule, i: usize, n_max: usize) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let mut worst = 0.0f64;
    for n in (i + 1)..=n_max {
        let r = sched.a_at(n - i) / sched.a_at(n);
        assert!(r.is_finite());
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Sweep certificate for `delta(n) L0^i <= delta(n - i)` on `i < n <= n_max`.
pub fn delta_shift_ok(sched: &BoundSchedule, i: usize, n_max: usize) -> bool {
    let ln_l0 = sched.l0.ln();
    ((i + 1)..=n_max).all(|n| sched.ln_delta(n) + i as f64 * ln_l0 <= sched.ln_delta(n - i) + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_c0, MuNuModel, SRule};
    use crate::zoo;

    fn sched_l2() -> BoundSchedule {
        BoundSchedule::new(
            2.0,
            1,
            0.5,
            compute_c0(1, 3.0, 0.5),
            MuNuModel::Default,
            SRule::default(),
        )
    }

    #[test]
    fn c3_identity_at_zero_shift() {
        assert_eq!(c3_ratio_bound(&sched_l2(), 0, 1_000), 1.0);
    }

    #[test]
    fn c3_finite_and_attained_early() {
        let sched = sched_l2();
        let c3 = c3_ratio_bound(&sched, 2, 10_000);
        assert!(c3.is_finite() && c3 >= 1.0);
        // the ratio tends to 1, so the sweep max already appears on a
        // short prefix
        let early = c3_ratio_bound(&sched, 2, 100);
        assert!((c3 - early).abs() < 1e-12);
    }

    #[test]
    fn delta_shift_inequality() {
        let sched = sched_l2();
        for i in [1usize, 2, 5] {
            assert!(delta_shift_ok(&sched, i, 10_000));
        }
    }

    #[test]
    fn rotation_suspension_reduction() {
        let rot = zoo::rotation(0.30902);
        let susp = zoo::suspend(&rot, 1.5).unwrap();
        let sched = sched_l2();
        let b1 = suspension_reduction_bound(&susp, &sched, 1.0 / 64.0).unwrap();
        assert!(b1.is_finite() && b1 > 0.0);
        // shrinking delta cannot increase the bound (a is nonincreasing)
        let b2 = suspension_reduction_bound(&susp, &sched, 1.0 / 4096.0).unwrap();
        assert!(b2 <= b1 + 1e-12);
        // chain consistency: i C2 a(delta L0^i) <= i C2 C3 a(delta)
        let c2 = c2_constant(&susp, &sched).unwrap();
        let c3 = c3_ratio_bound(&sched, susp.i as usize, 10_000);
        let delta = sched.delta_of_n(20);
        let lhs = suspension_reduction_bound(&susp, &sched, delta).unwrap();
        let rhs = susp.i as f64 * c2 * c3 * sched.a_of_t(delta);
        assert!(lhs <= rhs + 1e-9);
    }
}
