//! Cauchy-Stirling derivative envelopes and the constants derived from them.
//!
//! For an analytic map with sup-modulus `M0` on polydiscs of radius `rho`
//! and Lipschitz bound `L0`, the Cauchy estimate gives
//! `|d^alpha f^n| <= alpha! 2^m M0 (2 sqrt(m) L0^n / rho)^|alpha|`; Stirling
//! relaxes `alpha!` to `|alpha|^{|alpha|+1/2}` (dropping `e^{1-|alpha|}`).
//! Everything here is evaluated in log-space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::system::{jet_norms, RescaledMap};

/// Parameters of the derivative envelope for `f^n`.
#[derive(Debug, Clone)]
pub struct CauchyEnvelope {
    pub m: usize,
    pub m0: f64,
    pub rho: f64,
    pub l0: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DerivativeBound {
    /// ln of the factorial (pre-Stirling) envelope
    pub ln_pre: f64,
    /// ln of the `|alpha|^{|alpha|+1/2}` (post-Stirling) envelope
    pub ln_post: f64,
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Log-space envelope for the multi-index `alpha`; asserts the Stirling
/// relaxation only ever loosens the bound.
pub fn cauchy_derivative_bound(env: &CauchyEnvelope, alpha: &[usize]) -> DerivativeBound {
    let total: usize = alpha.iter().sum();
    assert!(total >= 1, "|alpha| must be at least 1");
    let a = total as f64;
    let per_order =
        2.0f64.ln() + 0.5 * (env.m as f64).ln() + env.n as f64 * env.l0.ln() - env.rho.ln();
    let shared = env.m as f64 * 2.0f64.ln() + env.m0.ln() + a * per_order;
    let ln_pre = alpha.iter().map(|&k| ln_factorial(k)).sum::<f64>() + shared;
    let ln_post = (a + 0.5) * a.ln() + shared;
    assert!(
        ln_pre <= ln_post + 1e-12,
        "factorial form must not exceed the Stirling form"
    );
    DerivativeBound { ln_pre, ln_post }
}

/// `ln q(k)` with `q(k) = (2n)^{-k+1} k^{k+1/2}`.
pub fn ln_q(n: usize, k: usize) -> f64 {
    assert!(k >= 1 && k <= n);
    let kf = k as f64;
    (1.0 - kf) * (2.0 * n as f64).ln() + (kf + 0.5) * kf.ln()
}

pub fn q_function(n: usize, k: usize) -> f64 {
    ln_q(n, k).exp()
}

/// Brute-force maximum of `q` over integer `k` in `[1, n]`, certified
/// against the endpoint formula `max{q(1), q(n)}` and against convexity of
/// `ln q`.
pub fn q_max(n: usize) -> (usize, f64) {
    assert!(n >= 3);
    let mut arg = 1usize;
    let mut best = ln_q(n, 1);
    for k in 2..=n {
        let v = ln_q(n, k);
        if v > best + 1e-12 {
            best = v;
            arg = k;
        }
    }
    let endpoint = ln_q(n, 1).max(ln_q(n, n));
    assert!(
        (best - endpoint).abs() <= 1e-9,
        "interior maximum of q at n = {n}: transcription bug"
    );
    for k in 2..n {
        let second = ln_q(n, k + 1) - 2.0 * ln_q(n, k) + ln_q(n, k - 1);
        assert!(second >= -1e-9, "ln q not convex at n = {n}, k = {k}");
    }
    (arg, best.exp())
}

/// `C0 = (2^{m+1} sqrt(m) M0 / rho) * sup_{n >= 3} max{1, n^{3/2}/2^{n-1}}`.
/// The sup is located by sweep; decay past the sweep is certified by the
/// monotone ratio check.
pub fn compute_c0(m: usize, m0: f64, rho: f64) -> f64 {
    assert!(m >= 1 && m0 > 0.0 && rho > 0.0);
    let term = |n: usize| {
        let nf = n as f64;
        (nf.powf(1.5) / 2.0f64.powi(n as i32 - 1)).max(1.0)
    };
    let mut sup = 0.0f64;
    for n in 3..=100 {
        sup = sup.max(term(n));
        if n > 3 {
            assert!(term(n) <= term(n - 1) + 1e-15, "tail must decay");
        }
    }
    2.0f64.powi(m as i32 + 1) * (m as f64).sqrt() * m0 / rho * sup
}

#[derive(Debug, Clone)]
pub struct RescaledReport {
    pub checked: usize,
    pub violations: usize,
    /// max over samples of `ln estimate - ln bound`; negative means slack
    pub worst_margin: f64,
}

/// Check `max ||d^k g_i(t)|| <= C0 L0^n` over sampled `t` in `B(0, 2)` for
/// the rescaled maps, using jet-based directional derivative estimates
/// (`d^k g_i(t) = s1^{1-k} d^k g(y)` at `y = g^{i-1}x + t/s1`).
pub fn check_rescaled_bound(rm: &RescaledMap, kmax: usize, samples: usize) -> Result<RescaledReport> {
    assert!(kmax >= 1 && kmax <= 6, "kmax must be in 1..=6");
    let base = &rm.base;
    let m = base.space.dim();
    let c0 = compute_c0(m, base.m0, base.rho);
    let ln_bound = c0.ln() + rm.n as f64 * base.l0.ln();
    let segments = rm.anchor_orbit.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0xca0c_17);
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        // uniform in the ball of radius 2
        let mut t: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = t.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1.0 {
            t.iter_mut().for_each(|c| *c /= norm);
        }
        let r = 2.0 * rng.gen::<f64>().powf(1.0 / m as f64);
        t.iter_mut().for_each(|c| *c *= r);
        for i in 1..=segments {
            let anchor = &rm.anchor_orbit[i - 1];
            let mut y: Vec<f64> = anchor
                .iter()
                .zip(&t)
                .map(|(a, tc)| a + tc / rm.s1)
                .collect();
            base.space.normalize(&mut y);
            let norms = jet_norms(base, &y, rm.n, kmax)?;
            for (k1, est) in norms.iter().enumerate() {
                let k = k1 + 1;
                checked += 1;
                if *est <= 0.0 {
                    continue;
                }
                let ln_est = est.ln() + (1.0 - k as f64) * rm.ln_s1;
                if ln_est > ln_bound + 1e-9 {
                    violations += 1;
                }
                if ln_est - ln_bound > worst {
                    worst = ln_est - ln_bound;
                }
            }
        }
    }
    Ok(RescaledReport {
        checked,
        violations,
        worst_margin: worst,
    })
}
