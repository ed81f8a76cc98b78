//! Quantitative bound machinery: Cauchy-Stirling derivative envelopes, the
//! covering-count constant kappa, the delta(n)/s(n)/a(t) schedule with its
//! side conditions, the small-Lipschitz specialization, and the suspension
//! reduction constants.

mod envelope;
mod reduction;
mod schedule;

pub use envelope::*;
pub use reduction::*;
pub use schedule::*;
