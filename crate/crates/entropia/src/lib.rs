//! `entropia`: a numerical entropy laboratory for analytic maps.
//!
//! The crate estimates topological entropy at a fixed observation scale from
//! (n, eps)-spanning and separated counts over grid discretizations, approximates
//! Bowen dynamical balls and the local entropy built on them, and evaluates the
//! quantitative bound machinery (Cauchy derivative envelopes, the kappa count,
//! the delta(n)/s(n)/a(t) schedule) that dominates local entropy for analytic
//! systems. A zoo of benchmark systems with exactly known entropy anchors every
//! estimator to an independent oracle.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod config;
pub mod covering;
pub mod error;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod local;
pub mod space;
pub mod system;
pub mod zoo;

pub use error::{Error, Result};
