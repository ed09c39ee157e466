//! Clipped stochastic solvers for unconstrained variational inequality
//! problems with heavy-tailed noise, and the machinery to verify their
//! high-probability convergence bounds by Monte-Carlo at desk scale.
//!
//! The crate is organized around seven pieces:
//!
//! - [`problems`]: a zoo of affine operators F(z) = Az + b with analytically
//!   certified structural constants, plus sampling probes of the structural
//!   assumptions.
//! - [`oracle`]: additive heavy-tailed noise models, mini-batch estimators,
//!   the norm-clipping operator, and clipped-estimator statistics.
//! - [`solvers`]: clipped stochastic extragradient and gradient
//!   descent-ascent (plus unclipped baselines), with the stepsize / clipping /
//!   batch schedules of every supported convergence case.
//! - [`metrics`]: restricted gap function (certified maximization over a
//!   ball), averaged squared operator norm, squared distance.
//! - [`experiments`]: seeded Monte-Carlo fan-out comparing empirical success
//!   fractions against the guaranteed bounds.
//! - [`tails`]: quartile-based heavy-tail diagnostics and histogram export.
//! - [`config`]: the JSON config files and artifacts behind the `vipclip`
//!   command-line tool.
//!
//! Everything that draws randomness is a pure function of explicit seeds, so
//! runs replay bit-exactly.

pub mod config;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod tails;

pub use error::{Error, Result};

/// Format a float with 17 significant digits ('.' decimal, no locale) so CSV
/// outputs replay bit-faithfully.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}
