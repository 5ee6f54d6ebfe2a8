//! Numerical evaluation of the noncentral Student-t distribution.
//!
//! For degrees of freedom `n > 0` (not necessarily an integer), noncentrality
//! `delta` and abscissa `x`, the crate computes the cumulative distribution
//! function `F_n(x; delta)`, its complement, the density, and an approximate
//! quantile. No single method covers the whole parameter space, so the
//! [`engine`] dispatches between
//!
//! * the defining incomplete-beta series ([`series`]),
//! * transformed trapezoidal quadrature of the erfc integral representation
//!   ([`quadrature`]),
//! * large-noncentrality expansions in elementary and incomplete-gamma form
//!   ([`asymp_delta`]),
//! * large-`n` expansions, including a uniform saddle-point expansion in terms
//!   of the complementary error function ([`asymp_n`]),
//!
//! and reports the route taken together with an estimated relative error.
//!
//! The quadrature node sweeps evaluate in parallel through `rayon` when the
//! default `parallel` feature is enabled; disabling it yields a sequential
//! build with bit-identical results (summation order is fixed).

pub mod asymp_delta;
pub mod asymp_n;
pub mod engine;
pub mod kernels;
mod powser;
pub mod quadrature;
pub mod series;

pub use engine::{cdf, pdf, quantile, sf, Method, MethodConfig, TailSide, TailValue};
pub use series::Params;

/// Errors reported by kernels, routes and the engine.
///
/// `Reroute` and `UnsupportedRange` mark a route that declines the given
/// parameters; the engine falls through to the next applicable route. The
/// other variants are terminal.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("reroute: {0}")]
    Reroute(String),
    #[error("evaluation failure: {0}")]
    EvaluationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Compensated (Neumaier) accumulator for long sums.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
