//! Method-of-steps integration of `(r Φ(y'))' = p Φ(y∘τ)` with dense output,
//! manufactured solutions and trajectory classification.

mod classify;
mod residual;
mod solver;
mod trajectory;

pub use classify::{classify_trajectory, ClassLabel, LimitKind, Monotonicity, SolutionClass, DEFAULT_TAIL_FRACTION};
pub use residual::{manufactured_p, residual, residual_stencil, ResidualStats};
pub use solver::{solve, SolverOptions};
pub use trajectory::{SolveStatus, Trajectory};

use alloc::sync::Arc;
use core::fmt;

use crate::math::powf;
use crate::model::HalfLinearEquation;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial function on `[τ(a), a]` and the starting quasiderivative.
#[derive(Clone)]
pub struct HistorySpec {
    phi: RealFn,
    phi_prime: RealFn,
    start_quasi: Option<f64>,
}

impl fmt::Debug for HistorySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistorySpec").field("start_quasi", &self.start_quasi).finish_non_exhaustive()
    }
}

impl HistorySpec {
    pub fn new(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { phi: Arc::new(phi), phi_prime: Arc::new(phi_prime), start_quasi: None }
    }

    /// `φ(t) = c t^k`.
    pub fn power(c: f64, k: f64) -> Self {
        Self::new(move |t| c * powf(t, k), move |t| c * k * powf(t, k - 1.0))
    }

    /// Override `y^{[1]}(a)`; the default is `r(a) Φ(φ'(a))`.
    pub fn with_start_quasiderivative(mut self, u: f64) -> Self {
        self.start_quasi = Some(u);
        self
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.phi_prime)(t)
    }

    pub fn start_quasi(&self, eq: &HalfLinearEquation) -> f64 {
        self.start_quasi
            .unwrap_or_else(|| eq.r().eval(eq.a()) * eq.exponents().phi(self.deriv(eq.a())))
    }
}
