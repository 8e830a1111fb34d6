//! The equation `(r Φ(y'))' = p Φ(y∘τ)` and its building blocks.

mod coefficient;
mod delay;
mod equation;
mod phi;

pub use coefficient::{CoefficientExpr, CustomFactor, ExpRate};
pub use delay::{CustomDelay, DelayMap};
pub use equation::{g_eval, h_tau_eval, HalfLinearEquation};
pub use phi::{conjugate, phi, phi_inv, Exponents};
