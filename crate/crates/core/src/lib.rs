//! Numerical toolkit for increasing solutions of half-linear delay equations
//! `(r(t) Φ(y'))' = p(t) Φ(y(τ(t)))`.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`model`]: the Φ algebra, structured coefficients, delay maps and the equation type;
//! * [`quad`]: adaptive quadrature, improper-integral classification and changes of variable;
//! * [`rvkit`]: regular-variation index estimation, Karamata and de Haan checks;
//! * [`dde`]: a method-of-steps RK4 integrator with dense output, plus trajectory classification;
//! * [`asymptotics`]: the theorem engines that check hypotheses and compare trajectories
//!   against the predicted asymptotic formulae.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;

pub mod asymptotics;
pub mod dde;
pub mod error;
pub mod extrapolate;
pub mod model;
pub mod quad;
pub mod rvkit;

pub use error::{Error, Result};
pub use model::{
    conjugate, g_eval, h_tau_eval, phi, phi_inv, CoefficientExpr, DelayMap, Exponents,
    HalfLinearEquation,
};
