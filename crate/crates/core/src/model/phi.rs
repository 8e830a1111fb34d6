use crate::error::{invalid, Result};
use crate::math::{abs, powf, sign};

/// The pair (α, β) with 1/α + 1/β = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    alpha: f64,
    beta: f64,
}

impl Exponents {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self { alpha, beta: conjugate(alpha)? })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Φ(u) = |u|^{α-1} sgn u`.
    #[inline]
    pub fn phi(&self, u: f64) -> f64 {
        signed_pow(u, self.alpha - 1.0)
    }

    /// `Φ^{-1}(v) = |v|^{β-1} sgn v`.
    #[inline]
    pub fn phi_inv(&self, v: f64) -> f64 {
        signed_pow(v, self.beta - 1.0)
    }

    /// The exponents of the reciprocal equation, where α and β trade places.
    pub fn swapped(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha }
    }
}

#[inline]
fn signed_pow(u: f64, k: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else if k == 1.0 {
        u
    } else {
        sign(u) * powf(abs(u), k)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(invalid(alloc::format!("alpha must exceed 1, got {alpha}")))
    }
}

/// Conjugate exponent `α/(α-1)`.
pub fn conjugate(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha / (alpha - 1.0))
}

pub fn phi(u: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(signed_pow(u, alpha - 1.0))
}

pub fn phi_inv(v: f64, alpha: f64) -> Result<f64> {
    let beta = conjugate(alpha)?;
    Ok(signed_pow(v, beta - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        assert_eq!(phi(2.0, 2.0).unwrap(), 2.0);
        assert!((phi(-3.0, 3.0).unwrap() + 9.0).abs() < 1e-12);
        assert_eq!(phi(0.0, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn phi_inv_examples() {
        assert_eq!(phi_inv(4.0, 2.0).unwrap(), 4.0);
        assert!((phi_inv(-9.0, 3.0).unwrap() + 3.0).abs() < 1e-12);
        assert!((phi_inv(8.0, 4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(conjugate(2.0).unwrap(), 2.0);
        assert_eq!(conjugate(3.0).unwrap(), 1.5);
        assert!((conjugate(1.5).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_alpha_le_one() {
        assert!(phi(1.0, 1.0).is_err());
        assert!(phi_inv(1.0, 0.5).is_err());
        assert!(conjugate(f64::NAN).is_err());
        assert!(Exponents::new(1.0).is_err());
    }
}
