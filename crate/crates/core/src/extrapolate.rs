//! Limit extrapolation for slowly (logarithmically) converging monotone sequences.
//!
//! Uses the Levin u-transform, which handles remainders like `c/ln t` sampled on
//! geometric grids far better than Richardson or Aitken.

use alloc::format;

use crate::error::{precondition, Result};
use crate::math::{abs, powf};

/// Extrapolated limit together with the estimate from one fewer sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub previous: f64,
    /// `|value - previous| / |value|`.
    pub spread: f64,
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Levin u-transform of order `k` over the last `k + 2` terms of `seq`.
pub fn levin_u(seq: &[f64], k: usize) -> Result<f64> {
    if k == 0 || seq.len() < k + 2 {
        return Err(precondition(format!("levin transform of order {k} needs {} terms, got {}", k + 2, seq.len())));
    }
    let s = &seq[seq.len() - k - 2..];
    let b = 1.0;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..=k {
        let a = s[j + 1] - s[j];
        if a == 0.0 {
            return Ok(s[k + 1]);
        }
        let n = (j + 1) as f64;
        let omega = (n + b) * a;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * binomial(k, j) * powf((n + b) / (k as f64 + 1.0 + b), k as f64 - 1.0);
        num += c * s[j + 1] / omega;
        den += c / omega;
    }
    Ok(num / den)
}

/// Levin estimate from the full sequence and from the sequence without its last term.
pub fn extrapolate_limit(seq: &[f64], k: usize) -> Result<LimitEstimate> {
    let value = levin_u(seq, k)?;
    let previous = levin_u(&seq[..seq.len() - 1], k)?;
    Ok(LimitEstimate { value, previous, spread: abs(value - previous) / abs(value) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ln;
    use alloc::vec::Vec;

    #[test]
    fn inverse_log_remainder() {
        // N - c/ln t (1 + d/ln t) on a geometric grid.
        let seq: Vec<f64> = (0..12)
            .map(|i| {
                let t = 1e3 * powf(1.5, i as f64);
                let l = ln(t);
                6.0 - 3.0 / l * (1.0 + 0.7 / l)
            })
            .collect();
        let est = extrapolate_limit(&seq, 3).unwrap();
        assert!((est.value - 6.0).abs() < 2e-3, "{est:?}");
        assert!(est.spread < 1e-2);
        assert!((seq[11] - 6.0).abs() > 0.2);
    }

    #[test]
    fn geometric_remainder_is_exact() {
        let seq: Vec<f64> = (0..8).map(|i| 2.0 + powf(0.5, i as f64)).collect();
        assert!((levin_u(&seq, 2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(levin_u(&[1.0, 2.0], 2).is_err());
    }
}
