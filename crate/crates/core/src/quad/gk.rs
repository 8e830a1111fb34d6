//! Adaptive Gauss–Kronrod (7/15) quadrature.

use alloc::collections::BinaryHeap;
use alloc::format;
use core::cmp::Ordering;

use crate::error::{domain, precondition, Result};
use crate::math::abs;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 40;
const MAX_PANELS: usize = 20_000;

/// Result of a quadrature together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
    /// False when the tolerance was not reached before the refinement limit.
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: u32) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(format!("integrand is {v} at {x}")))
        }
    };
    let fc = eval(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = eval(c - dx)? + eval(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok(Panel { a, b, value: k * h, error: abs((k - g) * h), depth })
}

/// `∫_a^b f` with relative tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(precondition(format!("integration bounds must satisfy a < b, got [{a}, {b}]")));
    }
    let tol = tol.max(1e-15);
    let mut heap = BinaryHeap::new();
    // Geometric pre-subdivision keeps wide positive ranges well resolved.
    let mut lo = a;
    if a >= 0.0 && b > 4.0 * a {
        if a == 0.0 {
            lo = (b / 4.0).min(1.0);
            heap.push(gk15(&f, 0.0, lo, 0)?);
        }
        while lo * 2.0 < b {
            heap.push(gk15(&f, lo, lo * 2.0, 0)?);
            lo *= 2.0;
        }
    }
    heap.push(gk15(&f, lo, b, 0)?);

    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut converged = true;
    while err > tol * abs(total) + 1e-300 {
        let Some(p) = heap.pop() else {
            converged = false;
            break;
        };
        if heap.len() >= MAX_PANELS {
            heap.push(p);
            converged = false;
            break;
        }
        if p.depth >= MAX_DEPTH {
            frozen_value += p.value;
            frozen_error += p.error;
            converged = false;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let m = 0.5 * (p.a + p.b);
        let left = gk15(&f, p.a, m, p.depth + 1)?;
        let right = gk15(&f, m, p.b, p.depth + 1)?;
        total += left.value + right.value - p.value;
        err += left.error + right.error - p.error;
        heap.push(left);
        heap.push(right);
    }
    let value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
    let abs_error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
    Ok(Quadrature { value, abs_error, converged: converged && abs_error <= tol * abs(value) + 1e-300 })
}
