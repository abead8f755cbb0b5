//! Double-exponential (tanh-sinh) quadrature on a finite interval.
//!
//! The integrand receives the node together with its distances to both
//! endpoints, computed without cancellation, so integrands that vanish or
//! blow up like a power of the distance to an endpoint can be evaluated
//! accurately right up to it.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Stop once two successive levels agree to this relative tolerance.
    pub rel_tol: f64,
    pub max_level: u32,
    pub min_level: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11, max_level: 12, min_level: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two levels.
    pub error_estimate: f64,
    pub level: u32,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value}, last level difference {error_estimate}")]
    NotConverged { value: f64, error_estimate: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

/// Largest abscissa parameter used; endpoint distances there are ~1e-275 of the half-width.
const T_MAX: f64 = 6.0;

/// Integrates `f(x, x - a, b - x)` over `[a, b]`.
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, level: 0, evaluations: 0 });
    }
    let half = 0.5 * (b - a);
    let mid = a + half;
    let mut evaluations = 0usize;

    // Contribution of the symmetric pair of nodes at parameter t (or the centre for t = 0).
    let mut pair = |t: f64| -> Result<f64, QuadError> {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u).exp();
        // distance from the nearer endpoint: half (1 - tanh u)
        let dist = half * 2.0 * e / (1.0 + e);
        let w = half * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if t == 0.0 {
            evaluations += 1;
            let y = f(mid, half, half);
            if !y.is_finite() {
                return Err(QuadError::NonFinite { x: mid });
            }
            return Ok(w * y);
        }
        if dist == 0.0 || w == 0.0 {
            return Ok(0.0);
        }
        let far = 2.0 * half - dist;
        let (xr, xl) = (b - dist, a + dist);
        evaluations += 2;
        let yr = f(xr, far, dist);
        let yl = f(xl, dist, far);
        if !yr.is_finite() {
            return Err(QuadError::NonFinite { x: xr });
        }
        if !yl.is_finite() {
            return Err(QuadError::NonFinite { x: xl });
        }
        Ok(w * (yr + yl))
    };

    let mut h = 1.0;
    let mut sum = pair(0.0)?;
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += pair(k * h)?;
        k += 1.0;
    }
    let mut prev = h * sum;
    let mut err = f64::INFINITY;
    for level in 1..=opts.max_level {
        h *= 0.5;
        let mut j = 1.0;
        while j * h <= T_MAX {
            sum += pair(j * h)?;
            j += 2.0;
        }
        let cur = h * sum;
        err = (cur - prev).abs();
        if level >= opts.min_level && err <= opts.rel_tol * cur.abs() {
            return Ok(QuadResult { value: cur, error_estimate: err, level, evaluations });
        }
        prev = cur;
    }
    Err(QuadError::NotConverged { value: prev, error_estimate: err })
}
