//! Initial-value integration of `-h^2 ψ'' + (v - λ) ψ = 0` for several
//! solutions at once.
//!
//! Each solution is stored as the pair `(ψ, h ψ')`, which keeps both entries
//! on the same scale. The whole state shares one logarithmic scale factor:
//! whenever its largest entry leaves `[1e-100, 1e100]` it is rescaled and the
//! factor is added to `log_scale`. A complex solution is simply its real and
//! imaginary parts carried as two real solutions, since the equation is real.
//!
//! The stepper is the Dormand–Prince 5(4) pair with per-solution error
//! scaling and output points hit exactly.

use thiserror::Error;

use crate::potential::PotentialModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IvpError {
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("step budget exhausted at x = {x}")]
    TooManySteps { x: f64 },
    #[error("potential or state not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("state must hold whole (ψ, hψ') pairs, got {0} entries")]
    BadState(usize),
    #[error("output points must be monotone in the direction of integration")]
    Unordered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpOptions {
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_steps: 2_000_000 }
    }
}

/// State at one point: the true solution values are `y * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: Vec<f64>,
    pub log_scale: f64,
}

impl Sample {
    /// Wronskian `{f, g} = f' g - f g'` of solutions `i` and `j`, as a
    /// mantissa with logarithmic scale `2 * log_scale`.
    #[must_use]
    pub fn wronskian(&self, i: usize, j: usize, hbar: f64) -> f64 {
        let (f0, f1) = (self.y[2 * i], self.y[2 * i + 1]);
        let (g0, g1) = (self.y[2 * j], self.y[2 * j + 1]);
        (f1 * g0 - f0 * g1) / hbar
    }
}

/// The right-hand side `(ψ, hψ')' = (hψ'/h, (v - λ) ψ / h)`.
#[derive(Debug, Clone, Copy)]
pub struct Equation<'a> {
    pub model: &'a PotentialModel,
    pub energy: f64,
    pub hbar: f64,
}

impl Equation<'_> {
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) -> Result<(), IvpError> {
        let q = (self.model.value(x) - self.energy) / self.hbar;
        if !q.is_finite() {
            return Err(IvpError::NonFinite { x });
        }
        let r = 1.0 / self.hbar;
        for k in 0..y.len() / 2 {
            out[2 * k] = y[2 * k + 1] * r;
            out[2 * k + 1] = q * y[2 * k];
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const RESCALE_HIGH: f64 = 1e100;
const RESCALE_LOW: f64 = 1e-100;

fn rescale(y: &mut [f64], log_scale: &mut f64) {
    let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > RESCALE_HIGH || (m < RESCALE_LOW && m > 0.0) {
        for v in y.iter_mut() {
            *v /= m;
        }
        *log_scale += m.ln();
    }
}

/// Integrates from `start` through the output points `at` (monotone, all on
/// one side of `start.x`), returning one sample per output point. `every`
/// additionally receives each accepted step.
pub fn integrate_with<F: FnMut(&Sample)>(
    eq: &Equation<'_>,
    start: &Sample,
    at: &[f64],
    opts: IvpOptions,
    mut every: F,
) -> Result<Vec<Sample>, IvpError> {
    let n = start.y.len();
    if n == 0 || n % 2 != 0 {
        return Err(IvpError::BadState(n));
    }
    let Some(&last) = at.last() else { return Ok(Vec::new()) };
    let dir = if last >= start.x { 1.0 } else { -1.0 };
    if at.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (at[0] - start.x) * dir < 0.0 {
        return Err(IvpError::Unordered);
    }

    let mut x = start.x;
    let mut y = start.y.clone();
    let mut log_scale = start.log_scale;
    rescale(&mut y, &mut log_scale);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    eq.rhs(x, &y, &mut k[0])?;

    // initial step from the local oscillation/growth length h / sqrt|v - λ|
    let q = (eq.model.value(x) - eq.energy).abs();
    let mut h = 0.05 * eq.hbar / q.max(eq.hbar.powf(2.0 / 3.0)).sqrt();
    let span = (last - x).abs();
    h = h.min(span.max(f64::MIN_POSITIVE));

    let mut out = Vec::with_capacity(at.len());
    let mut target = 0;
    let mut steps = 0usize;
    while target < at.len() {
        let goal = at[target];
        if (goal - x) * dir <= 0.0 {
            out.push(Sample { x: goal, y: y.clone(), log_scale });
            target += 1;
            continue;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(IvpError::TooManySteps { x });
        }
        let remaining = (goal - x).abs();
        let lands = h >= remaining;
        let step = if lands { remaining } else { h };
        let hs = dir * step;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            eq.rhs(x + C[s] * hs, &tmp, &mut k[s])?;
        }
        // stage 7 is evaluated at the fifth-order solution (FSAL)
        y_new.copy_from_slice(&tmp);
        let mut err = 0.0f64;
        for p in 0..n / 2 {
            let scale = opts.rel_tol
                * y[2 * p].abs().max(y[2 * p + 1].abs()).max(y_new[2 * p].abs().max(y_new[2 * p + 1].abs()))
                + f64::MIN_POSITIVE;
            for i in [2 * p, 2 * p + 1] {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * hs;
                err = err.max(e.abs() / scale);
            }
        }
        if !err.is_finite() {
            return Err(IvpError::NonFinite { x });
        }
        if err <= 1.0 {
            x = if lands { goal } else { x + hs };
            std::mem::swap(&mut y, &mut y_new);
            let before = log_scale;
            rescale(&mut y, &mut log_scale);
            if log_scale != before {
                eq.rhs(x, &y, &mut k[0])?;
            } else {
                k.swap(0, 6);
            }
            every(&Sample { x, y: y.clone(), log_scale });
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        let proposed = step * factor;
        if err <= 1.0 {
            // a shortened landing step says nothing about the natural step
            h = if lands { h.max(proposed) } else { proposed };
        } else {
            h = proposed;
        }
        if h <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Err(IvpError::StepUnderflow { x });
        }
    }
    Ok(out)
}

pub fn integrate(eq: &Equation<'_>, start: &Sample, at: &[f64], opts: IvpOptions) -> Result<Vec<Sample>, IvpError> {
    integrate_with(eq, start, at, opts, |_| {})
}

/// Integrates one real or complex solution from `x_start` to `x_end`.
/// `value` and `derivative` are `ψ(x_start)` and `ψ'(x_start)`; pass
/// `complex` data as `[re, im]`. Returns the final sample.
#[allow(clippy::too_many_arguments)]
pub fn integrate_ivp(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    x_start: f64,
    value: [f64; 2],
    derivative: [f64; 2],
    x_end: f64,
    complex: bool,
) -> Result<Sample, IvpError> {
    let eq = Equation { model, energy, hbar };
    let y = if complex {
        vec![value[0], hbar * derivative[0], value[1], hbar * derivative[1]]
    } else {
        vec![value[0], hbar * derivative[0]]
    };
    let start = Sample { x: x_start, y, log_scale: 0.0 };
    Ok(integrate(&eq, &start, &[x_end], IvpOptions::default())?.remove(0))
}
