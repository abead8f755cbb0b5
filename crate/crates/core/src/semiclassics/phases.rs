use std::f64::consts::{FRAC_PI_4, PI};

use serde::Serialize;

use super::SemiclassicalError;
use crate::actions::{action_midpoint, barrier_action, partial_action, Region};
use crate::geometry::{Decomposition, Interval};
use crate::oracle::{derivative, Grid};
use crate::potential::PotentialModel;

/// Below this in both `|ψ|` and `|h ψ'|` the amplitude is not measurable.
const AMPLITUDE_FLOOR: f64 = 1e-13;

/// Which edge of a well the phase is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Local fit `ψ ≈ A p^{-1/4} sin(S/h + θ)` with `p = λ - v` and `S` the
/// partial action from the `side` turning point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMeasurement {
    pub well: usize,
    pub side: Side,
    pub x: f64,
    pub amplitude: f64,
    /// In `[0, π)`.
    pub theta: f64,
    /// Distance of `theta` from π/4 modulo π, in `[0, π/2]`.
    pub delta: f64,
    pub determinate: bool,
    /// The node is within `3 h^{2/3}` of a well edge.
    pub near_turning_point: bool,
}

/// Phase and amplitude at the grid node nearest `x`.
#[allow(clippy::too_many_arguments)]
pub fn extract_phase(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    grid: &Grid,
    psi: &[f64],
    well: (usize, &Interval),
    side: Side,
    x: f64,
) -> Result<PhaseMeasurement, SemiclassicalError> {
    let (index, interval) = well;
    let i = grid.nearest(x);
    let xi = grid.x(i);
    if !(interval.left.x < xi && xi < interval.right.x) {
        return Err(SemiclassicalError::OutsideWell { x: xi, left: interval.left.x, right: interval.right.x });
    }
    let jet = model.jet(xi);
    let p = energy - jet.v;
    let (anchor, sign) = match side {
        Side::Left => (&interval.left, 1.0),
        Side::Right => (&interval.right, -1.0),
    };
    let s = partial_action(model, energy, anchor, xi, Region::Allowed)?;
    let value = psi[i];
    let slope = hbar * derivative(psi, grid.step(), i);
    let q = p.powf(0.25);
    let sin_part = value * q;
    let cos_part = sign * (slope - hbar * jet.d1 / (4.0 * p) * value) / q;
    let amplitude = sin_part.hypot(cos_part);
    let theta = (sin_part.atan2(cos_part) - s / hbar).rem_euclid(PI);
    let off = (theta - FRAC_PI_4).rem_euclid(PI);
    let margin = 3.0 * hbar.powf(2.0 / 3.0);
    Ok(PhaseMeasurement {
        well: index,
        side,
        x: xi,
        amplitude,
        theta,
        delta: off.min(PI - off),
        determinate: value.abs() >= AMPLITUDE_FLOOR || slope.abs() >= AMPLITUDE_FLOOR,
        near_turning_point: xi - interval.left.x < margin || interval.right.x - xi < margin,
    })
}

/// Phases of one eigenfunction, two per well, measured at each well's action midpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub energy: f64,
    pub hbar: f64,
    /// Ordered by well, left side first.
    pub measurements: Vec<PhaseMeasurement>,
}

pub fn measure_phases(
    model: &PotentialModel,
    decomposition: &Decomposition,
    hbar: f64,
    grid: &Grid,
    psi: &[f64],
) -> Result<PhaseReport, SemiclassicalError> {
    let energy = decomposition.energy;
    let mut measurements = Vec::with_capacity(2 * decomposition.wells.len());
    for (k, well) in decomposition.wells.iter().enumerate() {
        let x = action_midpoint(model, well, energy)?;
        for side in [Side::Left, Side::Right] {
            measurements.push(extract_phase(model, energy, hbar, grid, psi, (k, well), side, x)?);
        }
    }
    Ok(PhaseReport { energy, hbar, measurements })
}

impl PhaseReport {
    #[must_use]
    pub fn get(&self, well: usize, side: Side) -> Option<&PhaseMeasurement> {
        self.measurements.iter().find(|m| m.well == well && m.side == side)
    }

    /// Fixing verdict for the barrier between wells `barrier` and `barrier + 1`.
    #[must_use]
    pub fn barrier_fixing(&self, barrier: usize, c_f: f64) -> Option<FixingVerdict> {
        let a = self.get(barrier, Side::Right)?;
        let b = self.get(barrier + 1, Side::Left)?;
        Some(check_fixing(a, b, self.hbar, c_f))
    }

    /// Number of well edges whose phase is within `c_f h` of π/4 or indeterminate.
    #[must_use]
    pub fn edges_fixed(&self, c_f: f64) -> usize {
        self.measurements.iter().filter(|m| !m.determinate || m.delta <= c_f * self.hbar).count()
    }

    #[must_use]
    pub fn max_amplitude(&self) -> f64 {
        self.measurements.iter().map(|m| m.amplitude).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixingVerdict {
    pub pass: bool,
    /// Smaller phase distance of the two sides, ignoring indeterminate ones.
    pub min_delta: f64,
    pub tolerance: f64,
}

/// At least one of the two edges facing a barrier carries the π/4 phase.
#[must_use]
pub fn check_fixing(a: &PhaseMeasurement, b: &PhaseMeasurement, hbar: f64, c_f: f64) -> FixingVerdict {
    let tolerance = c_f * hbar;
    let min_delta = [a, b].iter().filter(|m| m.determinate).map(|m| m.delta).fold(f64::INFINITY, f64::min);
    let pass = !a.determinate || !b.determinate || min_delta <= tolerance;
    FixingVerdict { pass, min_delta, tolerance }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Localization {
    /// `A_far / A_near`.
    pub ratio: f64,
    /// `-h ln(ratio)`; comparable to the barrier action.
    pub exponent: f64,
}

pub fn localization_ratio(
    near: &PhaseMeasurement,
    far: &PhaseMeasurement,
    hbar: f64,
) -> Result<Localization, SemiclassicalError> {
    for m in [near, far] {
        if !m.determinate {
            return Err(SemiclassicalError::Indeterminate { x: m.x });
        }
    }
    let ratio = far.amplitude / near.amplitude;
    Ok(Localization { ratio, exponent: -hbar * ratio.ln() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecaySample {
    pub x: f64,
    pub abs_psi: f64,
    /// `C · A_max · e^{ε Ω/h} (e^{-S_left/h} + e^{-S_right/h})`.
    pub bound: f64,
    pub ln_abs_psi: f64,
    pub ln_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub omega: f64,
    pub samples: Vec<DecaySample>,
    pub pass: bool,
}

/// Compares `|ψ|` inside a barrier, at least `h^{2/3}` from its edges, with
/// the two-sided exponential envelope. Works with logarithms throughout.
#[allow(clippy::too_many_arguments)]
pub fn barrier_decay_check(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    barrier: &Interval,
    grid: &Grid,
    psi: &[f64],
    amplitude: f64,
    constant: f64,
    epsilon: f64,
    max_samples: usize,
) -> Result<DecayProfile, SemiclassicalError> {
    let margin = hbar.powf(2.0 / 3.0);
    let (lo, hi) = (barrier.left.x + margin, barrier.right.x - margin);
    let nodes: Vec<usize> = (0..grid.n).filter(|&i| (lo..=hi).contains(&grid.x(i))).collect();
    if nodes.is_empty() {
        return Err(SemiclassicalError::NoBarrierInterior { margin });
    }
    let stride = nodes.len().div_ceil(max_samples.max(1));
    let omega = barrier_action(model, barrier, energy)?;
    let ln_scale = (constant * amplitude).ln() + epsilon * omega / hbar;
    let mut samples = Vec::new();
    for &i in nodes.iter().step_by(stride) {
        let x = grid.x(i);
        let s_left = partial_action(model, energy, &barrier.left, x, Region::Forbidden)?;
        let s_right = partial_action(model, energy, &barrier.right, x, Region::Forbidden)?;
        let (a, b) = (-s_left / hbar, -s_right / hbar);
        let top = a.max(b);
        let ln_bound = ln_scale + top + ((a - top).exp() + (b - top).exp()).ln();
        let abs_psi = psi[i].abs();
        samples.push(DecaySample { x, abs_psi, bound: ln_bound.exp(), ln_abs_psi: abs_psi.ln(), ln_bound });
    }
    let pass = samples.iter().all(|s| s.ln_abs_psi <= s.ln_bound);
    Ok(DecayProfile { omega, samples, pass })
}
