//! Action integrals over wells and barriers, partial actions measured from a
//! turning point, and inversion of the well action as a function of energy.
//!
//! Near an endpoint that is a turning point the gap `|energy - v|` is formed
//! from the Taylor jet at that point instead of by subtraction, and the energy
//! level is tilted linearly so that it meets `v` exactly at the computed
//! turning points. That keeps `1/sqrt(gap)` integrable to full precision.

use std::cell::Cell;

use thiserror::Error;

use crate::geometry::{decompose, Decomposition, GeometryError, Interval, ScanOptions, Slope, TurningPoint};
use crate::jet::Jet2;
use crate::potential::PotentialModel;
use crate::quadrature::{tanh_sinh, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("decomposition inconsistent with the potential: gap {gap:e} at x = {x}")]
    Inconsistent { x: f64, gap: f64 },
    #[error("x = {x} lies on the wrong side of the turning point at {anchor}")]
    WrongSide { anchor: f64, x: f64 },
    #[error("well count changed from {expected} to {found} at energy {energy}")]
    TopologyChange { expected: usize, found: usize, energy: f64 },
    #[error("well {well} does not exist at energy {energy}")]
    NoSuchWell { well: usize, energy: f64 },
    #[error("target action {target} outside [{lo}, {hi}] on the energy bracket")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
}

/// Classically allowed (`energy > v`) or forbidden (`energy < v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Allowed,
    Forbidden,
}

/// `|energy - v|` on `[a, b]` with optional turning-point endpoints.
struct Gap<'a> {
    model: &'a PotentialModel,
    a: f64,
    b: f64,
    ja: Option<Jet2>,
    jb: Option<Jet2>,
    level_a: f64,
    level_b: f64,
    sign: f64,
    near: f64,
    floor: f64,
    worst: Cell<Option<(f64, f64)>>,
}

impl<'a> Gap<'a> {
    fn new(
        model: &'a PotentialModel,
        energy: f64,
        region: Region,
        (a, ja): (f64, Option<Jet2>),
        (b, jb): (f64, Option<Jet2>),
    ) -> Self {
        Self {
            model,
            a,
            b,
            ja,
            jb,
            level_a: ja.map_or(energy, |j| j.v),
            level_b: jb.map_or(energy, |j| j.v),
            sign: if region == Region::Allowed { 1.0 } else { -1.0 },
            near: 1e-5 * (b - a).min(1.0),
            floor: 1e-10 * energy.abs().max(1.0),
            worst: Cell::new(None),
        }
    }

    fn eval(&self, x: f64, da: f64, db: f64) -> f64 {
        let len = self.b - self.a;
        let g = match (self.ja, self.jb) {
            (Some(j), _) if da <= self.near && da <= db => {
                let tilt = (self.level_b - j.v) * da / len;
                let dv = j.d1 * da + 0.5 * j.d2 * da * da;
                self.sign * (tilt - dv)
            }
            (_, Some(j)) if db <= self.near => {
                let tilt = (self.level_a - j.v) * db / len;
                let dv = -j.d1 * db + 0.5 * j.d2 * db * db;
                self.sign * (tilt - dv)
            }
            _ => {
                let level = self.level_a + (self.level_b - self.level_a) * (da / len);
                self.sign * (level - self.model.value(x))
            }
        };
        if g < 0.0 || g.is_nan() {
            if g.is_nan() || g < -self.floor {
                let w = self.worst.get();
                if w.map_or(true, |(_, gw)| g < gw || g.is_nan()) {
                    self.worst.set(Some((x, g)));
                }
            }
            return 0.0;
        }
        g
    }

    fn check(&self) -> Result<(), ActionError> {
        match self.worst.get() {
            Some((x, gap)) => Err(ActionError::Inconsistent { x, gap }),
            None => Ok(()),
        }
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64, ActionError> {
        let r = tanh_sinh(|x, da, db| f(self.eval(x, da, db)), self.a, self.b, QuadOptions::default());
        self.check()?;
        Ok(r?.value)
    }
}

fn endpoints(iv: &Interval) -> ((f64, Option<Jet2>), (f64, Option<Jet2>)) {
    ((iv.left.x, Some(iv.left.jet)), (iv.right.x, Some(iv.right.jet)))
}

/// Well action `∫ sqrt(energy - v)` between the turning points of `well`.
pub fn well_action(model: &PotentialModel, well: &Interval, energy: f64) -> Result<f64, ActionError> {
    let (a, b) = endpoints(well);
    Gap::new(model, energy, Region::Allowed, a, b).integrate(f64::sqrt)
}

/// Energy derivative of the well action, `(1/2) ∫ (energy - v)^{-1/2}`.
pub fn well_action_derivative(model: &PotentialModel, well: &Interval, energy: f64) -> Result<f64, ActionError> {
    let (a, b) = endpoints(well);
    let gap = Gap::new(model, energy, Region::Allowed, a, b);
    Ok(0.5 * gap.integrate(|g| 1.0 / g.sqrt())?)
}

/// Barrier action `∫ sqrt(v - energy)` across `barrier`.
pub fn barrier_action(model: &PotentialModel, barrier: &Interval, energy: f64) -> Result<f64, ActionError> {
    let (a, b) = endpoints(barrier);
    Gap::new(model, energy, Region::Forbidden, a, b).integrate(f64::sqrt)
}

/// Energy derivative of the barrier action, `-(1/2) ∫ (v - energy)^{-1/2}`.
pub fn barrier_action_derivative(model: &PotentialModel, barrier: &Interval, energy: f64) -> Result<f64, ActionError> {
    let (a, b) = endpoints(barrier);
    let gap = Gap::new(model, energy, Region::Forbidden, a, b);
    Ok(-0.5 * gap.integrate(|g| 1.0 / g.sqrt())?)
}

/// Which side of `anchor` lies in `region`.
fn region_side(anchor: &TurningPoint, region: Region) -> f64 {
    match (anchor.slope, region) {
        (Slope::Rising, Region::Allowed) | (Slope::Falling, Region::Forbidden) => -1.0,
        _ => 1.0,
    }
}

/// `|∫_anchor^x sqrt|energy - v||`, with `x` required to lie on the `region`
/// side of the turning point `anchor` and no other turning point in between.
pub fn partial_action(
    model: &PotentialModel,
    energy: f64,
    anchor: &TurningPoint,
    x: f64,
    region: Region,
) -> Result<f64, ActionError> {
    let side = region_side(anchor, region);
    if (x - anchor.x) * side < 0.0 {
        return Err(ActionError::WrongSide { anchor: anchor.x, x });
    }
    if x == anchor.x {
        return Ok(0.0);
    }
    let gap = if side > 0.0 {
        Gap::new(model, energy, region, (anchor.x, Some(anchor.jet)), (x, None))
    } else {
        Gap::new(model, energy, region, (x, None), (anchor.x, Some(anchor.jet)))
    };
    gap.integrate(f64::sqrt)
}

/// Point of `well` at which the action measured from the left edge is half the total.
pub fn action_midpoint(model: &PotentialModel, well: &Interval, energy: f64) -> Result<f64, ActionError> {
    let total = well_action(model, well, energy)?;
    let (mut lo, mut hi) = (well.left.x, well.right.x);
    let mut x = well.midpoint();
    for _ in 0..60 {
        let s = partial_action(model, energy, &well.left, x, Region::Allowed)?;
        if (s - 0.5 * total).abs() <= 1e-13 * total {
            return Ok(x);
        }
        if s < 0.5 * total {
            lo = x;
        } else {
            hi = x;
        }
        // Newton on s(x) - total/2 with ds/dx = sqrt(energy - v(x))
        let slope = (energy - model.value(x)).max(0.0).sqrt();
        let newton = x - (s - 0.5 * total) / slope;
        x = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-14 * well.width() {
            break;
        }
    }
    Ok(x)
}

/// A potential on a truncation window with turning-point scan settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub model: PotentialModel,
    pub domain: (f64, f64),
    pub scan: ScanOptions,
}

impl Landscape {
    #[must_use]
    pub fn new(model: PotentialModel, domain: (f64, f64)) -> Self {
        Self { model, domain, scan: ScanOptions::default() }
    }

    pub fn decompose(&self, energy: f64) -> Result<Decomposition, GeometryError> {
        decompose(&self.model, energy, self.domain, self.scan)
    }

    pub fn profile(&self, energy: f64) -> Result<ActionProfile, ActionError> {
        let d = self.decompose(energy)?;
        ActionProfile::from_decomposition(&self.model, &d)
    }

    /// Well action of well `well` (0-based, left to right) and its energy derivative.
    pub fn well_action_at(&self, well: usize, energy: f64) -> Result<(f64, f64), ActionError> {
        let d = self.decompose(energy)?;
        let w = d.wells.get(well).ok_or(ActionError::NoSuchWell { well, energy })?;
        Ok((well_action(&self.model, w, energy)?, well_action_derivative(&self.model, w, energy)?))
    }

    /// Energy in `bracket` at which well `well` has action `target`. The well
    /// count must stay what it is at the lower end of the bracket.
    pub fn invert_well_action(&self, well: usize, target: f64, bracket: (f64, f64)) -> Result<f64, ActionError> {
        let (mut lo, mut hi) = bracket;
        let wells_at = |e: f64| -> Result<(usize, f64, f64), ActionError> {
            let d = self.decompose(e)?;
            let w = d.wells.get(well).ok_or(ActionError::NoSuchWell { well, energy: e })?;
            Ok((
                d.wells.len(),
                well_action(&self.model, w, e)?,
                well_action_derivative(&self.model, w, e)?,
            ))
        };
        let (count, phi_lo, _) = wells_at(lo)?;
        let (count_hi, phi_hi, _) = wells_at(hi)?;
        if count_hi != count {
            return Err(ActionError::TopologyChange { expected: count, found: count_hi, energy: hi });
        }
        if !(phi_lo <= target && target <= phi_hi) {
            return Err(ActionError::OutOfRange { target, lo: phi_lo, hi: phi_hi });
        }
        let tol = 1e-11 * target.abs().max(1.0);
        let mut e = lo + (hi - lo) * (target - phi_lo) / (phi_hi - phi_lo);
        for _ in 0..100 {
            let (c, phi, dphi) = wells_at(e)?;
            if c != count {
                return Err(ActionError::TopologyChange { expected: count, found: c, energy: e });
            }
            let f = phi - target;
            if f.abs() <= tol {
                return Ok(e);
            }
            if f < 0.0 {
                lo = e;
            } else {
                hi = e;
            }
            let newton = e - f / dphi;
            e = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * e.abs().max(1e-300) {
                return Ok(e);
            }
        }
        Ok(e)
    }
}

/// Well actions, their energy derivatives and barrier actions at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProfile {
    pub energy: f64,
    pub well_actions: Vec<f64>,
    pub well_action_derivatives: Vec<f64>,
    pub barrier_actions: Vec<f64>,
}

impl ActionProfile {
    pub fn from_decomposition(model: &PotentialModel, d: &Decomposition) -> Result<Self, ActionError> {
        let e = d.energy;
        Ok(Self {
            energy: e,
            well_actions: d.wells.iter().map(|w| well_action(model, w, e)).collect::<Result<_, _>>()?,
            well_action_derivatives: d
                .wells
                .iter()
                .map(|w| well_action_derivative(model, w, e))
                .collect::<Result<_, _>>()?,
            barrier_actions: d.barriers.iter().map(|b| barrier_action(model, b, e)).collect::<Result<_, _>>()?,
        })
    }
}
