//! Canonical solutions attached to a turning point.
//!
//! For a turning point `x0` the Langer variable `ξ` satisfies
//! `ξ'^2 ξ = v - v(x0)` with `ξ` positive on the forbidden side. Through it
//! the Airy functions give leading-order solutions
//! `π^{1/2} h^{-1/6} |ξ'|^{-1/2} Ai(h^{-2/3} ξ)` (recessive in the forbidden
//! region, `u`) and the same with `Bi` (dominant, `w`).
//!
//! Numerical counterparts are integrated from Airy-matched data: `w` from its
//! Cauchy data at `x0` in both directions, `u` from the far end of its
//! forbidden side towards `x0` (its growing direction), then scaled so that
//! `u(x0)` equals the Airy value.

use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

use crate::actions::{partial_action, ActionError, Region};
use crate::airy::airy_scaled;
use crate::geometry::{find_turning_points, Decomposition, GeometryError, ScanOptions, Slope, TurningPoint};
use crate::ivp::{integrate_with, Equation, IvpError, IvpOptions, Sample};
use crate::potential::PotentialModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LangerError {
    #[error("another turning point at x = {x} lies inside the working interval")]
    TurningPointInside { x: f64 },
    #[error("anchor x = {x} is outside the working interval [{lo}, {hi}]")]
    AnchorOutside { x: f64, lo: f64, hi: f64 },
    #[error("x = {x} is outside the working interval [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("turning point index {0} does not exist")]
    NoSuchPoint(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Recessive (`u`, built on Ai) or dominant (`w`, built on Bi) in the forbidden region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Recessive,
    Dominant,
}

/// A number stored as `mantissa * exp(log)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log: f64,
}

impl Scaled {
    #[must_use]
    pub fn value(&self) -> f64 {
        self.mantissa * self.log.exp()
    }

    #[must_use]
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.log
    }

    /// `self / other` as a plain number.
    #[must_use]
    pub fn ratio(&self, other: &Scaled) -> f64 {
        self.mantissa / other.mantissa * (self.log - other.log).exp()
    }

    #[must_use]
    pub fn mul(&self, other: &Scaled) -> Scaled {
        Scaled { mantissa: self.mantissa * other.mantissa, log: self.log + other.log }
    }
}

/// Value and derivative sharing the factor `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub value: f64,
    pub derivative: f64,
    pub log_scale: f64,
}

impl Point {
    #[must_use]
    pub fn unscaled(&self) -> (f64, f64) {
        let s = self.log_scale.exp();
        (self.value * s, self.derivative * s)
    }
}

/// Langer variable around one turning point on a working interval free of
/// other turning points (its ends may be turning points).
#[derive(Debug, Clone, PartialEq)]
pub struct LangerFrame {
    pub model: PotentialModel,
    pub energy: f64,
    pub anchor: TurningPoint,
    pub interval: (f64, f64),
    /// `ξ'(x0)`, the real cube root of `v'(x0)`.
    slope: f64,
    /// `ξ''(x0) = v''(x0) / (5 ξ'(x0)^2)`.
    curvature: f64,
    /// Half-width of the neighbourhood of `x0` where the Taylor form of `ξ` is used.
    near: f64,
}

/// `ξ`, `ξ'`, `ξ''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangerJet {
    pub xi: f64,
    pub d1: f64,
    pub d2: f64,
}

impl LangerFrame {
    pub fn new(
        model: &PotentialModel,
        energy: f64,
        anchor: TurningPoint,
        interval: (f64, f64),
    ) -> Result<Self, LangerError> {
        let (lo, hi) = interval;
        if !(lo <= anchor.x && anchor.x <= hi) {
            return Err(LangerError::AnchorOutside { x: anchor.x, lo, hi });
        }
        let tol = 1e-9 * (hi - lo).max(1e-300);
        // the ends may themselves be turning points, so they are left out of the scan
        let scan = ScanOptions { cells: 512, ..ScanOptions::default() };
        let (points, _) = find_turning_points(model, energy, (lo + tol, hi - tol), scan)?;
        if let Some(p) = points.iter().find(|p| (p.x - anchor.x).abs() > tol) {
            return Err(LangerError::TurningPointInside { x: p.x });
        }
        let j = anchor.jet;
        let slope = j.d1.cbrt();
        let curvature = j.d2 / (5.0 * slope * slope);
        let near = 1e-4 * (j.d1.abs() / j.d2.abs().max(1e-300)).min(1.0);
        Ok(Self { model: model.clone(), energy, anchor, interval, slope, curvature, near })
    }

    /// Frame for turning point `index` of `d`, extending to the neighbouring
    /// turning points or to the window edges.
    pub fn around(model: &PotentialModel, d: &Decomposition, index: usize) -> Result<Self, LangerError> {
        let p = *d.points.get(index).ok_or(LangerError::NoSuchPoint(index))?;
        let lo = if index > 0 { d.points[index - 1].x } else { d.domain.0 };
        let hi = d.points.get(index + 1).map_or(d.domain.1, |q| q.x);
        Self::new(model, d.energy, p, (lo, hi))
    }

    /// `+1` when `v` rises through the anchor, `-1` when it falls.
    #[must_use]
    pub fn sign(&self) -> f64 {
        if self.anchor.slope == Slope::Rising {
            1.0
        } else {
            -1.0
        }
    }

    fn check(&self, x: f64) -> Result<(), LangerError> {
        let (lo, hi) = self.interval;
        if x < lo || x > hi {
            return Err(LangerError::OutOfRange { x, lo, hi });
        }
        Ok(())
    }

    /// True when `x` is on the forbidden side of the anchor.
    #[must_use]
    pub fn forbidden(&self, x: f64) -> bool {
        (x - self.anchor.x) * self.sign() > 0.0
    }

    pub fn jet(&self, x: f64) -> Result<LangerJet, LangerError> {
        self.check(x)?;
        let delta = x - self.anchor.x;
        if delta.abs() <= self.near {
            return Ok(LangerJet {
                xi: self.slope * delta + 0.5 * self.curvature * delta * delta,
                d1: self.slope + self.curvature * delta,
                d2: self.curvature,
            });
        }
        let region = if self.forbidden(x) { Region::Forbidden } else { Region::Allowed };
        let s = partial_action(&self.model, self.energy, &self.anchor, x, region)?;
        let magnitude = (1.5 * s).powf(2.0 / 3.0);
        let xi = if region == Region::Forbidden { magnitude } else { -magnitude };
        let j = self.model.jet(x);
        let gap = j.v - self.energy;
        let d1 = self.sign() * (gap / xi).sqrt();
        let d2 = (j.d1 - d1 * d1 * d1) / (2.0 * d1 * xi);
        Ok(LangerJet { xi, d1, d2 })
    }

    /// Leading-order Airy form of `kind` at `x`, with the exponential factor
    /// of the Airy function split off into `log_scale` on the forbidden side.
    pub fn evaluate(&self, kind: Kind, hbar: f64, x: f64) -> Result<Point, LangerError> {
        let j = self.jet(x)?;
        Ok(airy_form(kind, hbar, j))
    }

    /// The oscillatory/exponential forms valid away from the anchor:
    /// allowed side `p^{-1/4} sin(S/h + π/4)` (`u`) or `cos` (`w`); forbidden
    /// side `½ q^{-1/4} e^{-S/h}` (`u`) or `q^{-1/4} e^{S/h}` (`w`), `S` being
    /// the partial action from the anchor.
    pub fn simplified(&self, kind: Kind, hbar: f64, x: f64) -> Result<Scaled, LangerError> {
        self.check(x)?;
        let gap = self.model.value(x) - self.energy;
        if self.forbidden(x) {
            let s = partial_action(&self.model, self.energy, &self.anchor, x, Region::Forbidden)?;
            let amp = gap.powf(-0.25);
            Ok(match kind {
                Kind::Recessive => Scaled { mantissa: 0.5 * amp, log: -s / hbar },
                Kind::Dominant => Scaled { mantissa: amp, log: s / hbar },
            })
        } else {
            let s = partial_action(&self.model, self.energy, &self.anchor, x, Region::Allowed)?;
            let amp = (-gap).powf(-0.25);
            let phase = s / hbar + FRAC_PI_4;
            let m = match kind {
                Kind::Recessive => amp * phase.sin(),
                Kind::Dominant => amp * phase.cos(),
            };
            Ok(Scaled { mantissa: m, log: 0.0 })
        }
    }
}

fn airy_form(kind: Kind, hbar: f64, j: LangerJet) -> Point {
    let t = j.xi * hbar.powf(-2.0 / 3.0);
    let s = airy_scaled(t);
    let (f, fp, log_scale) = match kind {
        Kind::Recessive => (s.values.ai, s.values.aip, -s.zeta),
        Kind::Dominant => (s.values.bi, s.values.bip, s.zeta),
    };
    let pref = PI.sqrt() * hbar.powf(-1.0 / 6.0) * j.d1.abs().powf(-0.5);
    Point {
        value: pref * f,
        derivative: pref * (-0.5 * j.d2 / j.d1 * f + hbar.powf(-2.0 / 3.0) * j.d1 * fp),
        log_scale,
    }
}

/// Airy form at the anchor itself, where `ξ = 0`.
fn anchor_form(kind: Kind, hbar: f64, slope: f64, curvature: f64) -> Point {
    airy_form(kind, hbar, LangerJet { xi: 0.0, d1: slope, d2: curvature })
}

/// A numerically integrated solution on an interval, stored as the accepted
/// integrator steps; values in between are re-integrated from the nearest
/// stored step.
#[derive(Debug, Clone)]
pub struct Solution {
    pub kind: Kind,
    pub hbar: f64,
    pub energy: f64,
    model: PotentialModel,
    steps: Vec<Sample>,
}

impl Solution {
    #[must_use]
    pub fn interval(&self) -> (f64, f64) {
        (self.steps[0].x, self.steps[self.steps.len() - 1].x)
    }

    pub fn at(&self, x: f64) -> Result<Point, LangerError> {
        let (lo, hi) = self.interval();
        if x < lo || x > hi {
            return Err(LangerError::OutOfRange { x, lo, hi });
        }
        let i = self.steps.partition_point(|s| s.x <= x).saturating_sub(1);
        let base = &self.steps[i];
        let s = if base.x == x {
            base.clone()
        } else {
            let eq = Equation { model: &self.model, energy: self.energy, hbar: self.hbar };
            integrate_with(&eq, base, &[x], IvpOptions::default(), |_| {})?.remove(0)
        };
        Ok(Point { value: s.y[0], derivative: s.y[1] / self.hbar, log_scale: s.log_scale })
    }

    /// Stored step points.
    #[must_use]
    pub fn nodes(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.x).collect()
    }
}

/// Wronskian `{f, g} = f' g - f g'` at `x`.
pub fn wronskian(f: &Solution, g: &Solution, x: f64) -> Result<Scaled, LangerError> {
    let a = f.at(x)?;
    let b = g.at(x)?;
    Ok(Scaled { mantissa: a.derivative * b.value - a.value * b.derivative, log: a.log_scale + b.log_scale })
}

fn run(eq: &Equation<'_>, start: &Sample, to: f64) -> Result<Vec<Sample>, LangerError> {
    let mut steps = vec![start.clone()];
    if to != start.x {
        integrate_with(eq, start, &[to], IvpOptions::default(), |s| steps.push(s.clone()))?;
    }
    Ok(steps)
}

fn point_sample(x: f64, p: Point, hbar: f64) -> Sample {
    Sample { x, y: vec![p.value, hbar * p.derivative], log_scale: p.log_scale }
}

/// Numerical `u` or `w` of `frame` on its working interval.
pub fn integrate_canonical(kind: Kind, frame: &LangerFrame, hbar: f64) -> Result<Solution, LangerError> {
    let eq = Equation { model: &frame.model, energy: frame.energy, hbar };
    let x0 = frame.anchor.x;
    let (lo, hi) = frame.interval;
    let at_anchor = anchor_form(kind, hbar, frame.slope, frame.curvature);
    let steps = match kind {
        Kind::Dominant => {
            let start = point_sample(x0, at_anchor, hbar);
            let mut left = run(&eq, &start, lo)?;
            left.reverse();
            let right = run(&eq, &start, hi)?;
            left.extend(right.into_iter().skip(1));
            left
        }
        Kind::Recessive => {
            let (far, near_end) = if frame.sign() > 0.0 { (hi, lo) } else { (lo, hi) };
            let start = far_end_data(frame, hbar, far)?;
            let mut steps = run(&eq, &start, x0)?;
            let anchor_state = steps.last().expect("run returns at least the start").clone();
            steps.extend(run(&eq, &anchor_state, near_end)?.into_iter().skip(1));
            // scale so that u(x0) matches the Airy value
            let factor = at_anchor.value / anchor_state.y[0];
            let shift = factor.abs().ln() - anchor_state.log_scale;
            let flip = factor.signum();
            for s in &mut steps {
                s.log_scale += shift;
                for v in &mut s.y {
                    *v *= flip;
                }
            }
            if far > x0 {
                steps.reverse();
            }
            steps
        }
    };
    Ok(Solution { kind, hbar, energy: frame.energy, model: frame.model.clone(), steps })
}

/// Starting data for `u` at the far end of its forbidden side: the dominant
/// Airy data of the turning point there, or growing WKB data at a window edge.
fn far_end_data(frame: &LangerFrame, hbar: f64, far: f64) -> Result<Sample, LangerError> {
    let j = frame.model.jet(far);
    let gap = j.v - frame.energy;
    if gap.abs() <= 1e-9 * frame.energy.abs().max(1.0) {
        let slope = j.d1.cbrt();
        let curvature = j.d2 / (5.0 * slope * slope);
        return Ok(point_sample(far, anchor_form(Kind::Dominant, hbar, slope, curvature), hbar));
    }
    let toward = (frame.anchor.x - far).signum();
    // grows in the direction of integration
    Ok(Sample { x: far, y: vec![1.0, toward * gap.max(0.0).sqrt()], log_scale: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy::AI0;
    use crate::geometry::decompose;

    fn harmonic_frame(energy: f64) -> LangerFrame {
        let m = PotentialModel::parse("x^2").unwrap();
        let d = decompose(&m, energy, (-4.0, 4.0), ScanOptions::default()).unwrap();
        LangerFrame::around(&m, &d, 1).unwrap()
    }

    #[test]
    fn frame_at_the_anchor() {
        let f = harmonic_frame(1.0);
        let j = f.jet(1.0).unwrap();
        assert!(j.xi.abs() < 1e-15);
        assert!((j.d1 - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn langer_identity_holds_across_the_interval() {
        let f = harmonic_frame(1.0);
        for &x in &[-0.9, -0.5, 0.0, 0.7, 0.99, 0.99995, 1.00005, 1.01, 1.5, 3.0] {
            let j = f.jet(x).unwrap();
            let want = x * x - 1.0;
            let got = j.d1 * j.d1 * j.xi;
            assert!(((got - want) / want).abs() < 1e-7, "{x}: {got} {want}");
            assert!(j.d1 > 0.0);
        }
        // ξ(1.5) from the closed-form action ∫_1^1.5 sqrt(y^2 - 1) dy
        let s = 0.5 * (1.5 * 1.25f64.sqrt() - (1.5 + 1.25f64.sqrt()).ln());
        assert!((f.jet(1.5).unwrap().xi - (1.5 * s).powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let m = PotentialModel::parse("(x^2-1)^2 + 0.1*x").unwrap();
        let d = decompose(&m, 0.3, (-2.0, 2.0), ScanOptions::default()).unwrap();
        let f = LangerFrame::around(&m, &d, 1).unwrap();
        for dx in [0.05, 0.2] {
            let x = f.anchor.x + dx;
            let h = 1e-4;
            let fd = (f.jet(x + h).unwrap().d1 - f.jet(x - h).unwrap().d1) / (2.0 * h);
            assert!((f.jet(x).unwrap().d2 - fd).abs() < 1e-6, "{dx}");
        }
    }

    #[test]
    fn second_turning_point_is_rejected() {
        let m = PotentialModel::parse("x^2").unwrap();
        let d = decompose(&m, 1.0, (-4.0, 4.0), ScanOptions::default()).unwrap();
        assert!(matches!(
            LangerFrame::new(&m, 1.0, d.points[1], (-4.0, 4.0)),
            Err(LangerError::TurningPointInside { .. })
        ));
    }

    #[test]
    fn anchor_value_of_u() {
        let f = harmonic_frame(1.0);
        let hbar = 0.05;
        let p = f.evaluate(Kind::Recessive, hbar, 1.0).unwrap();
        let want = PI.sqrt() * hbar.powf(-1.0 / 6.0) * 2f64.powf(-1.0 / 6.0) * AI0;
        assert!((p.value - want).abs() < 1e-13);
        let u = integrate_canonical(Kind::Recessive, &f, hbar).unwrap();
        let q = u.at(1.0).unwrap();
        assert!((q.value * q.log_scale.exp() - want).abs() < 1e-12);
    }

    #[test]
    fn wronskian_of_u_and_w_is_minus_inverse_h() {
        let f = harmonic_frame(1.0);
        for hbar in [0.1, 0.05] {
            let u = integrate_canonical(Kind::Recessive, &f, hbar).unwrap();
            let w = integrate_canonical(Kind::Dominant, &f, hbar).unwrap();
            let w0 = wronskian(&u, &w, 0.0).unwrap().value();
            let w1 = wronskian(&u, &w, 1.3).unwrap().value();
            assert!((hbar * w0 + 1.0).abs() < 5.0 * hbar, "{}", hbar * w0);
            assert!(((w1 - w0) / w0).abs() < 1e-8);
        }
    }

    #[test]
    fn integrated_u_follows_the_sine_form_in_the_well() {
        let f = harmonic_frame(1.0);
        let hbar = 0.02;
        let u = integrate_canonical(Kind::Recessive, &f, hbar).unwrap();
        for &x in &[-0.5, 0.0, 0.4] {
            let p = u.at(x).unwrap();
            let s = f.simplified(Kind::Recessive, hbar, x).unwrap().value();
            assert!((p.value * p.log_scale.exp() - s).abs() < 2.0 * hbar, "{x}");
        }
    }

    #[test]
    fn residual_of_integrated_solution() {
        let f = harmonic_frame(1.0);
        let hbar = 0.05;
        let w = integrate_canonical(Kind::Dominant, &f, hbar).unwrap();
        let d = 1e-3;
        for &x in &[-0.6, 0.3, 1.2] {
            let vals: Vec<f64> = (-2..=2)
                .map(|k| {
                    let p = w.at(x + k as f64 * d).unwrap();
                    p.value * p.log_scale.exp()
                })
                .collect();
            let second = (-vals[0] + 16.0 * vals[1] - 30.0 * vals[2] + 16.0 * vals[3] - vals[4]) / (12.0 * d * d);
            let q = x * x - 1.0;
            let res = (-hbar * hbar * second + q * vals[2]).abs();
            assert!(res <= 1e-6 * (hbar * hbar + q.abs()) * vals[2].abs().max(1e-3), "{x}: {res}");
        }
    }
}
