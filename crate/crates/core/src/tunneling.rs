//! Reflection and transmission through a single barrier, and the barrier
//! Wronskians of the canonical solutions.
//!
//! The incident wave `f1` and transmitted wave `f2` are fixed by WKB data
//! `p^{-1/4} exp(i S/h + iπ/4)` at an anchor on each side of the barrier,
//! with the phase measured from the adjacent barrier edge. The derivative is
//! formed analytically, amplitude term included. `f2` is integrated across
//! the barrier and split as `A f1 + B conj(f1)`; then `R = B/A`, `T = 1/A`.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::actions::{barrier_action, partial_action, ActionError, Region};
use crate::geometry::{decompose, find_turning_points, GeometryError, Interval, ScanOptions, Slope};
use crate::ivp::{integrate, Equation, IvpError, IvpOptions, Sample};
use crate::langer::{integrate_canonical, wronskian, Kind, LangerError, LangerFrame, Scaled};
use crate::potential::PotentialModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TunnelingError {
    #[error("anchor x = {x} is not in a classically allowed region")]
    AnchorForbidden { x: f64 },
    #[error("expected exactly one barrier between the anchors, found {points} turning points")]
    NotSingleBarrier { points: usize },
    #[error("no barrier with index {0} at this energy")]
    NoSuchBarrier(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error(transparent)]
    Langer(#[from] LangerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelingReport {
    pub hbar: f64,
    pub energy: f64,
    pub anchors: (f64, f64),
    pub omega: f64,
    #[serde(serialize_with = "complex_pair")]
    pub reflection: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub transmission: Complex64,
    /// `ln |T|`, finite even when `T` underflows.
    pub ln_abs_transmission: f64,
    /// `|R|^2 + |T|^2 - 1`.
    pub flux_defect: f64,
    /// Change of `{f2, conj f2}` across the integration, relative to `|A|^2 |{f1, conj f1}|`.
    pub wronskian_drift: f64,
}

fn complex_pair<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

/// `f` and `f'` at `x` for the WKB wave with phase `sign * S/h + π/4`.
fn wkb_wave(model: &PotentialModel, energy: f64, hbar: f64, x: f64, action: f64, sign: f64) -> (Complex64, Complex64) {
    let j = model.jet(x);
    let p = energy - j.v;
    let f = Complex64::from_polar(p.powf(-0.25), sign * action / hbar + FRAC_PI_4);
    let df = f * Complex64::new(j.d1 / (4.0 * p), p.sqrt() / hbar);
    (f, df)
}

fn cw(f: (Complex64, Complex64), g: (Complex64, Complex64)) -> Complex64 {
    f.1 * g.0 - f.0 * g.1
}

/// Scattering data for the barrier between the allowed points `anchors`.
pub fn compute_rt(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    anchors: (f64, f64),
) -> Result<TunnelingReport, TunnelingError> {
    let (xl, xr) = anchors;
    for x in [xl, xr] {
        if model.value(x) >= energy {
            return Err(TunnelingError::AnchorForbidden { x });
        }
    }
    let (points, _) = find_turning_points(model, energy, (xl, xr), ScanOptions::default())?;
    if points.len() != 2 || points[0].slope != Slope::Rising {
        return Err(TunnelingError::NotSingleBarrier { points: points.len() });
    }
    let barrier = Interval { left: points[0], right: points[1] };
    let omega = barrier_action(model, &barrier, energy)?;
    let theta1 = partial_action(model, energy, &barrier.left, xl, Region::Allowed)?;
    let theta2 = partial_action(model, energy, &barrier.right, xr, Region::Allowed)?;

    let f1 = wkb_wave(model, energy, hbar, xl, theta1, -1.0);
    let f2_start = wkb_wave(model, energy, hbar, xr, theta2, 1.0);

    let eq = Equation { model, energy, hbar };
    let start = Sample {
        x: xr,
        y: vec![f2_start.0.re, hbar * f2_start.1.re, f2_start.0.im, hbar * f2_start.1.im],
        log_scale: 0.0,
    };
    let end = integrate(&eq, &start, &[xl], IvpOptions::default())?.remove(0);
    let f2 = (Complex64::new(end.y[0], end.y[2]), Complex64::new(end.y[1], end.y[3]) / hbar);

    let bar = |f: (Complex64, Complex64)| (f.0.conj(), f.1.conj());
    let base = cw(f1, bar(f1));
    let a = cw(f2, bar(f1)) / base;
    let b = cw(f1, f2) / base;
    let log = end.log_scale;
    let reflection = b / a;
    let transmission = a.inv() * (-log).exp();
    let ln_abs_transmission = -a.norm().ln() - log;
    let flux_defect = reflection.norm_sqr() + (2.0 * ln_abs_transmission).exp() - 1.0;
    let w_start = cw(f2_start, bar(f2_start));
    let w_end = cw(f2, bar(f2));
    let scale = a.norm_sqr() * base.norm();
    let wronskian_drift = ((w_end - w_start * (-2.0 * log).exp()) / scale).norm();
    Ok(TunnelingReport {
        hbar,
        energy,
        anchors,
        omega,
        reflection,
        transmission,
        ln_abs_transmission,
        flux_defect,
        wronskian_drift,
    })
}

/// Wronskians of the canonical solutions attached to the two edges `b1 < b2`
/// of one barrier, evaluated at the barrier midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WronskianSuite {
    pub hbar: f64,
    pub omega: f64,
    /// `{u, w}` at `b1`, expected `-1/h`.
    pub uw_left: f64,
    /// `{u, w}` at `b2`, expected `+1/h`.
    pub uw_right: f64,
    /// `{u(b1), u(b2)}`, expected `-(2h)^{-1} e^{-Ω/h}`.
    pub uu: Scaled,
    /// `{w(b1), w(b2)}`, expected `2 h^{-1} e^{Ω/h}`.
    pub ww: Scaled,
    /// `{u(b1), w(b2)}`, exponentially small.
    pub uw_cross: Scaled,
    /// `{w(b1), u(b2)}`, exponentially small.
    pub wu_cross: Scaled,
    /// `{f1, conj f1} = -2i {u(b1), w(b1)}`, expected `2i/h`.
    pub f1_f1bar: Complex64,
}

impl WronskianSuite {
    /// `{u(b1), u(b2)} · (-2h e^{Ω/h})`, expected `1 + O(h)`.
    #[must_use]
    pub fn uu_normalized(&self) -> f64 {
        -2.0 * self.hbar * self.uu.mantissa * (self.uu.log + self.omega / self.hbar).exp()
    }

    /// `{w(b1), w(b2)} · (h/2) e^{-Ω/h}`, expected `1 + O(h)`.
    #[must_use]
    pub fn ww_normalized(&self) -> f64 {
        0.5 * self.hbar * self.ww.mantissa * (self.ww.log - self.omega / self.hbar).exp()
    }
}

/// Canonical-solution Wronskians for barrier `index` (0-based) of `model` at `energy`.
pub fn wronskian_suite(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    domain: (f64, f64),
    index: usize,
) -> Result<WronskianSuite, TunnelingError> {
    let d = decompose(model, energy, domain, ScanOptions::default())?;
    let barrier = *d.barriers.get(index).ok_or(TunnelingError::NoSuchBarrier(index))?;
    let left = LangerFrame::around(model, &d, 2 * index + 1)?;
    let right = LangerFrame::around(model, &d, 2 * index + 2)?;
    let u1 = integrate_canonical(Kind::Recessive, &left, hbar)?;
    let w1 = integrate_canonical(Kind::Dominant, &left, hbar)?;
    let u2 = integrate_canonical(Kind::Recessive, &right, hbar)?;
    let w2 = integrate_canonical(Kind::Dominant, &right, hbar)?;
    let x = barrier.midpoint();
    let uw_left = wronskian(&u1, &w1, x)?.value();
    Ok(WronskianSuite {
        hbar,
        omega: barrier_action(model, &barrier, energy)?,
        uw_left,
        uw_right: wronskian(&u2, &w2, x)?.value(),
        uu: wronskian(&u1, &u2, x)?,
        ww: wronskian(&w1, &w2, x)?,
        uw_cross: wronskian(&u1, &w2, x)?,
        wu_cross: wronskian(&w1, &u2, x)?,
        f1_f1bar: Complex64::new(0.0, -2.0 * uw_left),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::action_midpoint;

    fn double_well_anchors(energy: f64) -> (PotentialModel, (f64, f64)) {
        let m = PotentialModel::parse("(x^2-1)^2").unwrap();
        let d = decompose(&m, energy, (-2.0, 2.0), ScanOptions::default()).unwrap();
        let xl = action_midpoint(&m, &d.wells[0], energy).unwrap();
        let xr = action_midpoint(&m, &d.wells[1], energy).unwrap();
        (m, (xl, xr))
    }

    #[test]
    fn flux_is_conserved() {
        let (m, anchors) = double_well_anchors(0.25);
        for hbar in [0.1, 0.05] {
            let r = compute_rt(&m, 0.25, hbar, anchors).unwrap();
            assert!(r.flux_defect.abs() < 1e-6, "{}", r.flux_defect);
            assert!(r.wronskian_drift < 1e-6);
            assert!(r.reflection.norm() <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn transmission_follows_the_barrier_action() {
        let (m, anchors) = double_well_anchors(0.25);
        let hbar = 0.05;
        let r = compute_rt(&m, 0.25, hbar, anchors).unwrap();
        let ratio = (r.ln_abs_transmission + r.omega / hbar).exp();
        assert!((ratio - 1.0).abs() < 5.0 * hbar, "{ratio}");
        assert!((r.reflection.norm() - 1.0).abs() < 5.0 * hbar);
    }

    #[test]
    fn anchors_must_be_allowed() {
        let m = PotentialModel::parse("(x^2-1)^2").unwrap();
        assert!(matches!(compute_rt(&m, 0.25, 0.05, (0.0, 1.0)), Err(TunnelingError::AnchorForbidden { .. })));
        assert!(matches!(compute_rt(&m, 0.25, 0.05, (-1.0, -0.9)), Err(TunnelingError::NotSingleBarrier { .. })));
    }

    #[test]
    fn moduli_do_not_depend_on_the_anchors_in_flat_regions() {
        // sech^2 barrier: v is flat to e^{-12} near |x| = 6
        let m = PotentialModel::parse("1/cosh(x)^2").unwrap();
        let (e, hbar) = (0.5f64, 0.1);
        let wavelength = 2.0 * std::f64::consts::PI * hbar / e.sqrt();
        let a = compute_rt(&m, e, hbar, (-6.0, 6.0)).unwrap();
        let b = compute_rt(&m, e, hbar, (-6.0 - wavelength, 6.0 + wavelength)).unwrap();
        assert!(((a.reflection.norm() - b.reflection.norm()) / a.reflection.norm()).abs() < 1e-4);
        assert!(((a.transmission.norm() - b.transmission.norm()) / a.transmission.norm()).abs() < 1e-4);
    }

    #[test]
    fn barrier_wronskians() {
        let m = PotentialModel::parse("(x^2-1)^2").unwrap();
        let hbar = 0.05;
        let s = wronskian_suite(&m, 0.25, hbar, (-2.0, 2.0), 0).unwrap();
        assert!((hbar * s.uw_left + 1.0).abs() <= 5.0 * hbar, "{}", s.uw_left);
        assert!((hbar * s.uw_right - 1.0).abs() <= 5.0 * hbar, "{}", s.uw_right);
        assert!((s.uu_normalized() - 1.0).abs() <= 5.0 * hbar, "{}", s.uu_normalized());
        assert!((s.ww_normalized() - 1.0).abs() <= 5.0 * hbar, "{}", s.ww_normalized());
        let bound = (-0.8 * s.omega / hbar).exp() / hbar;
        assert!(s.uw_cross.value().abs() <= bound);
        assert!(s.wu_cross.value().abs() <= bound);
    }
}
