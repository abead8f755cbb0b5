//! Turning points and the decomposition of a truncation window into
//! classically allowed wells and forbidden barriers at a fixed energy.

use serde::Serialize;
use thiserror::Error;

use crate::jet::Jet2;
use crate::potential::PotentialModel;

/// Default lower bound on `|v'|` at a turning point.
pub const DEFAULT_TAU_CRIT: f64 = 1e-6;
pub const DEFAULT_SCAN_CELLS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slope {
    /// `v' < 0`: left edge of a well.
    Falling,
    /// `v' > 0`: right edge of a well.
    Rising,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub x: f64,
    pub slope: Slope,
    /// `(v, v', v'')` at `x`.
    pub jet: Jet2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryWarning {
    /// Two roots were found inside one scan cell.
    Aliasing { cell: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("critical energy: |v'({x})| = {slope:e} is below the threshold {tau:e}")]
    CriticalEnergy { x: f64, slope: f64, tau: f64 },
    #[error("potential is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("energy {energy} is not below the potential at the window edge x = {x}")]
    NotConfined { x: f64, energy: f64 },
    #[error("turning points do not alternate: {0}")]
    Inconsistent(String),
    #[error("invalid window [{a}, {b}]")]
    InvalidDomain { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub left: TurningPoint,
    pub right: TurningPoint,
}

impl Interval {
    #[must_use]
    pub fn width(&self) -> f64 {
        self.right.x - self.left.x
    }

    #[must_use]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left.x + self.right.x)
    }
}

/// Wells and interior barriers at one energy, ordered left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub energy: f64,
    pub domain: (f64, f64),
    pub points: Vec<TurningPoint>,
    pub wells: Vec<Interval>,
    pub barriers: Vec<Interval>,
    pub warnings: Vec<GeometryWarning>,
}

/// Scan/refinement settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub cells: usize,
    pub tau_crit: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { cells: DEFAULT_SCAN_CELLS, tau_crit: DEFAULT_TAU_CRIT }
    }
}

fn jet_at(model: &PotentialModel, x: f64) -> Result<Jet2, GeometryError> {
    let j = model.jet(x);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(GeometryError::NonFinite { x })
    }
}

/// Safeguarded Newton for `v(x) = energy` inside a sign-changing bracket.
fn refine_root(model: &PotentialModel, energy: f64, mut lo: f64, mut hi: f64) -> Result<f64, GeometryError> {
    let mut flo = jet_at(model, lo)?.v - energy;
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let j = jet_at(model, x)?;
        let f = j.v - energy;
        if f == 0.0 {
            return Ok(x);
        }
        if (f < 0.0) == (flo < 0.0) {
            lo = x;
            flo = f;
        } else {
            hi = x;
        }
        let newton = x - f / j.d1;
        let next = if j.d1 != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(next);
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(x);
        }
        x = next;
    }
    Ok(x)
}

/// Location of a zero of `v'` inside `[lo, hi]` where `v'` changes sign.
fn refine_extremum(model: &PotentialModel, mut lo: f64, mut hi: f64) -> Result<f64, GeometryError> {
    let mut dlo = jet_at(model, lo)?.d1;
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        let d = jet_at(model, m)?.d1;
        if (d < 0.0) == (dlo < 0.0) {
            lo = m;
            dlo = d;
        } else {
            hi = m;
        }
        if hi - lo <= 4.0 * f64::EPSILON * m.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All solutions of `v(x) = energy` in `domain`, located by a sign-change scan
/// over `opts.cells` cells and refined to near machine precision. Cells in
/// which `v'` changes sign are also probed at the enclosed extremum so that
/// root pairs hiding inside one cell are found; they are reported as
/// [`GeometryWarning::Aliasing`].
pub fn find_turning_points(
    model: &PotentialModel,
    energy: f64,
    domain: (f64, f64),
    opts: ScanOptions,
) -> Result<(Vec<TurningPoint>, Vec<GeometryWarning>), GeometryError> {
    let (a, b) = domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(GeometryError::InvalidDomain { a, b });
    }
    let n = opts.cells.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let jets = xs.iter().map(|&x| jet_at(model, x)).collect::<Result<Vec<_>, _>>()?;
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..n {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (f0, f1) = (jets[i].v - energy, jets[i + 1].v - energy);
        if f0 == 0.0 {
            if i > 0 || a == x0 {
                roots.push(x0);
            }
            continue;
        }
        if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            roots.push(refine_root(model, energy, x0, x1)?);
            continue;
        }
        if f1 == 0.0 {
            continue;
        }
        // same sign at both ends: look for an extremum crossing the level
        let (d0, d1) = (jets[i].d1, jets[i + 1].d1);
        if (d0 < 0.0) != (d1 < 0.0) {
            let xe = refine_extremum(model, x0, x1)?;
            let fe = jet_at(model, xe)?.v - energy;
            if fe == 0.0 || (fe < 0.0) != (f0 < 0.0) {
                warnings.push(GeometryWarning::Aliasing { cell: (x0, x1) });
                roots.push(refine_root(model, energy, x0, xe)?);
                roots.push(refine_root(model, energy, xe, x1)?);
            }
        }
    }
    if (jets[n].v - energy) == 0.0 {
        roots.push(b);
    }
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * p.abs().max(1.0));
    let mut points = Vec::with_capacity(roots.len());
    for x in roots {
        let jet = jet_at(model, x)?;
        if jet.d1.abs() < opts.tau_crit {
            return Err(GeometryError::CriticalEnergy { x, slope: jet.d1.abs(), tau: opts.tau_crit });
        }
        let slope = if jet.d1 > 0.0 { Slope::Rising } else { Slope::Falling };
        points.push(TurningPoint { x, slope, jet });
    }
    Ok((points, warnings))
}

/// Splits `domain` at `energy` into wells and finite barriers. The energy must
/// lie below `v` at both window edges.
pub fn decompose(
    model: &PotentialModel,
    energy: f64,
    domain: (f64, f64),
    opts: ScanOptions,
) -> Result<Decomposition, GeometryError> {
    let (a, b) = domain;
    for x in [a, b] {
        let v = jet_at(model, x)?.v;
        if v <= energy {
            return Err(GeometryError::NotConfined { x, energy });
        }
    }
    let (points, warnings) = find_turning_points(model, energy, domain, opts)?;
    if points.len() % 2 != 0 {
        return Err(GeometryError::Inconsistent(format!("odd number of turning points ({})", points.len())));
    }
    for (i, p) in points.iter().enumerate() {
        let want = if i % 2 == 0 { Slope::Falling } else { Slope::Rising };
        if p.slope != want {
            return Err(GeometryError::Inconsistent(format!("turning point {i} at x = {} has the wrong orientation", p.x)));
        }
    }
    let wells: Vec<Interval> =
        points.chunks(2).map(|c| Interval { left: c[0], right: c[1] }).collect();
    let barriers: Vec<Interval> =
        wells.windows(2).map(|w| Interval { left: w[0].right, right: w[1].left }).collect();
    for (intervals, allowed) in [(&wells, true), (&barriers, false)] {
        for iv in intervals.iter() {
            for k in 1..8 {
                let x = iv.left.x + iv.width() * k as f64 / 8.0;
                let v = jet_at(model, x)?.v;
                if (v < energy) != allowed {
                    return Err(GeometryError::Inconsistent(format!(
                        "sign of v - energy at x = {x} contradicts the interval [{}, {}]",
                        iv.left.x, iv.right.x
                    )));
                }
            }
        }
    }
    Ok(Decomposition { energy, domain, points, wells, barriers, warnings })
}
