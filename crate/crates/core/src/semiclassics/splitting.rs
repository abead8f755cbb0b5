use serde::Serialize;

use super::spectrum::{match_spectrum, predict_spectrum, IntervalCount};
use super::{SemiclassicalError, DEFAULT_RADIUS_CONSTANT};
use crate::actions::{action_midpoint, barrier_action, Landscape};
use crate::geometry::{decompose, ScanOptions};
use crate::ivp::{integrate, Equation, IvpOptions, Sample};
use crate::langer::{integrate_canonical, wronskian, Kind, LangerFrame, Scaled};
use crate::oracle::{Grid, Operator, Tridiagonal};
use crate::par::Exec;
use crate::potential::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// The `k`-th even and `k`-th odd eigenvalue of a symmetric potential,
/// both Richardson-refined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitPair {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_parity: Parity,
    pub mean: f64,
    pub splitting: f64,
    /// Barrier action at `mean`, when there is a single barrier.
    pub omega: Option<f64>,
    /// `-h ln(splitting)`.
    pub exponent: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub hbar: f64,
    pub window: (f64, f64),
    pub nodes: usize,
    /// Every pair with both members below the top of the window, lowest first.
    pub pairs: Vec<SplitPair>,
    /// Pairs straddling a window edge.
    pub excluded: Vec<String>,
    /// The sorted union of both sectors alternates even, odd, even, ...
    pub parity_alternates: bool,
    /// Richardson-refined eigenvalues inside the window.
    pub window_eigenvalues: Vec<f64>,
    pub intervals: Vec<IntervalCount>,
}

impl SplittingReport {
    pub fn in_window(&self) -> impl Iterator<Item = &SplitPair> {
        self.pairs.iter().filter(|p| p.in_window)
    }
}

fn check_symmetric(model: &PotentialModel, domain: (f64, f64)) -> Result<(), SemiclassicalError> {
    let half = domain.0.abs().max(domain.1.abs());
    for i in 0..=256 {
        let x = half * f64::from(i) / 256.0;
        let (a, b) = (model.value(x), model.value(-x));
        let diff = (a - b).abs();
        if diff > 1e-12 * a.abs().max(1.0) || !diff.is_finite() {
            return Err(SemiclassicalError::NotSymmetric { x, diff });
        }
    }
    Ok(())
}

fn below(t: &Tridiagonal, top: f64, exec: Exec) -> Vec<f64> {
    let (lo, _) = t.bounds();
    t.eigenvalues_in((lo - 1.0, top), exec).into_iter().map(|p| p.1).collect()
}

/// Paired eigenvalues of a potential symmetric about 0, computed separately
/// in the even and odd sectors so that splittings far below the eigenvalue
/// scale stay resolved.
pub fn double_well_analysis(
    model: &PotentialModel,
    hbar: f64,
    window: (f64, f64),
    domain: (f64, f64),
    exec: Exec,
) -> Result<SplittingReport, SemiclassicalError> {
    check_symmetric(model, domain)?;
    let grid = Grid::auto(domain, hbar);
    let coarse = Operator::assemble(model, grid, hbar)?;
    let fine = Operator::assemble(model, grid.refined(), hbar)?;
    let (even, odd) = coarse.parity_sectors()?;
    let (even_fine, odd_fine) = fine.parity_sectors()?;
    let even_values = below(&even, window.1, exec);
    let odd_values = below(&odd, window.1, exec);

    let refine = |t: &Tridiagonal, values: &[f64]| -> Result<Vec<f64>, SemiclassicalError> {
        values.iter().enumerate().map(|(k, &c)| Ok((4.0 * t.eigenvalue(k)? - c) / 3.0)).collect()
    };
    let even_values = refine(&even_fine, &even_values)?;
    let odd_values = refine(&odd_fine, &odd_values)?;
    let mut refined: Vec<(f64, Parity)> = even_values
        .iter()
        .map(|&e| (e, Parity::Even))
        .chain(odd_values.iter().map(|&e| (e, Parity::Odd)))
        .collect();
    refined.sort_by(|a, b| a.0.total_cmp(&b.0));
    let parity_alternates = refined
        .iter()
        .enumerate()
        .all(|(i, &(_, p))| p == if i % 2 == 0 { Parity::Even } else { Parity::Odd });
    let inside = |e: f64| window.0 < e && e < window.1;
    let window_eigenvalues: Vec<f64> = refined.iter().map(|r| r.0).filter(|&e| inside(e)).collect();

    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for k in 0..even_values.len().max(odd_values.len()) {
        let (Some(&e), Some(&o)) = (even_values.get(k), odd_values.get(k)) else {
            excluded.push(format!("pair {k}: one member above {}", window.1));
            continue;
        };
        let (lower, upper, lower_parity) = if e <= o { (e, o, Parity::Even) } else { (o, e, Parity::Odd) };
        let in_window = inside(lower) && inside(upper);
        if inside(lower) != inside(upper) {
            excluded.push(format!("pair {k}: ({lower}, {upper}) straddles the window edge"));
        }
        let mean = 0.5 * (lower + upper);
        let splitting = upper - lower;
        let omega = match decompose(model, mean, domain, ScanOptions::default()) {
            Ok(d) if d.barriers.len() == 1 => Some(barrier_action(model, &d.barriers[0], mean)?),
            _ => None,
        };
        pairs.push(SplitPair {
            k,
            lower,
            upper,
            lower_parity,
            mean,
            splitting,
            omega,
            exponent: -hbar * splitting.ln(),
            in_window,
        });
    }

    let landscape = Landscape::new(model.clone(), domain);
    let predicted = predict_spectrum(&landscape, hbar, window, DEFAULT_RADIUS_CONSTANT, exec)?;
    let intervals = match_spectrum(&predicted, &window_eigenvalues).intervals;
    Ok(SplittingReport {
        hbar,
        window,
        nodes: grid.n,
        pairs,
        excluded,
        parity_alternates,
        window_eigenvalues,
        intervals,
    })
}

/// Least-squares slope of `ln s` against `1/h` at a fixed reference energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub reference_energy: f64,
    pub omega: f64,
    /// `(1/h, ln s)` with `s` interpolated to the reference energy.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    /// `|slope + omega| / omega`.
    pub relative_error: f64,
}

/// Fits the decay rate of the splitting. The reference energy is the mean of
/// the lowest in-window pair at the largest `h`; at every `h` the log
/// splitting is interpolated linearly in energy between the pairs around it.
pub fn fit_splitting_exponent(
    model: &PotentialModel,
    domain: (f64, f64),
    reports: &[SplittingReport],
) -> Result<ExponentFit, SemiclassicalError> {
    let coarsest = reports
        .iter()
        .max_by(|a, b| a.hbar.total_cmp(&b.hbar))
        .ok_or(SemiclassicalError::TooFewPoints(0))?;
    let reference = coarsest.in_window().next().ok_or(SemiclassicalError::TooFewPoints(0))?.mean;
    let mut points = Vec::new();
    for r in reports {
        let usable: Vec<&SplitPair> = r.pairs.iter().filter(|p| p.splitting > 0.0).collect();
        if usable.len() < 2 {
            continue;
        }
        let j = usable.partition_point(|p| p.mean < reference).clamp(1, usable.len() - 1);
        let (a, b) = (usable[j - 1], usable[j]);
        let t = (reference - a.mean) / (b.mean - a.mean);
        let ln_s = a.splitting.ln() + t * (b.splitting.ln() - a.splitting.ln());
        points.push((1.0 / r.hbar, ln_s));
    }
    if points.len() < 2 {
        return Err(SemiclassicalError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let d = decompose(model, reference, domain, ScanOptions::default())?;
    let barrier = d.barriers.first().ok_or(SemiclassicalError::WellCount { expected: 2, found: d.wells.len() })?;
    let omega = barrier_action(model, barrier, reference)?;
    Ok(ExponentFit { reference_energy: reference, omega, points, slope, relative_error: (slope + omega).abs() / omega })
}

/// Phase ratios of the two wells and the barrier coefficients of the
/// two-well quantisation condition `(γ1 + ω1)(γ2 + ω2) = ω0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaReport {
    pub energy: f64,
    pub hbar: f64,
    pub omega: f64,
    pub gamma: (f64, f64),
    pub omega1: f64,
    pub omega2: f64,
    /// `ω1 ω2 - {u1, u2} / {w1, w2}`.
    pub omega0: f64,
    /// `(γ1 + ω1)(γ2 + ω2) - ω0`.
    pub residual: f64,
}

fn ratio(num: Scaled, den: Scaled) -> Result<f64, SemiclassicalError> {
    if den.mantissa == 0.0 || den.ln_abs() < -690.0 {
        return Err(SemiclassicalError::Indeterminate { x: f64::NAN });
    }
    Ok(num.ratio(&den))
}

/// `γ1 = -{u_-, u1}/{u_-, w1}` at the action midpoint of the left well,
/// `γ2 = -{u_+, u2}/{u_+, w2}` at that of the right well, and the barrier
/// coefficients at the barrier midpoint. Needs exactly two wells.
pub fn gamma_ratios(
    model: &PotentialModel,
    energy: f64,
    hbar: f64,
    domain: (f64, f64),
) -> Result<GammaReport, SemiclassicalError> {
    let d = decompose(model, energy, domain, ScanOptions::default())?;
    if d.wells.len() != 2 || d.points.len() != 4 {
        return Err(SemiclassicalError::WellCount { expected: 2, found: d.wells.len() });
    }
    let solve = |index: usize, kind: Kind| -> Result<_, SemiclassicalError> {
        let frame = LangerFrame::around(model, &d, index)?;
        Ok(integrate_canonical(kind, &frame, hbar)?)
    };
    let u_minus = solve(0, Kind::Recessive)?;
    let u1 = solve(1, Kind::Recessive)?;
    let w1 = solve(1, Kind::Dominant)?;
    let u2 = solve(2, Kind::Recessive)?;
    let w2 = solve(2, Kind::Dominant)?;
    let u_plus = solve(3, Kind::Recessive)?;

    let x1 = action_midpoint(model, &d.wells[0], energy)?;
    let x2 = action_midpoint(model, &d.wells[1], energy)?;
    let gamma1 = -ratio(wronskian(&u_minus, &u1, x1)?, wronskian(&u_minus, &w1, x1)?)?;
    let gamma2 = -ratio(wronskian(&u_plus, &u2, x2)?, wronskian(&u_plus, &w2, x2)?)?;

    let xb = d.barriers[0].midpoint();
    let ww = wronskian(&w1, &w2, xb)?;
    let omega1 = ratio(wronskian(&u1, &w2, xb)?, ww)?;
    let omega2 = ratio(wronskian(&w1, &u2, xb)?, ww)?;
    let omega0 = omega1 * omega2 - ratio(wronskian(&u1, &u2, xb)?, ww)?;
    Ok(GammaReport {
        energy,
        hbar,
        omega: barrier_action(model, &d.barriers[0], energy)?,
        gamma: (gamma1, gamma2),
        omega1,
        omega2,
        omega0,
        residual: (gamma1 + omega1) * (gamma2 + omega2) - omega0,
    })
}

/// Eigenvalue in `bracket` by shooting: solutions decaying towards both
/// window edges are matched at `x_match`, bisecting on the sign of their
/// Wronskian. The bracket must hold exactly one eigenvalue.
pub fn refine_eigenvalue(
    model: &PotentialModel,
    hbar: f64,
    domain: (f64, f64),
    x_match: f64,
    bracket: (f64, f64),
) -> Result<f64, SemiclassicalError> {
    let mismatch = |e: f64| -> Result<f64, SemiclassicalError> {
        let eq = Equation { model, energy: e, hbar };
        let edge = |x: f64, toward: f64| -> Result<Sample, SemiclassicalError> {
            let gap = (model.value(x) - e).max(0.0).sqrt();
            let start = Sample { x, y: vec![1.0, toward * gap], log_scale: 0.0 };
            Ok(integrate(&eq, &start, &[x_match], IvpOptions::default())?.remove(0))
        };
        let left = edge(domain.0, 1.0)?;
        let right = edge(domain.1, -1.0)?;
        let (l, r) = (&left.y, &right.y);
        // normalised so that the sign and size do not depend on the log scales
        Ok((l[1] * r[0] - l[0] * r[1]) / (l[0].hypot(l[1]) * r[0].hypot(r[1])))
    };
    let (mut lo, mut hi) = bracket;
    let (mut f_lo, f_hi) = (mismatch(lo)?, mismatch(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(SemiclassicalError::NoSignChange { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = mismatch(mid)?;
        if f == 0.0 {
            return Ok(mid);
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well() -> PotentialModel {
        PotentialModel::parse("(x^2-1)^2").unwrap()
    }

    #[test]
    fn pairs_are_split_by_an_exponentially_small_gap() {
        let m = double_well();
        let r = double_well_analysis(&m, 0.06, (0.2, 0.8), (-2.2, 2.2), Exec::default()).unwrap();
        assert!(r.parity_alternates);
        let pairs: Vec<&SplitPair> = r.in_window().collect();
        assert!(!pairs.is_empty());
        for p in pairs {
            assert_eq!(p.lower_parity, Parity::Even);
            let omega = p.omega.unwrap();
            assert!(p.splitting > 0.0 && p.splitting < (-0.5 * omega / 0.06).exp());
        }
        assert!(r.intervals.iter().all(|g| g.merged() && g.count == 2));
    }

    #[test]
    fn asymmetric_potential_is_rejected() {
        let m = PotentialModel::parse("(x^2-1)^2 + 0.1*x").unwrap();
        assert!(matches!(
            double_well_analysis(&m, 0.06, (0.2, 0.8), (-2.2, 2.2), Exec::Sequential),
            Err(SemiclassicalError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn shooting_agrees_with_the_oracle() {
        let m = double_well();
        let hbar = 0.1;
        let r = double_well_analysis(&m, hbar, (0.2, 0.8), (-2.2, 2.2), Exec::default()).unwrap();
        let p = r.in_window().next().unwrap();
        let half = 0.25 * p.splitting;
        let lower = refine_eigenvalue(&m, hbar, (-2.2, 2.2), 0.3, (p.lower - half, p.lower + half)).unwrap();
        assert!((lower - p.lower).abs() < 1e-8, "{lower} {}", p.lower);
    }

    #[test]
    fn gamma_condition_holds_at_an_eigenvalue() {
        let m = double_well();
        let hbar = 0.1;
        let r = double_well_analysis(&m, hbar, (0.2, 0.8), (-2.2, 2.2), Exec::default()).unwrap();
        let p = r.in_window().next().unwrap();
        let half = 0.25 * p.splitting;
        let e = refine_eigenvalue(&m, hbar, (-2.2, 2.2), 0.3, (p.lower - half, p.lower + half)).unwrap();
        let g = gamma_ratios(&m, e, hbar, (-2.2, 2.2)).unwrap();
        assert!(g.omega0 > 0.0 && g.omega0 < 1.0);
        assert!((g.gamma.0 - g.gamma.1).abs() <= hbar * g.gamma.0.abs().max(g.omega0.sqrt()));
        assert!(g.omega1.abs() <= (-1.5 * g.omega / hbar).exp());
        assert!(g.omega2.abs() <= (-1.5 * g.omega / hbar).exp());
        assert!(g.residual.abs() <= 5.0 * hbar * g.omega0, "{g:?}");
    }
}
