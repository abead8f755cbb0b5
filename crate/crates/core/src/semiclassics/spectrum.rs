use std::f64::consts::PI;

use serde::Serialize;

use super::SemiclassicalError;
use crate::actions::Landscape;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedLevel {
    /// 0-based well index, left to right.
    pub well: usize,
    pub n: u32,
    pub energy: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedSpectrum {
    pub hbar: f64,
    pub window: (f64, f64),
    /// Sorted by energy.
    pub levels: Vec<PredictedLevel>,
    /// `(Φ(Λ1), Φ(Λ2))` per well.
    pub action_range: Vec<(f64, f64)>,
}

/// Solutions of `Φ_ℓ(λ) = π(n + ½) h` in the window for every well, each with
/// an interval of radius `c_r h^2`.
pub fn predict_spectrum(
    landscape: &Landscape,
    hbar: f64,
    window: (f64, f64),
    c_r: f64,
    exec: Exec,
) -> Result<PredictedSpectrum, SemiclassicalError> {
    let (lo, hi) = window;
    let low = landscape.profile(lo)?;
    let high = landscape.profile(hi)?;
    if low.well_actions.len() != high.well_actions.len() {
        return Err(SemiclassicalError::TopologyChange {
            lo,
            hi,
            lower: low.well_actions.len(),
            upper: high.well_actions.len(),
        });
    }
    let action_range: Vec<(f64, f64)> =
        low.well_actions.iter().copied().zip(high.well_actions.iter().copied()).collect();
    let mut targets = Vec::new();
    for (well, &(a, b)) in action_range.iter().enumerate() {
        let first = (a / (PI * hbar) - 0.5).floor() as i64 + 1;
        let mut n = first.max(0);
        loop {
            let mu = PI * (n as f64 + 0.5) * hbar;
            if mu >= b {
                break;
            }
            if mu > a {
                targets.push((well, n as u32, mu));
            }
            n += 1;
        }
    }
    let radius = c_r * hbar * hbar;
    let mut levels = exec
        .map(&targets, |&(well, n, mu)| {
            landscape
                .invert_well_action(well, mu, window)
                .map(|energy| PredictedLevel { well, n, energy, radius })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    levels.sort_by(|p, q| p.energy.total_cmp(&q.energy).then(p.well.cmp(&q.well)));
    Ok(PredictedSpectrum { hbar, window, levels, action_range })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub eigenvalue: f64,
    /// Nearest predicted level as `(well, n)`.
    pub nearest: Option<(usize, u32)>,
    pub distance: f64,
    /// Index into [`MatchReport::intervals`] when assigned.
    pub interval: Option<usize>,
}

/// Predicted levels whose intervals merge (levels of different wells closer
/// than `h^2`), with the number of eigenvalues they contain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalCount {
    pub members: Vec<(usize, u32)>,
    pub energies: Vec<f64>,
    pub radius: f64,
    /// Eigenvalues within `radius` of some member.
    pub count: usize,
    pub capacity: usize,
}

impl IntervalCount {
    #[must_use]
    pub fn merged(&self) -> bool {
        self.members.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub matches: Vec<Match>,
    pub intervals: Vec<IntervalCount>,
    /// Eigenvalues not assigned to any interval.
    pub unmatched: Vec<f64>,
    /// Intervals that received no eigenvalue.
    pub empty: Vec<usize>,
}

impl MatchReport {
    #[must_use]
    pub fn all_matched(&self) -> bool {
        self.unmatched.is_empty()
    }

    #[must_use]
    pub fn max_distance(&self) -> f64 {
        self.matches.iter().map(|m| m.distance).fold(0.0, f64::max)
    }
}

/// Greedy nearest-first assignment of eigenvalues to predicted intervals,
/// capacity one per level (merged intervals hold one per member).
#[must_use]
pub fn match_spectrum(predicted: &PredictedSpectrum, eigenvalues: &[f64]) -> MatchReport {
    let merge_tol = predicted.hbar * predicted.hbar;
    let mut intervals: Vec<IntervalCount> = Vec::new();
    for level in &predicted.levels {
        let joins = intervals.last().is_some_and(|g: &IntervalCount| {
            let last = *g.energies.last().expect("groups are never empty");
            level.energy - last <= merge_tol && !g.members.iter().any(|m| m.0 == level.well)
        });
        if joins {
            let g = intervals.last_mut().expect("checked above");
            g.members.push((level.well, level.n));
            g.energies.push(level.energy);
            g.capacity += 1;
        } else {
            intervals.push(IntervalCount {
                members: vec![(level.well, level.n)],
                energies: vec![level.energy],
                radius: level.radius,
                count: 0,
                capacity: 1,
            });
        }
    }
    let distance_to = |g: &IntervalCount, e: f64| g.energies.iter().map(|c| (e - c).abs()).fold(f64::INFINITY, f64::min);
    for g in &mut intervals {
        g.count = eigenvalues.iter().filter(|&&e| distance_to(g, e) <= g.radius).count();
    }

    let mut matches: Vec<Match> = eigenvalues
        .iter()
        .map(|&e| {
            let nearest = predicted
                .levels
                .iter()
                .min_by(|p, q| (p.energy - e).abs().total_cmp(&(q.energy - e).abs()));
            Match {
                eigenvalue: e,
                nearest: nearest.map(|p| (p.well, p.n)),
                distance: nearest.map_or(f64::INFINITY, |p| (p.energy - e).abs()),
                interval: None,
            }
        })
        .collect();

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &e) in eigenvalues.iter().enumerate() {
        for (g, group) in intervals.iter().enumerate() {
            let d = distance_to(group, e);
            if d <= group.radius {
                candidates.push((d, i, g));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut used = vec![0usize; intervals.len()];
    for (_, i, g) in candidates {
        if matches[i].interval.is_none() && used[g] < intervals[g].capacity {
            matches[i].interval = Some(g);
            used[g] += 1;
        }
    }
    let unmatched = matches.iter().filter(|m| m.interval.is_none()).map(|m| m.eigenvalue).collect();
    let empty = (0..intervals.len()).filter(|&g| used[g] == 0).collect();
    MatchReport { matches, intervals, unmatched, empty }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialModel;

    fn landscape(src: &str, domain: (f64, f64)) -> Landscape {
        Landscape::new(PotentialModel::parse(src).unwrap(), domain)
    }

    #[test]
    fn harmonic_levels_are_odd_multiples_of_h() {
        let l = landscape("x^2", (-4.0, 4.0));
        let p = predict_spectrum(&l, 0.1, (0.05, 1.05), 5.0, Exec::Sequential).unwrap();
        assert_eq!(p.levels.len(), 5);
        for (k, level) in p.levels.iter().enumerate() {
            assert_eq!(level.n as usize, k);
            assert!((level.energy - 0.1 * (2 * k + 1) as f64).abs() < 1e-11);
        }
        let exact: Vec<f64> = (0..5).map(|k| 0.1 * (2 * k + 1) as f64 + 1e-4).collect();
        let m = match_spectrum(&p, &exact);
        assert!(m.all_matched() && m.empty.is_empty());
    }

    #[test]
    fn symmetric_wells_predict_the_same_levels() {
        let l = landscape("(x^2-1)^2", (-2.0, 2.0));
        let p = predict_spectrum(&l, 0.05, (0.2, 0.8), 5.0, Exec::Sequential).unwrap();
        let left: Vec<f64> = p.levels.iter().filter(|l| l.well == 0).map(|l| l.energy).collect();
        let right: Vec<f64> = p.levels.iter().filter(|l| l.well == 1).map(|l| l.energy).collect();
        assert_eq!(left.len(), right.len());
        for (a, b) in left.iter().zip(&right) {
            assert!((a - b).abs() < 1e-10);
        }
        // pairs of eigenvalues straddling each merged level fill both slots
        let eig: Vec<f64> = left.iter().flat_map(|&e| [e - 1e-6, e + 1e-6]).collect();
        let m = match_spectrum(&p, &eig);
        assert!(m.intervals.iter().all(|g| g.merged() && g.count == 2));
        assert!(m.all_matched());
    }

    #[test]
    fn empty_window_gives_empty_report() {
        let l = landscape("x^2", (-4.0, 4.0));
        let p = predict_spectrum(&l, 0.1, (0.11, 0.12), 5.0, Exec::Sequential).unwrap();
        assert!(p.levels.is_empty());
        let m = match_spectrum(&p, &[]);
        assert!(m.matches.is_empty() && m.intervals.is_empty());
    }

    #[test]
    fn topology_change_is_an_error() {
        let l = landscape("(x^2-1)^2", (-2.0, 2.0));
        assert!(matches!(
            predict_spectrum(&l, 0.1, (0.5, 1.5), 5.0, Exec::Sequential),
            Err(SemiclassicalError::TopologyChange { .. })
        ));
    }
}
