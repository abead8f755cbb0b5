use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SemiclassicalError;
use crate::actions::Landscape;
use crate::par::Exec;
use crate::potential::PotentialModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylCheck {
    pub window: (f64, f64),
    /// `Φ_ℓ(Λ2) - Φ_ℓ(Λ1)` per well.
    pub action_increments: Vec<f64>,
    /// `Σ ΔΦ_ℓ / (π h)`.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub pass: bool,
}

/// Eigenvalue count in the window against `Σ ΔΦ_ℓ/(π h) ± L` for `L` wells.
pub fn weyl_bounds(
    landscape: &Landscape,
    hbar: f64,
    window: (f64, f64),
    count: usize,
) -> Result<WeylCheck, SemiclassicalError> {
    let low = landscape.profile(window.0)?;
    let high = landscape.profile(window.1)?;
    let wells = low.well_actions.len();
    if high.well_actions.len() != wells {
        return Err(SemiclassicalError::TopologyChange {
            lo: window.0,
            hi: window.1,
            lower: wells,
            upper: high.well_actions.len(),
        });
    }
    let action_increments: Vec<f64> =
        high.well_actions.iter().zip(&low.well_actions).map(|(b, a)| b - a).collect();
    let estimate = action_increments.iter().sum::<f64>() / (PI * hbar);
    let slack = wells as f64;
    let (lower, upper) = (estimate - slack, estimate + slack);
    let n = count as f64;
    Ok(WeylCheck { window, action_increments, estimate, lower, upper, count, pass: lower <= n && n <= upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

const CHUNK: usize = 1 << 14;

/// Monte-Carlo estimate of `½ |{(x, p) : Λ1 < p^2 + v(x) < Λ2}|` over the
/// domain. Each chunk has its own ChaCha stream, so the result does not
/// depend on the thread count.
#[must_use]
pub fn phase_space_measure(
    model: &PotentialModel,
    domain: (f64, f64),
    window: (f64, f64),
    samples: usize,
    seed: u64,
    exec: Exec,
) -> MonteCarloEstimate {
    let (a, b) = domain;
    let v_min = (0..=4096)
        .map(|i| model.value(a + (b - a) * i as f64 / 4096.0))
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let p_max = 1.01 * (window.1 - v_min).max(0.0).sqrt();
    let area = (b - a) * 2.0 * p_max;
    let chunks = samples.div_ceil(CHUNK).max(1);
    let hits: u64 = exec
        .map_range(chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut hits = 0u64;
            for _ in 0..CHUNK {
                let x = rng.gen_range(a..b);
                let p = rng.gen_range(-p_max..p_max);
                let e = p * p + model.value(x);
                if window.0 < e && e < window.1 {
                    hits += 1;
                }
            }
            hits
        })
        .into_iter()
        .sum();
    let total = chunks * CHUNK;
    let f = hits as f64 / total as f64;
    MonteCarloEstimate {
        value: 0.5 * area * f,
        std_error: 0.5 * area * (f * (1.0 - f) / total as f64).sqrt(),
        samples: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_count_sits_inside_the_bounds() {
        let l = Landscape::new(PotentialModel::parse("x^2").unwrap(), (-4.0, 4.0));
        // exact eigenvalues h(2n+1): 5 in (0.05, 1.05) at h = 0.1
        let w = weyl_bounds(&l, 0.1, (0.05, 1.05), 5).unwrap();
        assert!((w.estimate - 5.0).abs() < 1e-9);
        assert!(w.pass);
        assert!(!weyl_bounds(&l, 0.1, (0.05, 1.05), 7).unwrap().pass);
    }

    #[test]
    fn monte_carlo_matches_action_increments() {
        let model = PotentialModel::parse("(x^2-1)^2").unwrap();
        let window = (0.2, 0.8);
        let l = Landscape::new(model.clone(), (-2.0, 2.0));
        let w = weyl_bounds(&l, 0.1, window, 0).unwrap();
        let exact: f64 = w.action_increments.iter().sum();
        let mc = phase_space_measure(&model, (-2.0, 2.0), window, 1 << 20, 7, Exec::default());
        assert!((mc.value / exact - 1.0).abs() < 0.01, "{} vs {exact}", mc.value);
        assert!(mc.std_error < 0.003 * exact);
    }

    #[test]
    fn monte_carlo_is_schedule_independent() {
        let model = PotentialModel::parse("x^2").unwrap();
        let a = phase_space_measure(&model, (-2.0, 2.0), (0.0, 1.0), 1 << 16, 3, Exec::Sequential);
        let b = phase_space_measure(&model, (-2.0, 2.0), (0.0, 1.0), 1 << 16, 3, Exec::Parallel);
        assert_eq!(a, b);
    }
}
