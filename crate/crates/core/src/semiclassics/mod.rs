//! Semiclassical predictions checked against the finite-difference oracle:
//! quantised levels per well, phases and amplitudes of eigenfunctions,
//! fixing conditions at barriers, localisation, Weyl bounds and the
//! splitting of symmetric double-well levels.

use thiserror::Error;

use crate::actions::ActionError;
use crate::geometry::GeometryError;
use crate::ivp::IvpError;
use crate::langer::LangerError;
use crate::oracle::OracleError;

mod phases;
mod spectrum;
mod splitting;
mod weyl;

pub use phases::{
    barrier_decay_check, extract_phase, localization_ratio, measure_phases, check_fixing, DecayProfile,
    DecaySample, FixingVerdict, Localization, PhaseMeasurement, PhaseReport, Side,
};
pub use spectrum::{match_spectrum, predict_spectrum, IntervalCount, Match, MatchReport, PredictedLevel, PredictedSpectrum};
pub use splitting::{
    double_well_analysis, fit_splitting_exponent, gamma_ratios, refine_eigenvalue, ExponentFit, GammaReport, Parity,
    SplitPair, SplittingReport,
};
pub use weyl::{phase_space_measure, weyl_bounds, MonteCarloEstimate, WeylCheck};

/// Default interval radius constant: intervals are `λ ± C_r h^2`.
pub const DEFAULT_RADIUS_CONSTANT: f64 = 5.0;
/// Default fixing tolerance constant: a phase passes when within `C_f h` of π/4.
pub const DEFAULT_FIXING_CONSTANT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiclassicalError {
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Langer(#[from] LangerError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error("well count changes inside the window: {lower} at {lo}, {upper} at {hi}")]
    TopologyChange { lo: f64, hi: f64, lower: usize, upper: usize },
    #[error("sample point x = {x} is outside the well [{left}, {right}]")]
    OutsideWell { x: f64, left: f64, right: f64 },
    #[error("potential is not symmetric: v({x}) and v(-{x}) differ by {diff:e}")]
    NotSymmetric { x: f64, diff: f64 },
    #[error("expected {expected} wells, found {found}")]
    WellCount { expected: usize, found: usize },
    #[error("barrier has no grid nodes at least {margin} from its edges")]
    NoBarrierInterior { margin: f64 },
    #[error("amplitude is indeterminate at x = {x}")]
    Indeterminate { x: f64 },
    #[error("no sign change of the matching Wronskian in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("need at least two points for a fit, got {0}")]
    TooFewPoints(usize),
}
