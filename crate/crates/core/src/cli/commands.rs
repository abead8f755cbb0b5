use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use super::report::{num, opt, Table};
use super::CliError;
use crate::actions::{action_midpoint, Landscape};
use crate::geometry::{decompose, ScanOptions};
use crate::oracle::{richardson, Operator, Refined};
use crate::par::Exec;
use crate::potential::PotentialModel;
use crate::semiclassics::{
    double_well_analysis, fit_splitting_exponent, match_spectrum, measure_phases, phase_space_measure,
    predict_spectrum, weyl_bounds, MatchReport, PhaseReport, PredictedSpectrum, Side, SplittingReport, WeylCheck,
};
use crate::tunneling::{compute_rt, TunnelingReport};

/// Result of one subcommand before it is written out.
pub struct Output {
    pub table: Table,
    pub results: Value,
    /// `true` when every self-check passed.
    pub check: bool,
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn to_json(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialise")
}

fn per_hbar<R: Send>(
    config: &RunConfig,
    exec: Exec,
    f: impl Fn(f64) -> Result<R, CliError> + Sync + Send,
) -> Result<Vec<R>, CliError> {
    exec.map(&config.hbar, |&h| f(h)).into_iter().collect()
}

#[derive(Serialize)]
struct RefinedValue {
    index: usize,
    value: f64,
    coarse: f64,
    fine: f64,
    error_estimate: f64,
}

impl From<&Refined> for RefinedValue {
    fn from(r: &Refined) -> Self {
        Self { index: r.index, value: r.value, coarse: r.coarse, fine: r.fine, error_estimate: r.error_estimate }
    }
}

#[derive(Serialize)]
struct SpectrumResult {
    hbar: f64,
    nodes: usize,
    predicted: PredictedSpectrum,
    eigenvalues: Vec<RefinedValue>,
    matching: MatchReport,
}

pub fn spectrum(config: &RunConfig, model: &PotentialModel, exec: Exec) -> Result<Output, CliError> {
    let landscape = Landscape::new(model.clone(), config.domain);
    let results = per_hbar(config, exec, |hbar| {
        let grid = config.grid(hbar);
        let predicted =
            predict_spectrum(&landscape, hbar, config.window, config.tolerances.radius, exec).map_err(numerical)?;
        let refined = richardson(model, grid, hbar, config.window, exec).map_err(numerical)?;
        let values: Vec<f64> = refined.iter().map(|r| r.value).collect();
        let matching = match_spectrum(&predicted, &values);
        Ok(SpectrumResult {
            hbar,
            nodes: grid.n,
            predicted,
            eigenvalues: refined.iter().map(RefinedValue::from).collect(),
            matching,
        })
    })?;

    let mut table =
        Table::new(&["hbar", "well", "n", "lambda_pred", "lambda_num", "distance", "interval_count", "matched"]);
    let mut check = true;
    for r in &results {
        let m = &r.matching;
        check &= m.all_matched() && m.intervals.iter().all(|g| g.count <= g.capacity);
        for mt in &m.matches {
            let pred = mt.nearest.and_then(|(w, n)| r.predicted.levels.iter().find(|l| l.well == w && l.n == n));
            table.push(vec![
                num(r.hbar),
                mt.nearest.map(|p| p.0.to_string()).unwrap_or_default(),
                mt.nearest.map(|p| p.1.to_string()).unwrap_or_default(),
                opt(pred.map(|l| l.energy)),
                num(mt.eigenvalue),
                num(mt.distance),
                mt.interval.map(|g| m.intervals[g].count.to_string()).unwrap_or_else(|| "0".into()),
                mt.interval.is_some().to_string(),
            ]);
        }
        for &g in &m.empty {
            let group = &m.intervals[g];
            for (&(well, n), &e) in group.members.iter().zip(&group.energies) {
                table.push(vec![
                    num(r.hbar),
                    well.to_string(),
                    n.to_string(),
                    num(e),
                    String::new(),
                    String::new(),
                    "0".into(),
                    "false".into(),
                ]);
            }
        }
    }
    Ok(Output { table, results: to_json(&results), check })
}

#[derive(Serialize)]
struct EigenPhases {
    index: usize,
    value: f64,
    wells: usize,
    edges_fixed: usize,
    barrier_pass: Vec<bool>,
    report: PhaseReport,
}

#[derive(Serialize)]
struct PhasesResult {
    hbar: f64,
    nodes: usize,
    eigenfunctions: Vec<EigenPhases>,
}

pub fn phases(config: &RunConfig, model: &PotentialModel, exec: Exec) -> Result<Output, CliError> {
    let c_f = config.tolerances.fixing;
    let results = per_hbar(config, exec, |hbar| {
        let grid = config.grid(hbar);
        let op = Operator::assemble(model, grid, hbar).map_err(numerical)?;
        let values = op.eigenvalues_in(config.window, exec);
        let pairs = op.eigenpairs(&values, exec);
        let eigenfunctions = pairs
            .iter()
            .map(|ep| {
                let d = decompose(model, ep.value, config.domain, ScanOptions::default()).map_err(numerical)?;
                let report = measure_phases(model, &d, hbar, &grid, &ep.vector).map_err(numerical)?;
                let barrier_pass = (0..d.barriers.len())
                    .filter_map(|j| report.barrier_fixing(j, c_f))
                    .map(|v| v.pass)
                    .collect();
                Ok(EigenPhases {
                    index: ep.index,
                    value: ep.value,
                    wells: d.wells.len(),
                    edges_fixed: report.edges_fixed(c_f),
                    barrier_pass,
                    report,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(PhasesResult { hbar, nodes: grid.n, eigenfunctions })
    })?;

    let mut table = Table::new(&[
        "hbar",
        "index",
        "lambda",
        "well",
        "side",
        "x",
        "amplitude",
        "theta",
        "delta",
        "determinate",
        "near_turning_point",
        "barrier_fixing",
        "edges_fixed",
    ]);
    let mut check = true;
    for r in &results {
        for e in &r.eigenfunctions {
            check &= e.barrier_pass.iter().all(|&p| p) && e.edges_fixed > e.wells;
            for m in &e.report.measurements {
                // the barrier this edge faces, if any
                let facing = match m.side {
                    Side::Left => m.well.checked_sub(1),
                    Side::Right => Some(m.well).filter(|&j| j + 1 < e.wells),
                };
                table.push(vec![
                    num(r.hbar),
                    e.index.to_string(),
                    num(e.value),
                    m.well.to_string(),
                    format!("{:?}", m.side).to_lowercase(),
                    num(m.x),
                    num(m.amplitude),
                    num(m.theta),
                    num(m.delta),
                    m.determinate.to_string(),
                    m.near_turning_point.to_string(),
                    facing.and_then(|j| e.barrier_pass.get(j)).map(ToString::to_string).unwrap_or_default(),
                    e.edges_fixed.to_string(),
                ]);
            }
        }
    }
    Ok(Output { table, results: to_json(&results), check })
}

#[derive(Serialize)]
struct WeylResult {
    hbar: f64,
    nodes: usize,
    bounds: WeylCheck,
}

pub fn weyl(config: &RunConfig, model: &PotentialModel, exec: Exec) -> Result<Output, CliError> {
    let landscape = Landscape::new(model.clone(), config.domain);
    let results = per_hbar(config, exec, |hbar| {
        let grid = config.grid(hbar);
        let op = Operator::assemble(model, grid, hbar).map_err(numerical)?;
        let count = op.count_below(config.window.1) - op.count_below(config.window.0);
        let bounds = weyl_bounds(&landscape, hbar, config.window, count).map_err(numerical)?;
        Ok(WeylResult { hbar, nodes: grid.n, bounds })
    })?;
    let mc = phase_space_measure(model, config.domain, config.window, config.weyl.samples, config.weyl.seed, exec);
    let action_sum: f64 = results[0].bounds.action_increments.iter().sum();
    let mc_relative = (mc.value - action_sum).abs() / action_sum.abs().max(f64::MIN_POSITIVE);

    let mut table = Table::new(&["hbar", "count", "estimate", "lower", "upper", "pass"]);
    table.note("action_sum", num(action_sum));
    table.note("phase_space_half_measure", format!("{} ± {}", num(mc.value), num(mc.std_error)));
    table.note("phase_space_relative_difference", num(mc_relative));
    let mut check = mc_relative <= 0.01;
    for r in &results {
        let b = &r.bounds;
        check &= b.pass;
        table.push(vec![
            num(r.hbar),
            b.count.to_string(),
            num(b.estimate),
            num(b.lower),
            num(b.upper),
            b.pass.to_string(),
        ]);
    }
    let json = serde_json::json!({
        "per_hbar": to_json(&results),
        "phase_space": to_json(&mc),
        "action_sum": action_sum,
        "relative_difference": mc_relative,
    });
    Ok(Output { table, results: json, check })
}

pub fn tunnel(config: &RunConfig, model: &PotentialModel, exec: Exec) -> Result<Output, CliError> {
    let opts = config.tunnel.ok_or_else(|| CliError::Config("tunnel: section required for this command".into()))?;
    let anchors = match opts.anchors {
        Some(a) => a,
        None => {
            let d = decompose(model, opts.energy, config.domain, ScanOptions::default()).map_err(numerical)?;
            if d.wells.len() < 2 {
                return Err(CliError::Config(format!(
                    "tunnel.anchors: no pair of wells at energy {} to place default anchors",
                    opts.energy
                )));
            }
            (
                action_midpoint(model, &d.wells[0], opts.energy).map_err(numerical)?,
                action_midpoint(model, &d.wells[1], opts.energy).map_err(numerical)?,
            )
        }
    };
    let mut results: Vec<TunnelingReport> =
        per_hbar(config, exec, |hbar| compute_rt(model, opts.energy, hbar, anchors).map_err(numerical))?;
    results.sort_by(|a, b| b.hbar.total_cmp(&a.hbar));

    let mut table = Table::new(&[
        "hbar",
        "energy",
        "anchor_left",
        "anchor_right",
        "omega",
        "abs_r",
        "abs_t",
        "ln_abs_t",
        "flux_defect",
        "wronskian_drift",
    ]);
    let mut check = results.windows(2).all(|w| w[1].ln_abs_transmission < w[0].ln_abs_transmission);
    for r in &results {
        check &= r.flux_defect.abs() <= 1e-6;
        table.push(vec![
            num(r.hbar),
            num(r.energy),
            num(r.anchors.0),
            num(r.anchors.1),
            num(r.omega),
            num(r.reflection.norm()),
            num(r.transmission.norm()),
            num(r.ln_abs_transmission),
            num(r.flux_defect),
            num(r.wronskian_drift),
        ]);
    }
    Ok(Output { table, results: to_json(&results), check })
}

pub fn splitting(config: &RunConfig, model: &PotentialModel, exec: Exec) -> Result<Output, CliError> {
    let reports: Vec<SplittingReport> = per_hbar(config, exec, |hbar| {
        double_well_analysis(model, hbar, config.window, config.domain, exec).map_err(|e| match e {
            crate::semiclassics::SemiclassicalError::NotSymmetric { .. } => CliError::Config(format!("potential: {e}")),
            other => numerical(other),
        })
    })?;
    let fit = if reports.len() >= 2 { fit_splitting_exponent(model, config.domain, &reports).ok() } else { None };

    let mut table = Table::new(&[
        "hbar",
        "k",
        "lower",
        "upper",
        "lower_parity",
        "mean",
        "splitting",
        "omega",
        "exponent",
        "in_window",
    ]);
    if let Some(f) = &fit {
        table.note("reference_energy", num(f.reference_energy));
        table.note("omega", num(f.omega));
        table.note("slope", num(f.slope));
        table.note("relative_error", num(f.relative_error));
    }
    let mut check = fit.as_ref().map_or(true, |f| f.relative_error <= 0.1);
    for r in &reports {
        check &= r.parity_alternates && r.intervals.iter().filter(|g| g.merged()).all(|g| g.count == 2);
        for p in &r.pairs {
            table.push(vec![
                num(r.hbar),
                p.k.to_string(),
                num(p.lower),
                num(p.upper),
                format!("{:?}", p.lower_parity).to_lowercase(),
                num(p.mean),
                num(p.splitting),
                opt(p.omega),
                num(p.exponent),
                p.in_window.to_string(),
            ]);
        }
    }
    let json = serde_json::json!({ "per_hbar": to_json(&reports), "fit": to_json(&fit) });
    Ok(Output { table, results: json, check })
}
