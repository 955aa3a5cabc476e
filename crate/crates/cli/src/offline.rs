//! `offline`: water-filling schedules for a known pair of arrival traces.

use ehpc_core::model::{channel_rate, weighted_distortion_at_power, Node};
use ehpc_core::offline::{
    directional_bands, iterative_gbwf, offline_oracle, verify_structure, water_levels, GbwfOptions, IterationRecord,
    OracleMode, StructureReport, StructureTolerance, CAUSALITY_TOL,
};
use ehpc_core::Error;
use serde::Serialize;

use crate::config::{ExperimentConfig, OracleChoice};
use crate::error::CliError;
use crate::output::OutputDir;

/// Relative objective gap to the oracle above which the run is flagged.
pub const ORACLE_GAP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleRow {
    pub slot: usize,
    pub e1: f64,
    pub e2: f64,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
    pub d1: f64,
    pub d2: f64,
    pub weighted_d: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

/// One band of the node-1 single-user initialization, slots 1-based inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitBand {
    pub first_slot: usize,
    pub last_slot: usize,
    pub power: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub mode: OracleChoice,
    pub objective: f64,
    /// `(solver - oracle) / oracle`; negative when the solver is better.
    pub relative_gap: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OfflineReport {
    pub horizon: usize,
    pub objective: f64,
    pub iterations: usize,
    pub init_bands: Vec<InitBand>,
    pub history: Vec<IterationRecord>,
    pub schedule: Vec<ScheduleRow>,
    pub structure: StructureReport,
    pub oracle: Option<OracleComparison>,
    pub violations: Vec<String>,
}

pub fn run_offline(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<OfflineReport, CliError> {
    let (e1, e2) = cfg.energy_traces()?;
    let params = &cfg.params;
    let opts = GbwfOptions { eps: cfg.solver.gbwf_eps, max_iter: cfg.solver.gbwf_max_iter };
    let sol = match iterative_gbwf(&e1, &e2, params, opts) {
        Ok(s) => s,
        Err(err @ Error::OfflineNotConverged { .. }) => {
            out.write_json("offline_diagnostics.json", &err_body(&err))?;
            return Err(err.into());
        }
        Err(err) => return Err(err.into()),
    };

    let init_bands: Vec<InitBand> = directional_bands(&e1)
        .into_iter()
        .map(|b| InitBand { first_slot: b.start + 1, last_slot: b.end, power: b.power })
        .collect();
    let z1 = water_levels(Node::One, &sol.p1, &sol.p2, params);
    let z2 = water_levels(Node::Two, &sol.p2, &sol.p1, params);
    let mut schedule = Vec::with_capacity(e1.len());
    for s in 0..e1.len() {
        let (a, b) = (sol.p1.as_slice()[s], sol.p2.as_slice()[s]);
        let w = weighted_distortion_at_power(a, b, params);
        schedule.push(ScheduleRow {
            slot: s + 1,
            e1: e1.as_slice()[s],
            e2: e2.as_slice()[s],
            p1: a,
            p2: b,
            r1: channel_rate(a, params.h1())?,
            r2: channel_rate(b, params.h2())?,
            d1: w.point.d1,
            d2: w.point.d2,
            weighted_d: w.value,
            zeta1: z1[s],
            zeta2: z2[s],
        });
    }

    let structure = verify_structure(&sol.p1, &sol.p2, &e1, &e2, params, &StructureTolerance::default());
    let mut violations: Vec<String> = structure.violations.iter().map(|v| format!("{v:?}")).collect();
    if !sol.p1.is_causal(&e1, CAUSALITY_TOL) || !sol.p2.is_causal(&e2, CAUSALITY_TOL) {
        violations.push("schedule breaks energy causality".into());
    }

    let oracle = match cfg.solver.oracle {
        OracleChoice::None => None,
        choice => {
            let mode = match choice {
                OracleChoice::Exhaustive => {
                    if e1.len() > 6 {
                        return Err(CliError::Config(format!(
                            "exhaustive oracle supports at most 6 slots, trace has {}",
                            e1.len()
                        )));
                    }
                    OracleMode::Exhaustive { grid: cfg.solver.oracle_grid }
                }
                _ => OracleMode::Descent,
            };
            let o = offline_oracle(&e1, &e2, params, mode)?;
            let relative_gap = (sol.objective - o.objective) / o.objective;
            if relative_gap > ORACLE_GAP_TOL {
                violations.push(format!("solver objective exceeds the oracle by {relative_gap:e} (relative)"));
            }
            Some(OracleComparison { mode: choice, objective: o.objective, relative_gap, evaluations: o.evaluations })
        }
    };

    let report = OfflineReport {
        horizon: e1.len(),
        objective: sol.objective,
        iterations: sol.iterations,
        init_bands,
        history: sol.history,
        schedule,
        structure,
        oracle,
        violations,
    };
    out.write_csv("offline_schedule.csv", &report.schedule)?;
    out.write_csv("offline_init_bands.csv", &report.init_bands)?;
    out.write_csv("offline_history.csv", &report.history)?;
    out.write_json("offline_summary.json", &Summary::from(&report))?;
    Ok(report)
}

#[derive(Serialize)]
struct Summary<'a> {
    horizon: usize,
    objective: f64,
    iterations: usize,
    depletion_slots: [Vec<usize>; 2],
    oracle: &'a Option<OracleComparison>,
    violations: &'a [String],
}

impl<'a> From<&'a OfflineReport> for Summary<'a> {
    fn from(r: &'a OfflineReport) -> Self {
        let one_based = |v: &Vec<usize>| v.iter().map(|s| s + 1).collect();
        Summary {
            horizon: r.horizon,
            objective: r.objective,
            iterations: r.iterations,
            depletion_slots: [one_based(&r.structure.depletion_slots[0]), one_based(&r.structure.depletion_slots[1])],
            oracle: &r.oracle,
            violations: &r.violations,
        }
    }
}

fn err_body(err: &Error) -> serde_json::Value {
    match err {
        Error::OfflineNotConverged { iterations, delta, p1, p2 } => serde_json::json!({
            "error": err.to_string(),
            "iterations": iterations,
            "last_change": delta,
            "p1": p1,
            "p2": p2,
        }),
        other => serde_json::json!({ "error": other.to_string() }),
    }
}
