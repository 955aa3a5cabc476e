//! `convergence`: value-iteration error decay, offline objective history and
//! the long-run equality of time-average cost and time-average distortion.

use ehpc_core::offline::{iterative_gbwf, GbwfOptions, IterationRecord};
use ehpc_core::online::{policy_value_exact, PolicyTable};
use ehpc_core::sim::{monte_carlo, SimOptions};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::online::{error_rows, solve_model, ErrorRow};
use crate::output::OutputDir;

/// Slack on the per-iteration error ratio above `alpha`.
pub const RATIO_SLACK: f64 = 0.01;
/// Allowed relative gap between time-average cost and distortion.
pub const COST_GAP_TOL: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    pub policy: &'static str,
    pub mean_distortion: f64,
    pub distortion_stderr: f64,
    pub mean_cost: f64,
    pub cost_stderr: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub errors: Vec<ErrorRow>,
    /// Largest error ratio from iteration 2 on.
    pub max_ratio: f64,
    pub offline_history: Option<Vec<IterationRecord>>,
    pub cost: Vec<CostRow>,
    pub violations: Vec<String>,
}

pub fn run_convergence(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<ConvergenceReport, CliError> {
    let model = cfg.online_model()?;
    let alpha = model.alpha();
    let vi = solve_model(&model, cfg.solver.vi_eps, out)?;
    let errors = error_rows(&vi);
    let max_ratio = errors.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let mut violations = Vec::new();
    if max_ratio > alpha + RATIO_SLACK {
        violations.push(format!("error ratio {max_ratio} exceeds alpha + {RATIO_SLACK}"));
    }

    let offline_history = match &cfg.traces {
        Some(_) => {
            let (e1, e2) = cfg.energy_traces()?;
            let opts = GbwfOptions { eps: cfg.solver.gbwf_eps, max_iter: cfg.solver.gbwf_max_iter };
            let sol = iterative_gbwf(&e1, &e2, &cfg.params, opts)?;
            if sol.history.windows(2).any(|w| w[1].objective > w[0].objective + 1e-12) {
                violations.push("offline objective increased between sweeps".into());
            }
            Some(sol.history)
        }
        None => None,
    };

    let s = &cfg.simulation;
    let sim = SimOptions { burn_in: s.burn_in, initial: None, record_slots: false };
    let greedy = PolicyTable::greedy(&model);
    let greedy_v = policy_value_exact(&greedy, &model)?;
    let mut cost = Vec::new();
    for (name, policy, v) in [("online", &vi.policy, &vi.values), ("greedy", &greedy, &greedy_v)] {
        let mc = monte_carlo(policy, &model, s.horizon, s.runs, cfg.seed, Some(v), &sim)?;
        let mean_cost = mc.mean_cost.expect("cost vector supplied");
        let relative_gap = (mean_cost - mc.mean).abs() / mc.mean;
        if relative_gap > COST_GAP_TOL {
            violations.push(format!("{name}: cost and distortion differ by {relative_gap:.4} (relative)"));
        }
        cost.push(CostRow {
            policy: name,
            mean_distortion: mc.mean,
            distortion_stderr: mc.stderr,
            mean_cost,
            cost_stderr: mc.cost_stderr.unwrap_or(0.0),
            relative_gap,
        });
    }

    let report = ConvergenceReport { alpha, errors, max_ratio, offline_history, cost, violations };
    out.write_csv("convergence_online.csv", &report.errors)?;
    if let Some(h) = &report.offline_history {
        out.write_csv("convergence_offline.csv", h)?;
    }
    out.write_csv("convergence_cost.csv", &report.cost)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        alpha: f64,
        iterations: usize,
        max_ratio: f64,
        violations: &'a [String],
    }
    out.write_json(
        "convergence_summary.json",
        &Summary { alpha, iterations: report.errors.len(), max_ratio, violations: &report.violations },
    )?;
    Ok(report)
}
