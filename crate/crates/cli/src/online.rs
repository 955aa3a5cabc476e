//! `online`: optimal stationary policy, its cost, stationary law and overflow.

use ehpc_core::online::{
    overflow_probability, stationary_distribution, transfer_matrix, value_iteration, ViOptions, ValueIteration,
};
use ehpc_core::{Error, OnlineModel};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PolicyRow {
    pub s: usize,
    pub i: usize,
    pub j: usize,
    pub p1: usize,
    pub p2: usize,
    pub v: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorRow {
    pub iteration: usize,
    pub sum_abs: f64,
    pub max_abs: f64,
    /// `max_abs` over the previous iteration's; empty for the first.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OnlineReport {
    pub states: usize,
    pub alpha: f64,
    pub iterations: usize,
    pub expected_distortion: f64,
    pub overflow: [f64; 2],
    /// `v*` never increases when either buffer level grows.
    pub value_monotone: bool,
    pub policy: Vec<PolicyRow>,
    pub errors: Vec<ErrorRow>,
    pub violations: Vec<String>,
}

/// Value iteration, writing the last iterate as diagnostics if it stalls.
pub(crate) fn solve_model(model: &OnlineModel, eps: f64, out: &mut OutputDir) -> Result<ValueIteration, CliError> {
    match value_iteration(model, &ViOptions { eps, ..Default::default() }) {
        Ok(vi) => Ok(vi),
        Err(err @ Error::ValueIterationNotConverged { .. }) => {
            if let Error::ValueIterationNotConverged { iterations, delta, values } = &err {
                let body = serde_json::json!({
                    "error": err.to_string(),
                    "iterations": iterations,
                    "last_change": delta,
                    "values": values,
                });
                out.write_json("online_diagnostics.json", &body)?;
            }
            Err(err.into())
        }
        Err(err) => Err(err.into()),
    }
}

pub(crate) fn error_rows(vi: &ValueIteration) -> Vec<ErrorRow> {
    vi.trace
        .iter()
        .enumerate()
        .map(|(k, e)| ErrorRow {
            iteration: k + 1,
            sum_abs: e.sum_abs,
            max_abs: e.max_abs,
            ratio: (k > 0).then(|| e.max_abs / vi.trace[k - 1].max_abs),
        })
        .collect()
}

pub fn run_online(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<OnlineReport, CliError> {
    let model = cfg.online_model()?;
    let vi = solve_model(&model, cfg.solver.vi_eps, out)?;
    let p = transfer_matrix(&vi.policy, &model)?;
    let pi = stationary_distribution(&p)?;
    let v = vi.values.as_slice();
    let expected_distortion: f64 = pi.iter().zip(v).map(|(a, b)| a * b).sum();
    let (q1, q2) = overflow_probability(&vi.policy, &model)?;

    let mut violations = Vec::new();
    let n = model.num_states();
    let mut worst = 0.0f64;
    for t in 0..n {
        let moved: f64 = (0..n).map(|s| pi[s] * p.get(s, t)).sum();
        worst = worst.max((moved - pi[t]).abs());
    }
    if worst > 1e-10 {
        violations.push(format!("stationary residual {worst:e} exceeds 1e-10"));
    }

    let mut value_monotone = true;
    for k in 0..n {
        let (i, j) = model.levels(k);
        if i > 1 && v[k] > v[model.position(i - 1, j)] + 1e-12 {
            value_monotone = false;
        }
        if j > 1 && v[k] > v[model.position(i, j - 1)] + 1e-12 {
            value_monotone = false;
        }
    }

    let policy: Vec<PolicyRow> = (0..n)
        .map(|k| {
            let (i, j) = model.levels(k);
            let (p1, p2) = vi.policy.actions()[k];
            PolicyRow { s: k + 1, i, j, p1, p2, v: v[k], pi: pi[k] }
        })
        .collect();
    let report = OnlineReport {
        states: n,
        alpha: model.alpha(),
        iterations: vi.iterations,
        expected_distortion,
        overflow: [q1, q2],
        value_monotone,
        errors: error_rows(&vi),
        policy,
        violations,
    };
    out.write_csv("online_policy.csv", &report.policy)?;
    out.write_csv("online_errors.csv", &report.errors)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        model: &'a OnlineModel,
        iterations: usize,
        expected_distortion: f64,
        overflow: [f64; 2],
        value_monotone: bool,
        violations: &'a [String],
    }
    out.write_json(
        "online_summary.json",
        &Summary {
            model: &model,
            iterations: report.iterations,
            expected_distortion,
            overflow: report.overflow,
            value_monotone,
            violations: &report.violations,
        },
    )?;
    Ok(report)
}
