//! `compare`: offline, online, greedy and save-and-forward on common arrivals
//! over a sweep of the correlation coefficient.
//!
//! Run `r` uses seed `seed + r` for every policy and every sweep point. The
//! online policies start from full buffers; the offline schedules see the same
//! energy as the trace `[L1, a_0, ..., a_{T-2}]` (times the quantum), with no
//! buffer cap.

use ehpc_core::baselines::{save_and_forward, Greedy, SavingRule};
use ehpc_core::model::weighted_distortion_at_power;
use ehpc_core::offline::{iterative_gbwf, GbwfOptions, PowerSchedule};
use ehpc_core::online::{expected_distortion, OnlinePolicy};
use ehpc_core::sim::{episode_arrivals, mean_and_stderr, simulate_episode, SimOptions};
use ehpc_core::{EnergyTrace, OnlineModel, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, PolicyChoice};
use crate::error::CliError;
use crate::online::solve_model;
use crate::output::OutputDir;

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub sqrt_eta: f64,
    pub eta: f64,
    pub policy: &'static str,
    pub mean: f64,
    pub stderr: f64,
    /// Stationary expected distortion of the online policy.
    pub analytic: Option<f64>,
    /// Whether this sweep point satisfies offline <= online <= greedy within two standard errors.
    pub ordering_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub horizon: usize,
    pub runs: usize,
    pub rows: Vec<CompareRow>,
    /// Per policy, whether the mean never rises along the sweep (two standard errors of slack).
    pub monotone: Vec<(&'static str, bool)>,
    pub violations: Vec<String>,
}

/// Per-run distortion of every selected policy at one sweep point.
struct Point {
    sqrt_eta: f64,
    analytic: Option<f64>,
    samples: Vec<(PolicyChoice, Vec<f64>)>,
}

impl Point {
    fn get(&self, p: PolicyChoice) -> Option<&[f64]> {
        self.samples.iter().find(|(q, _)| *q == p).map(|(_, v)| v.as_slice())
    }
}

/// Is `a <= b` within two standard errors of the paired difference?
fn paired_le(a: &[f64], b: &[f64]) -> bool {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, se) = mean_and_stderr(&d);
    mean <= 2.0 * se + 1e-12
}

fn offline_trace(arrivals: &[usize], initial: usize, delta: f64) -> Result<EnergyTrace, CliError> {
    let mut e = Vec::with_capacity(arrivals.len());
    e.push(initial as f64 * delta);
    e.extend(arrivals[..arrivals.len() - 1].iter().map(|&a| a as f64 * delta));
    Ok(EnergyTrace::new(e)?)
}

fn schedule_mean(p1: &PowerSchedule, p2: &PowerSchedule, params: &SystemParams) -> f64 {
    let t = p1.len() as f64;
    p1.as_slice().iter().zip(p2.as_slice()).map(|(&a, &b)| weighted_distortion_at_power(a, b, params).value).sum::<f64>()
        / t
}

/// Per-run distortions of one policy.
type PolicySamples = (PolicyChoice, Vec<f64>);

fn run_point(
    cfg: &ExperimentConfig,
    model: &OnlineModel,
    policies: &[PolicyChoice],
    out: &mut OutputDir,
) -> Result<(Option<f64>, Vec<PolicySamples>), CliError> {
    let t = cfg.compare.horizon;
    let params = model.params();
    let online = if policies.contains(&PolicyChoice::Online) {
        Some(solve_model(model, cfg.solver.vi_eps, out)?)
    } else {
        None
    };
    let analytic = match &online {
        Some(vi) => Some(expected_distortion(&vi.values, &vi.policy, model)?),
        None => None,
    };
    let opts = SimOptions { burn_in: 0, initial: None, record_slots: false };
    let gbwf = GbwfOptions { eps: cfg.solver.gbwf_eps, max_iter: cfg.solver.gbwf_max_iter };
    let sim = |policy: &dyn OnlinePolicy, seed| -> Result<f64, CliError> {
        Ok(simulate_episode(policy, model, t, seed, None, &opts)?.summary.mean_distortion)
    };

    let per_run: Vec<Vec<f64>> = (0..cfg.compare.runs)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>, CliError> {
            let seed = cfg.seed.wrapping_add(r as u64);
            let [a1, a2] = episode_arrivals(model, t, seed)?;
            let e1 = offline_trace(&a1, model.l1(), model.delta())?;
            let e2 = offline_trace(&a2, model.l2(), model.delta())?;
            policies
                .iter()
                .map(|p| match p {
                    PolicyChoice::Offline => Ok(iterative_gbwf(&e1, &e2, params, gbwf)?.objective / t as f64),
                    PolicyChoice::Online => sim(&online.as_ref().expect("solved above").policy, seed),
                    PolicyChoice::Greedy => sim(&Greedy, seed),
                    PolicyChoice::SaveForward => {
                        let p1 = save_and_forward(&e1, SavingRule::SqrtT)?;
                        let p2 = save_and_forward(&e2, SavingRule::SqrtT)?;
                        Ok(schedule_mean(&p1, &p2, params))
                    }
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let samples = policies.iter().enumerate().map(|(k, &p)| (p, per_run.iter().map(|v| v[k]).collect())).collect();
    Ok((analytic, samples))
}

pub fn run_compare(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<CompareReport, CliError> {
    let c = &cfg.compare;
    if c.sqrt_eta.is_empty() || c.runs == 0 || c.horizon < 4 {
        return Err(CliError::Config("compare needs a non-empty sweep, runs >= 1 and horizon >= 4".into()));
    }
    let mut policies: Vec<PolicyChoice> = Vec::new();
    for p in &c.policies {
        if !policies.contains(p) {
            policies.push(*p);
        }
    }
    let base = cfg.online_model()?;
    let mut points = Vec::new();
    for &s in &c.sqrt_eta {
        if !(0.0..=1.0).contains(&s) {
            return Err(CliError::Config(format!("sqrt_eta = {s} outside [0, 1]")));
        }
        let params = cfg.params.with_eta(s * s).map_err(CliError::config)?;
        let model = base.with_params(params);
        let (analytic, samples) = run_point(cfg, &model, &policies, out)?;
        points.push(Point { sqrt_eta: s, analytic, samples });
    }

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for pt in &points {
        let ordering_ok = match (pt.get(PolicyChoice::Offline), pt.get(PolicyChoice::Online), pt.get(PolicyChoice::Greedy)) {
            (Some(off), Some(on), Some(gr)) => {
                let ok = paired_le(off, on) && paired_le(on, gr);
                if !ok {
                    violations.push(format!("offline <= online <= greedy fails at sqrt_eta = {}", pt.sqrt_eta));
                }
                Some(ok)
            }
            _ => None,
        };
        for (p, v) in &pt.samples {
            let (mean, stderr) = mean_and_stderr(v);
            rows.push(CompareRow {
                sqrt_eta: pt.sqrt_eta,
                eta: pt.sqrt_eta * pt.sqrt_eta,
                policy: p.name(),
                mean,
                stderr,
                analytic: if *p == PolicyChoice::Online { pt.analytic } else { None },
                ordering_ok,
            });
        }
    }

    // sort the sweep so monotonicity is checked along increasing correlation
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].sqrt_eta.total_cmp(&points[b].sqrt_eta));
    let mut monotone = Vec::new();
    for &p in &policies {
        let ok = order.windows(2).all(|w| {
            let (lo, hi) = (points[w[0]].get(p).unwrap(), points[w[1]].get(p).unwrap());
            paired_le(hi, lo)
        });
        if !ok {
            violations.push(format!("{} distortion rises with correlation", p.name()));
        }
        monotone.push((p.name(), ok));
    }

    let report = CompareReport { horizon: c.horizon, runs: c.runs, rows, monotone, violations };
    out.write_csv("compare.csv", &report.rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        horizon: usize,
        runs: usize,
        monotone: &'a [(&'static str, bool)],
        violations: &'a [String],
    }
    out.write_json(
        "compare_summary.json",
        &Summary { horizon: report.horizon, runs: report.runs, monotone: &report.monotone, violations: &report.violations },
    )?;
    Ok(report)
}
