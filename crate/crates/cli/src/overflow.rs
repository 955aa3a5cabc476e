//! `overflow`: stationary probability of clipped harvests versus buffer size.

use ehpc_core::online::overflow_probability;
use ehpc_core::sim::{monte_carlo, SimOptions};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::online::solve_model;
use crate::output::OutputDir;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OverflowRow {
    pub l: usize,
    pub q1: f64,
    pub q2: f64,
    pub mc_q1: f64,
    pub mc_q1_stderr: f64,
    pub mc_q2: f64,
    pub mc_q2_stderr: f64,
    /// Analytic and simulated columns agree within three standard errors.
    pub agree: bool,
    pub vi_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverflowReport {
    pub alpha: f64,
    pub emax: (usize, usize),
    pub rows: Vec<OverflowRow>,
    /// Per node, whether `q` never rises with `L`.
    pub non_increasing: [bool; 2],
    /// Largest node-1 probability at `L >= 12`, if the sweep reaches it.
    pub q1_max_from_12: Option<f64>,
    pub violations: Vec<String>,
}

fn within(q: f64, mc: f64, se: f64) -> bool {
    // a floor keeps zero-variance columns from demanding exact equality
    (q - mc).abs() <= 3.0 * se + 1e-4
}

pub fn run_overflow(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<OverflowReport, CliError> {
    let o = &cfg.overflow;
    if o.capacities.is_empty() || o.mc_runs == 0 {
        return Err(CliError::Config("overflow needs at least one capacity and one run".into()));
    }
    let base = cfg.online_model()?;
    let sim = SimOptions { burn_in: cfg.simulation.burn_in, initial: None, record_slots: false };
    let mut caps = o.capacities.clone();
    caps.sort_unstable();
    caps.dedup();

    let mut rows = Vec::new();
    for &l in &caps {
        let model = base.with_buffers(l, l, o.e1max, o.e2max).map_err(CliError::config)?;
        let vi = solve_model(&model, cfg.solver.vi_eps, out)?;
        let (q1, q2) = overflow_probability(&vi.policy, &model)?;
        let mc = monte_carlo(&vi.policy, &model, o.mc_horizon, o.mc_runs, cfg.seed, None, &sim)?;
        let agree = within(q1, mc.overflow_rate[0], mc.overflow_stderr[0])
            && within(q2, mc.overflow_rate[1], mc.overflow_stderr[1]);
        rows.push(OverflowRow {
            l,
            q1,
            q2,
            mc_q1: mc.overflow_rate[0],
            mc_q1_stderr: mc.overflow_stderr[0],
            mc_q2: mc.overflow_rate[1],
            mc_q2_stderr: mc.overflow_stderr[1],
            agree,
            vi_iterations: vi.iterations,
        });
    }

    let mut violations = Vec::new();
    let mut non_increasing = [true; 2];
    for w in rows.windows(2) {
        non_increasing[0] &= w[1].q1 <= w[0].q1 + 1e-12;
        non_increasing[1] &= w[1].q2 <= w[0].q2 + 1e-12;
    }
    for (k, ok) in non_increasing.iter().enumerate() {
        if !ok {
            violations.push(format!("node {} overflow probability rises with L", k + 1));
        }
    }
    for r in rows.iter().filter(|r| !r.agree) {
        violations.push(format!("L = {}: analytic and simulated overflow differ by more than 3 stderr", r.l));
    }
    let q1_max_from_12 = rows.iter().filter(|r| r.l >= 12).map(|r| r.q1).reduce(f64::max);

    let report = OverflowReport {
        alpha: base.alpha(),
        emax: (o.e1max, o.e2max),
        rows,
        non_increasing,
        q1_max_from_12,
        violations,
    };
    out.write_csv("overflow.csv", &report.rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        alpha: f64,
        emax: (usize, usize),
        non_increasing: [bool; 2],
        q1_max_from_12: Option<f64>,
        violations: &'a [String],
    }
    out.write_json(
        "overflow_summary.json",
        &Summary {
            alpha: report.alpha,
            emax: report.emax,
            non_increasing: report.non_increasing,
            q1_max_from_12: report.q1_max_from_12,
            violations: &report.violations,
        },
    )?;
    Ok(report)
}
