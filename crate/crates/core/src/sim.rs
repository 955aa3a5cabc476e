//! Seeded Monte Carlo simulation of the clipped-buffer dynamics.
//!
//! Arrivals come from ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`;
//! node 1 reads stream 0 and node 2 reads stream 1 of the same seed, and each
//! draw is `gen_range(1..=emax)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::EnergyTrace;
use crate::online::{CostVector, DistortionTable, OnlineModel, OnlinePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub emax: usize,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

/// Uniform integer arrivals in `1..=emax`.
pub fn arrival_quanta(spec: &ArrivalSpec, t: usize) -> Result<Vec<usize>> {
    if spec.emax == 0 {
        return Err(Error::InvalidParameter("emax must be at least 1".into()));
    }
    if t == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    Ok((0..t).map(|_| rng.gen_range(1..=spec.emax)).collect())
}

/// [`arrival_quanta`] as an energy trace.
pub fn generate_arrivals(spec: &ArrivalSpec, t: usize) -> Result<EnergyTrace> {
    EnergyTrace::new(arrival_quanta(spec, t)?.into_iter().map(|e| e as f64).collect())
}

/// Arrivals of both nodes for the episode with `seed`.
pub fn episode_arrivals(model: &OnlineModel, t: usize, seed: u64) -> Result<[Vec<usize>; 2]> {
    Ok([
        arrival_quanta(&ArrivalSpec { emax: model.e1max(), seed, stream: 0 }, t)?,
        arrival_quanta(&ArrivalSpec { emax: model.e2max(), seed, stream: 1 }, t)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Leading slots left out of the summary.
    pub burn_in: usize,
    /// Starting buffer levels; full buffers when absent.
    pub initial: Option<(usize, usize)>,
    /// Keep the per-slot log.
    pub record_slots: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { burn_in: 100, initial: None, record_slots: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub state: (usize, usize),
    pub action: (usize, usize),
    pub distortion: f64,
    /// `(1-alpha) d + alpha v(next state)`, when a cost vector was supplied.
    pub cost: Option<f64>,
    pub overflow: [bool; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub mean_distortion: f64,
    pub mean_cost: Option<f64>,
    pub overflow_counts: [usize; 2],
    pub measured_slots: usize,
}

impl EpisodeSummary {
    pub fn overflow_rate(&self, node: usize) -> f64 {
        self.overflow_counts[node] as f64 / self.measured_slots as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub horizon: usize,
    pub slots: Vec<SlotRecord>,
    pub summary: EpisodeSummary,
}

struct Episode<'a> {
    model: &'a OnlineModel,
    table: &'a DistortionTable,
    cost: Option<&'a CostVector>,
    opts: &'a SimOptions,
}

impl Episode<'_> {
    fn run(&self, policy: &dyn OnlinePolicy, t: usize, seed: u64) -> Result<EpisodeResult> {
        let model = self.model;
        let (l1, l2) = (model.l1(), model.l2());
        let alpha = model.alpha();
        let [a1, a2] = episode_arrivals(model, t, seed)?;
        let (mut i, mut j) = self.opts.initial.unwrap_or((l1, l2));
        if i == 0 || i > l1 || j == 0 || j > l2 {
            return Err(Error::InvalidParameter(format!("initial state ({i}, {j}) outside the buffers")));
        }
        let mut slots = Vec::with_capacity(if self.opts.record_slots { t } else { 0 });
        let mut sum_d = 0.0;
        let mut sum_c = 0.0;
        let mut overflow_counts = [0usize; 2];
        for tau in 0..t {
            let (p1, p2) = policy.action(i, j);
            if p1 == 0 || p1 > i || p2 == 0 || p2 > j {
                return Err(Error::InfeasibleAction { i, j, p1, p2 });
            }
            let d = self.table.get(p1, p2);
            let raw = (i - p1 + a1[tau], j - p2 + a2[tau]);
            let overflow = [raw.0 > l1, raw.1 > l2];
            let next = (raw.0.min(l1), raw.1.min(l2));
            let cost = self.cost.map(|v| (1.0 - alpha) * d + alpha * v.as_slice()[model.position(next.0, next.1)]);
            if tau >= self.opts.burn_in {
                sum_d += d;
                sum_c += cost.unwrap_or(0.0);
                for k in 0..2 {
                    overflow_counts[k] += overflow[k] as usize;
                }
            }
            if self.opts.record_slots {
                slots.push(SlotRecord { slot: tau, state: (i, j), action: (p1, p2), distortion: d, cost, overflow });
            }
            (i, j) = next;
        }
        let measured = (t - self.opts.burn_in) as f64;
        Ok(EpisodeResult {
            horizon: t,
            slots,
            summary: EpisodeSummary {
                mean_distortion: sum_d / measured,
                mean_cost: self.cost.map(|_| sum_c / measured),
                overflow_counts,
                measured_slots: t - self.opts.burn_in,
            },
        })
    }
}

fn check_horizon(t: usize, opts: &SimOptions) -> Result<()> {
    if t <= opts.burn_in {
        return Err(Error::InvalidParameter(format!("horizon {t} must exceed the burn-in {}", opts.burn_in)));
    }
    Ok(())
}

fn check_cost(cost: Option<&CostVector>, model: &OnlineModel) -> Result<()> {
    if let Some(v) = cost {
        if v.len() != model.num_states() {
            return Err(Error::InvalidParameter("cost vector does not match the model".into()));
        }
    }
    Ok(())
}

/// One episode of `t` slots driven by `policy`.
pub fn simulate_episode(
    policy: &dyn OnlinePolicy,
    model: &OnlineModel,
    t: usize,
    seed: u64,
    cost: Option<&CostVector>,
    opts: &SimOptions,
) -> Result<EpisodeResult> {
    check_horizon(t, opts)?;
    check_cost(cost, model)?;
    let table = DistortionTable::new(model);
    Episode { model, table: &table, cost, opts }.run(policy, t, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub mean: f64,
    pub stderr: f64,
    pub mean_cost: Option<f64>,
    pub cost_stderr: Option<f64>,
    pub overflow_rate: [f64; 2],
    pub overflow_stderr: [f64; 2],
}

/// Mean and standard error of a sample.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `runs` independent episodes with seeds `base_seed, base_seed + 1, ...`.
pub fn monte_carlo(
    policy: &dyn OnlinePolicy,
    model: &OnlineModel,
    t: usize,
    runs: usize,
    base_seed: u64,
    cost: Option<&CostVector>,
    opts: &SimOptions,
) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    check_horizon(t, opts)?;
    check_cost(cost, model)?;
    let table = DistortionTable::new(model);
    let quiet = SimOptions { record_slots: false, ..opts.clone() };
    let episode = Episode { model, table: &table, cost, opts: &quiet };
    let summaries = (0..runs)
        .into_par_iter()
        .map(|r| episode.run(policy, t, base_seed.wrapping_add(r as u64)).map(|e| e.summary))
        .collect::<Result<Vec<_>>>()?;

    let distortions: Vec<f64> = summaries.iter().map(|s| s.mean_distortion).collect();
    let (mean, stderr) = mean_and_stderr(&distortions);
    let (mean_cost, cost_stderr) = if cost.is_some() {
        let costs: Vec<f64> = summaries.iter().map(|s| s.mean_cost.unwrap_or(f64::NAN)).collect();
        let (m, s) = mean_and_stderr(&costs);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let mut overflow_rate = [0.0; 2];
    let mut overflow_stderr = [0.0; 2];
    for k in 0..2 {
        let rates: Vec<f64> = summaries.iter().map(|s| s.overflow_rate(k)).collect();
        (overflow_rate[k], overflow_stderr[k]) = mean_and_stderr(&rates);
    }
    Ok(MonteCarloSummary { runs, mean, stderr, mean_cost, cost_stderr, overflow_rate, overflow_stderr })
}
