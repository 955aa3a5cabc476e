use serde::Serialize;

use super::directional::directional_wf_single;
use super::kkt::marginal_xy;
use super::{EnergyTrace, PowerSchedule};
use crate::error::{Error, Result};
use crate::model::{attenuation_at_power, weighted_distortion_at_power, Node, SystemParams};
use crate::roots::increasing_root;

const ROOT_MAX_ITER: usize = 200;
const LEVEL_REL_TOL: f64 = 1e-10;
const POWER_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbwfOptions {
    /// Stop once the summed absolute power change of one sweep is at most `eps`.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for GbwfOptions {
    fn default() -> Self {
        GbwfOptions { eps: 1e-6, max_iter: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub delta_p: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GbwfSolution {
    pub p1: PowerSchedule,
    pub p2: PowerSchedule,
    pub objective: f64,
    pub iterations: usize,
    /// Entry 0 is the initial point (node 1 single-user optimum, node 2 silent).
    pub history: Vec<IterationRecord>,
    pub initial_p1: PowerSchedule,
}

/// Slots `start..end` filled to a common water level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaterBlock {
    pub start: usize,
    pub end: usize,
    pub energy: f64,
    pub level: f64,
}

/// Sum of per-slot weighted distortions.
pub fn total_distortion(p1: &PowerSchedule, p2: &PowerSchedule, params: &SystemParams) -> f64 {
    p1.as_slice()
        .iter()
        .zip(p2.as_slice())
        .map(|(&a, &b)| weighted_distortion_at_power(a, b, params).value)
        .sum()
}

/// Best response of `node` to a fixed schedule of the other node.
pub fn backward_wf_pass(
    node: Node,
    e: &EnergyTrace,
    other: &PowerSchedule,
    params: &SystemParams,
) -> Result<PowerSchedule> {
    backward_wf_blocks(node, e, other, params).map(|(p, _)| p)
}

struct SlotLevels<'a> {
    node: Node,
    h: f64,
    other_att: Vec<f64>,
    params: &'a SystemParams,
}

impl SlotLevels<'_> {
    fn level(&self, s: usize, p: f64) -> f64 {
        let own = attenuation_at_power(p, self.h);
        let m = match self.node {
            Node::One => marginal_xy(Node::One, own, self.other_att[s], self.params),
            Node::Two => marginal_xy(Node::Two, self.other_att[s], own, self.params),
        };
        1.0 / m
    }

    /// Power in slot `s` whose level is `target`, clamped to `[0, cap]`.
    fn power_at(&self, s: usize, target: f64, cap: f64) -> Result<f64> {
        if cap <= 0.0 || self.level(s, 0.0) >= target {
            return Ok(0.0);
        }
        if self.level(s, cap) <= target {
            return Ok(cap);
        }
        increasing_root(|p| self.level(s, p) - target, 0.0, cap, POWER_REL_TOL * cap.max(1.0), ROOT_MAX_ITER)
    }

    /// Spreads `energy` over `p` (slots `start..`) at a common level inside `[lo, hi]`.
    fn equalize(&self, p: &mut [f64], start: usize, energy: f64, lo: f64, hi: f64) -> Result<f64> {
        let slots = start..start + p.len();
        if energy <= 0.0 {
            p.fill(0.0);
            return Ok(slots.map(|s| self.level(s, 0.0)).fold(f64::INFINITY, f64::min));
        }
        let mut failure = None;
        let spent = |level: f64, failure: &mut Option<Error>| -> f64 {
            let mut sum = 0.0;
            for s in slots.clone() {
                match self.power_at(s, level, energy) {
                    Ok(v) => sum += v,
                    Err(err) => {
                        failure.get_or_insert(err);
                    }
                }
            }
            sum - energy
        };
        let level = increasing_root(
            |l| spent(l, &mut failure),
            lo,
            hi,
            LEVEL_REL_TOL * hi.abs().max(1.0),
            ROOT_MAX_ITER,
        )?;
        if let Some(err) = failure {
            return Err(err);
        }
        for (k, s) in slots.clone().enumerate() {
            p[k] = self.power_at(s, level, energy)?;
        }
        // absorb the root-finding residual so causality holds with equality
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            let scale = energy / sum;
            p.iter_mut().for_each(|v| *v *= scale);
        } else {
            p.fill(energy / p.len() as f64);
        }
        // when one slot takes the whole energy the spent curve is flat near
        // the root, so report the level the powered slots actually reach
        let reached = slots
            .zip(p.iter())
            .filter(|(_, &v)| v > 0.0)
            .map(|(s, &v)| self.level(s, v))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(if reached.is_finite() { reached.min(level) } else { level })
    }
}

/// [`backward_wf_pass`] together with the water blocks it produced.
///
/// Slots are processed from last to first. Each slot starts with its own
/// arrival; while its level exceeds the level of the block that follows, the
/// two are merged and refilled to a common level, so energy only ever moves
/// forward in time.
pub fn backward_wf_blocks(
    node: Node,
    e: &EnergyTrace,
    other: &PowerSchedule,
    params: &SystemParams,
) -> Result<(PowerSchedule, Vec<WaterBlock>)> {
    let t = e.len();
    if other.len() != t {
        return Err(Error::InvalidParameter(format!(
            "trace has {t} slots but the other schedule has {}",
            other.len()
        )));
    }
    let levels = SlotLevels {
        node,
        h: params.gain(node),
        other_att: other
            .as_slice()
            .iter()
            .map(|&q| attenuation_at_power(q, params.gain(node.other())))
            .collect(),
        params,
    };
    let arrivals = e.as_slice();
    let mut p = arrivals.to_vec();
    let mut stack: Vec<WaterBlock> = Vec::new();
    for tau in (0..t).rev() {
        let mut block = WaterBlock { start: tau, end: tau + 1, energy: arrivals[tau], level: levels.level(tau, arrivals[tau]) };
        while let Some(next) = stack.last().copied() {
            if block.level <= next.level {
                break;
            }
            stack.pop();
            block.end = next.end;
            block.energy += next.energy;
            block.level = levels.equalize(&mut p[block.start..block.end], block.start, block.energy, next.level, block.level)?;
        }
        stack.push(block);
    }
    stack.reverse();
    Ok((PowerSchedule::from_vec_unchecked(p), stack))
}

/// Alternating best responses, node 2 then node 1, from the node-1 single-user optimum.
pub fn iterative_gbwf(
    e1: &EnergyTrace,
    e2: &EnergyTrace,
    params: &SystemParams,
    opts: GbwfOptions,
) -> Result<GbwfSolution> {
    if e1.len() != e2.len() {
        return Err(Error::InvalidParameter(format!(
            "traces differ in length ({} vs {})",
            e1.len(),
            e2.len()
        )));
    }
    let initial_p1 = directional_wf_single(e1);
    let mut p1 = initial_p1.clone();
    let mut p2 = PowerSchedule::zeros(e2.len());
    let mut history = vec![IterationRecord { iteration: 0, delta_p: f64::NAN, objective: total_distortion(&p1, &p2, params) }];
    let mut delta = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let new_p2 = backward_wf_pass(Node::Two, e2, &p1, params)?;
        let new_p1 = backward_wf_pass(Node::One, e1, &new_p2, params)?;
        delta = l1_distance(&new_p1, &p1) + l1_distance(&new_p2, &p2);
        p1 = new_p1;
        p2 = new_p2;
        let objective = total_distortion(&p1, &p2, params);
        history.push(IterationRecord { iteration, delta_p: delta, objective });
        if delta <= opts.eps {
            return Ok(GbwfSolution { p1, p2, objective, iterations: iteration, history, initial_p1 });
        }
    }
    Err(Error::OfflineNotConverged {
        iterations: opts.max_iter,
        delta,
        p1: p1.as_slice().to_vec(),
        p2: p2.as_slice().to_vec(),
    })
}

fn l1_distance(a: &PowerSchedule, b: &PowerSchedule) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum()
}
