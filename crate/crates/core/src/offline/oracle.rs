//! Reference solvers that only use the weighted distortion itself, never the
//! water levels, so they can check the water-filling solver independently.

use serde::Serialize;

use super::gbwf::total_distortion;
use super::{EnergyTrace, PowerSchedule};
use crate::error::{Error, Result};
use crate::model::{weighted_distortion_at_power, SystemParams};
use crate::roots::golden_min;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleMode {
    /// Lattice search with `grid` quanta per node followed by pattern-search zooming; `T <= 6`.
    Exhaustive { grid: usize },
    /// Pairwise energy-exchange coordinate descent with exact line searches.
    Descent,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub p1: PowerSchedule,
    pub p2: PowerSchedule,
    pub objective: f64,
    pub evaluations: usize,
}

pub fn offline_oracle(
    e1: &EnergyTrace,
    e2: &EnergyTrace,
    params: &SystemParams,
    mode: OracleMode,
) -> Result<OracleSolution> {
    if e1.len() != e2.len() {
        return Err(Error::InvalidParameter("traces differ in length".into()));
    }
    match mode {
        OracleMode::Exhaustive { grid } => exhaustive(e1, e2, params, grid),
        OracleMode::Descent => descent(e1, e2, params),
    }
}

/// Every causal full-spend schedule on the lattice of `total / grid` quanta.
fn lattice_schedules(e: &EnergyTrace, grid: usize) -> Vec<Vec<f64>> {
    let t = e.len();
    let total = e.total();
    if total <= 0.0 {
        return vec![vec![0.0; t]];
    }
    let quantum = total / grid as f64;
    let cum = e.cumulative();
    let mut out = Vec::new();
    let mut current = vec![0usize; t];
    fn rec(slot: usize, used: usize, grid: usize, quantum: f64, cum: &[f64], cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        let t = cur.len();
        if slot == t - 1 {
            cur[slot] = grid - used;
            out.push(cur.iter().map(|&n| n as f64 * quantum).collect());
            return;
        }
        for n in 0..=grid - used {
            if (used + n) as f64 * quantum > cum[slot] * (1.0 + 1e-12) {
                break;
            }
            cur[slot] = n;
            rec(slot + 1, used + n, grid, quantum, cum, cur, out);
        }
    }
    rec(0, 0, grid, quantum, &cum, &mut current, &mut out);
    out
}

fn causal_full(p: &[f64], cum: &[f64]) -> bool {
    let mut acc = 0.0;
    for (v, c) in p.iter().zip(cum) {
        if *v < 0.0 {
            return false;
        }
        acc += v;
        if acc > c + 1e-12 {
            return false;
        }
    }
    true
}

fn objective_of(p1: &[f64], p2: &[f64], params: &SystemParams) -> f64 {
    p1.iter().zip(p2).map(|(&a, &b)| weighted_distortion_at_power(a, b, params).value).sum()
}

fn exhaustive(e1: &EnergyTrace, e2: &EnergyTrace, params: &SystemParams, grid: usize) -> Result<OracleSolution> {
    let t = e1.len();
    if t > 6 {
        return Err(Error::InvalidParameter(format!("exhaustive oracle supports T <= 6, got {t}")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter("exhaustive oracle needs grid >= 2".into()));
    }
    let s1 = lattice_schedules(e1, grid);
    let s2 = lattice_schedules(e2, grid);
    let mut evaluations = 0usize;
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (a, p1) in s1.iter().enumerate() {
        for (b, p2) in s2.iter().enumerate() {
            let v = objective_of(p1, p2, params);
            evaluations += 1;
            if v < best.0 {
                best = (v, a, b);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::EmptyGrid("no causal lattice schedule".into()));
    }

    // pattern search over the free coordinates (all slots but the last of each node)
    let cum = [e1.cumulative(), e2.cumulative()];
    let totals = [e1.total(), e2.total()];
    let mut point = [s1[best.1].clone(), s2[best.2].clone()];
    let mut value = best.0;
    let free = t - 1;
    let mut step = [totals[0] / grid as f64, totals[1] / grid as f64];
    let dims = 2 * free;
    let stencil_size = 3usize.pow(dims as u32);
    for _ in 0..100_000 {
        if step[0] <= 1e-11 * totals[0].max(1.0) && step[1] <= 1e-11 * totals[1].max(1.0) {
            break;
        }
        let mut best_move: Option<([Vec<f64>; 2], f64)> = None;
        for code in 0..stencil_size {
            let mut c = code;
            let mut cand = point.clone();
            let mut moved = false;
            for d in 0..dims {
                let offset = (c % 3) as f64 - 1.0;
                c /= 3;
                if offset != 0.0 {
                    let (node, slot) = (d / free, d % free);
                    cand[node][slot] += offset * step[node];
                    cand[node][t - 1] -= offset * step[node];
                    moved = true;
                }
            }
            if !moved || !causal_full(&cand[0], &cum[0]) || !causal_full(&cand[1], &cum[1]) {
                continue;
            }
            let v = objective_of(&cand[0], &cand[1], params);
            evaluations += 1;
            if v < best_move.as_ref().map_or(value, |b| b.1) {
                best_move = Some((cand, v));
            }
        }
        match best_move {
            Some((cand, v)) => {
                point = cand;
                value = v;
            }
            None => {
                step[0] *= 0.5;
                step[1] *= 0.5;
            }
        }
    }
    let [p1, p2] = point;
    Ok(OracleSolution {
        p1: PowerSchedule::new(p1.into_iter().map(|v| v.max(0.0)).collect())?,
        p2: PowerSchedule::new(p2.into_iter().map(|v| v.max(0.0)).collect())?,
        objective: value,
        evaluations,
    })
}

fn descent(e1: &EnergyTrace, e2: &EnergyTrace, params: &SystemParams) -> Result<OracleSolution> {
    let t = e1.len();
    // start from spending arrivals as they come: causal and full-spend
    let mut p = [e1.as_slice().to_vec(), e2.as_slice().to_vec()];
    let cum = [e1.cumulative(), e2.cumulative()];
    let mut evaluations = 0usize;
    let slot_cost = |p: &[Vec<f64>; 2], s: usize| weighted_distortion_at_power(p[0][s], p[1][s], params).value;
    let mut value = objective_of(&p[0], &p[1], params);

    for _ in 0..20_000 {
        let start = value;
        for node in 0..2 {
            for a in 0..t {
                for b in a + 1..t {
                    // moving `m` from slot a to slot b; negative m moves energy earlier
                    let mut spent = 0.0;
                    let mut min_slack = f64::INFINITY;
                    for s in 0..b {
                        spent += p[node][s];
                        if s >= a {
                            min_slack = min_slack.min(cum[node][s] - spent);
                        }
                    }
                    let hi = p[node][a];
                    let lo = -(p[node][b].min(min_slack.max(0.0)));
                    if hi - lo <= 1e-15 {
                        continue;
                    }
                    let base = slot_cost(&p, a) + slot_cost(&p, b);
                    let mut trial = p.clone();
                    let (pa, pb) = (p[node][a], p[node][b]);
                    let mut pair_cost = |m: f64| {
                        trial[node][a] = (pa - m).max(0.0);
                        trial[node][b] = (pb + m).max(0.0);
                        slot_cost(&trial, a) + slot_cost(&trial, b)
                    };
                    let (m, v) = golden_min(&mut pair_cost, lo, hi, 1e-13 * (hi - lo).max(1.0));
                    evaluations += 1;
                    if v < base {
                        p[node][a] = (pa - m).max(0.0);
                        p[node][b] = (pb + m).max(0.0);
                    }
                }
            }
        }
        value = objective_of(&p[0], &p[1], params);
        if start - value <= 1e-15 * value.max(1.0) {
            break;
        }
    }
    let [p1, p2] = p;
    let (p1, p2) = (PowerSchedule::new(p1)?, PowerSchedule::new(p2)?);
    let objective = total_distortion(&p1, &p2, params);
    Ok(OracleSolution { p1, p2, objective, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_respects_causality() {
        let e = EnergyTrace::new(vec![1.0, 0.0, 3.0]).unwrap();
        let all = lattice_schedules(&e, 4);
        assert!(!all.is_empty());
        for p in &all {
            assert!(PowerSchedule::new(p.clone()).unwrap().is_causal(&e, 1e-12));
            assert!((p.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        }
    }
}
