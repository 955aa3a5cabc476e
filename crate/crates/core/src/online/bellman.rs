use rayon::prelude::*;
use serde::Serialize;

use super::{CostVector, OnlineModel, PolicyTable, StateIndex};
use crate::error::{Error, Result};
use crate::model::{weighted_distortion_at_power, Node};

/// Actions `{1..i} x {1..j}` available in state `s`.
pub fn feasible_actions(s: StateIndex, model: &OnlineModel) -> Vec<(usize, usize)> {
    let (i, j) = model.decode(s);
    (1..=i).flat_map(|p1| (1..=j).map(move |p2| (p1, p2))).collect()
}

/// Weighted distortion when the nodes spend `(p1, p2)` quanta.
pub fn state_distortion(action: (usize, usize), model: &OnlineModel) -> Result<f64> {
    let (p1, p2) = action;
    if p1 == 0 || p2 == 0 {
        return Err(Error::Domain(format!("action ({p1}, {p2}) must be positive")));
    }
    let d = model.delta();
    Ok(weighted_distortion_at_power(p1 as f64 * d, p2 as f64 * d, model.params()).value)
}

/// `d(p1, p2)` for every action up to full buffers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionTable {
    l2: usize,
    values: Vec<f64>,
}

impl DistortionTable {
    pub fn new(model: &OnlineModel) -> Self {
        let (l1, l2) = (model.l1(), model.l2());
        let d = model.delta();
        let mut values = Vec::with_capacity(l1 * l2);
        for p1 in 1..=l1 {
            for p2 in 1..=l2 {
                values.push(weighted_distortion_at_power(p1 as f64 * d, p2 as f64 * d, model.params()).value);
            }
        }
        DistortionTable { l2, values }
    }

    pub fn get(&self, p1: usize, p2: usize) -> f64 {
        self.values[(p1 - 1) * self.l2 + (p2 - 1)]
    }
}

/// The cost mapping `T(v)(s) = min over actions of (1-alpha) d + alpha E[v(next)]`.
#[derive(Debug, Clone)]
pub struct BellmanOperator {
    model: OnlineModel,
    table: DistortionTable,
    pmf1: Vec<f64>,
    pmf2: Vec<f64>,
}

impl BellmanOperator {
    pub fn new(model: &OnlineModel) -> Self {
        BellmanOperator {
            model: model.clone(),
            table: DistortionTable::new(model),
            pmf1: model.harvest(Node::One).probs().to_vec(),
            pmf2: model.harvest(Node::Two).probs().to_vec(),
        }
    }

    pub fn model(&self) -> &OnlineModel {
        &self.model
    }

    pub fn table(&self) -> &DistortionTable {
        &self.table
    }

    /// `W[a][b] = E[v(min(a + e1, L1), min(b + e2, L2))]` for remainders `a`, `b`.
    fn expected_next(&self, v: &[f64]) -> Vec<f64> {
        let (l1, l2) = (self.model.l1(), self.model.l2());
        let mut inner = vec![0.0; l1 * l2];
        for lvl in 0..l1 {
            for b in 0..l2 {
                let mut acc = 0.0;
                for (k, q) in self.pmf2.iter().enumerate() {
                    let next = (b + k + 1).min(l2);
                    acc += q * v[lvl * l2 + next - 1];
                }
                inner[lvl * l2 + b] = acc;
            }
        }
        let mut w = vec![0.0; l1 * l2];
        for a in 0..l1 {
            for b in 0..l2 {
                let mut acc = 0.0;
                for (k, q) in self.pmf1.iter().enumerate() {
                    let next = (a + k + 1).min(l1);
                    acc += q * inner[(next - 1) * l2 + b];
                }
                w[a * l2 + b] = acc;
            }
        }
        w
    }

    /// Applies the mapping; ties go to the smallest `p1`, then the smallest `p2`.
    pub fn apply(&self, v: &CostVector) -> (CostVector, PolicyTable) {
        let l2 = self.model.l2();
        let alpha = self.model.alpha();
        let w = self.expected_next(v.as_slice());
        let results: Vec<(f64, (usize, usize))> = (0..self.model.num_states())
            .into_par_iter()
            .map(|k| {
                let (i, j) = self.model.levels(k);
                let mut best = f64::INFINITY;
                let mut arg = (1, 1);
                for p1 in 1..=i {
                    for p2 in 1..=j {
                        let c = (1.0 - alpha) * self.table.get(p1, p2) + alpha * w[(i - p1) * l2 + (j - p2)];
                        if c < best {
                            best = c;
                            arg = (p1, p2);
                        }
                    }
                }
                (best, arg)
            })
            .collect();
        let (values, actions): (Vec<f64>, Vec<(usize, usize)>) = results.into_iter().unzip();
        let policy = PolicyTable { l1: self.model.l1(), l2, actions };
        (CostVector(values), policy)
    }

    /// `(1-alpha) d_rho + alpha P_rho v` for a fixed policy.
    pub fn apply_policy(&self, v: &CostVector, rho: &PolicyTable) -> CostVector {
        let l2 = self.model.l2();
        let alpha = self.model.alpha();
        let w = self.expected_next(v.as_slice());
        let values = (0..self.model.num_states())
            .map(|k| {
                let (i, j) = self.model.levels(k);
                let (p1, p2) = rho.actions()[k];
                (1.0 - alpha) * self.table.get(p1, p2) + alpha * w[(i - p1) * l2 + (j - p2)]
            })
            .collect();
        CostVector(values)
    }
}

/// One application of the cost mapping.
pub fn bellman_t(v: &CostVector, model: &OnlineModel) -> Result<(CostVector, PolicyTable)> {
    if v.len() != model.num_states() {
        return Err(Error::InvalidParameter(format!(
            "cost vector has {} entries for {} states",
            v.len(),
            model.num_states()
        )));
    }
    Ok(BellmanOperator::new(model).apply(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViOptions {
    /// Stop once the summed absolute change of one iteration is at most `eps`.
    pub eps: f64,
    /// Starting vector; zeros when absent.
    pub v0: Option<CostVector>,
    /// Overrides the default iteration cap.
    pub max_iter: Option<usize>,
}

impl Default for ViOptions {
    fn default() -> Self {
        ViOptions { eps: 1e-3, v0: None, max_iter: None }
    }
}

/// Change between consecutive iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationError {
    pub sum_abs: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueIteration {
    pub values: CostVector,
    pub policy: PolicyTable,
    pub trace: Vec<IterationError>,
    pub iterations: usize,
}

/// Iterates the cost mapping until the summed absolute change is at most `eps`.
///
/// The default cap is `ceil(ln(eps / (L |v1 - v0|_inf)) / ln alpha) + 100`,
/// enough for the summed criterion on `L` states.
pub fn value_iteration(model: &OnlineModel, opts: &ViOptions) -> Result<ValueIteration> {
    let n = model.num_states();
    let mut v = match &opts.v0 {
        Some(v0) if v0.len() != n => {
            return Err(Error::InvalidParameter(format!("v0 has {} entries for {n} states", v0.len())));
        }
        Some(v0) => v0.clone(),
        None => CostVector::zeros(n),
    };
    if opts.eps.is_nan() || opts.eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let op = BellmanOperator::new(model);
    let mut trace = Vec::new();
    let mut cap = opts.max_iter.unwrap_or(usize::MAX);
    let mut iteration = 0;
    loop {
        iteration += 1;
        let (next, policy) = op.apply(&v);
        let err = distance(&next, &v);
        trace.push(err);
        v = next;
        if err.sum_abs <= opts.eps {
            return Ok(ValueIteration { values: v, policy, trace, iterations: iteration });
        }
        if iteration == 1 && opts.max_iter.is_none() {
            let ratio = opts.eps / (n as f64 * err.max_abs);
            let extra = (ratio.ln() / model.alpha().ln()).ceil().max(0.0) as usize;
            cap = extra + 100;
        }
        if iteration >= cap {
            return Err(Error::ValueIterationNotConverged {
                iterations: iteration,
                delta: err.sum_abs,
                values: v.into_inner(),
            });
        }
    }
}

fn distance(a: &CostVector, b: &CostVector) -> IterationError {
    let mut sum_abs = 0.0;
    let mut max_abs: f64 = 0.0;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        let d = (x - y).abs();
        sum_abs += d;
        max_abs = max_abs.max(d);
    }
    IterationError { sum_abs, max_abs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;

    #[test]
    fn action_sets() {
        let m = OnlineModel::new(5, 5, 2, 2, 0.9, 1.0, SystemParams::paper_defaults()).unwrap();
        assert_eq!(feasible_actions(m.encode(1, 1), &m), vec![(1, 1)]);
        assert_eq!(feasible_actions(m.encode(3, 2), &m).len(), 6);
        for s in 1..=m.num_states() {
            let idx = StateIndex::new(s, &m).unwrap();
            let (i, j) = m.decode(idx);
            assert_eq!(feasible_actions(idx, &m).len(), i * j);
        }
    }

    #[test]
    fn single_state_fixed_point() {
        let m = OnlineModel::new(1, 1, 1, 1, 0.9, 1.0, SystemParams::paper_defaults()).unwrap();
        let d = state_distortion((1, 1), &m).unwrap();
        let vi = value_iteration(&m, &ViOptions { eps: 1e-12, ..Default::default() }).unwrap();
        assert!((vi.values.as_slice()[0] - d).abs() < 1e-11);
        let start = ViOptions { eps: 1e-12, v0: Some(CostVector::new(vec![7.0]).unwrap()), max_iter: None };
        let vi = value_iteration(&m, &start).unwrap();
        assert!((vi.values.as_slice()[0] - d).abs() < 1e-11);
    }
}
