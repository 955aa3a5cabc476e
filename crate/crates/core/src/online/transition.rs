use nalgebra::DMatrix;
use serde::Serialize;

use super::{OnlineModel, PolicyTable};
use crate::error::{Error, Result};

/// Distribution of the per-slot harvest on `{1, ..., emax}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarvestPmf {
    /// `probs[k]` is the probability of harvesting `k + 1` quanta.
    probs: Vec<f64>,
}

impl HarvestPmf {
    pub fn uniform(emax: usize) -> Self {
        assert!(emax >= 1, "emax must be at least 1");
        HarvestPmf { probs: vec![1.0 / emax as f64; emax] }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter("harvest probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("harvest probabilities sum to {total}")));
        }
        Ok(HarvestPmf { probs })
    }

    pub fn emax(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Next-level distribution of one buffer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTransition {
    /// `probs[l - 1]` is the probability of ending at level `l`.
    pub probs: Vec<f64>,
    /// Probability that the harvest is partly discarded at the cap.
    pub overflow: f64,
}

fn check_action(i: usize, p: usize, cap: usize) -> Result<()> {
    if p < 1 || p > i || i > cap {
        return Err(Error::Domain(format!("action {p} infeasible at level {i} with capacity {cap}")));
    }
    Ok(())
}

/// Enumerates harvests `1..=emax` and tallies `min(i - p + e, cap)`.
///
/// Returns counts per level (index `l - 1`) and the number of harvests that overflow.
pub fn node_transition_counts(i: usize, p: usize, emax: usize, cap: usize) -> Result<(Vec<usize>, usize)> {
    check_action(i, p, cap)?;
    let mut counts = vec![0usize; cap];
    let mut overflow = 0;
    for e in 1..=emax {
        let raw = i - p + e;
        if raw > cap {
            overflow += 1;
        }
        counts[raw.min(cap) - 1] += 1;
    }
    Ok((counts, overflow))
}

/// Closed-form number of harvests that end at the cap: `max(0, i - p + emax - cap + 1)`.
pub fn cap_mass_closed_form(i: usize, p: usize, emax: usize, cap: usize) -> usize {
    (i + emax + 1).saturating_sub(p + cap)
}

/// Uniform-harvest transition of one buffer.
pub fn node_transition(i: usize, p: usize, emax: usize, cap: usize) -> Result<NodeTransition> {
    let (counts, overflow) = node_transition_counts(i, p, emax, cap)?;
    let n = emax as f64;
    Ok(NodeTransition {
        probs: counts.iter().map(|&c| c as f64 / n).collect(),
        overflow: overflow as f64 / n,
    })
}

/// Transition of one buffer under an arbitrary harvest distribution.
pub fn node_transition_pmf(i: usize, p: usize, pmf: &HarvestPmf, cap: usize) -> Result<NodeTransition> {
    check_action(i, p, cap)?;
    let mut probs = vec![0.0; cap];
    let mut overflow = 0.0;
    for (k, &q) in pmf.probs().iter().enumerate() {
        let raw = i - p + k + 1;
        if raw > cap {
            overflow += q;
        }
        probs[raw.min(cap) - 1] += q;
    }
    Ok(NodeTransition { probs, overflow })
}

/// Row-stochastic matrix of the energy-state chain under a stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix(DMatrix<f64>);

impl TransferMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidParameter("transfer matrix must be square and non-empty".into()));
        }
        for r in 0..m.nrows() {
            let row = m.row(r);
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(format!("row {r} has entries outside [0, 1]")));
            }
            if (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("row {r} sums to {}", row.sum())));
            }
        }
        Ok(TransferMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.0[(s, t)]
    }
}

/// `q_st = Pr{i -> i'} Pr{j -> j'}` under the policy's action in `s`.
pub fn transfer_matrix(rho: &PolicyTable, model: &OnlineModel) -> Result<TransferMatrix> {
    rho.matches(model)?;
    let n = model.num_states();
    let (l1, l2) = (model.l1(), model.l2());
    let pmf1 = model.harvest(crate::model::Node::One);
    let pmf2 = model.harvest(crate::model::Node::Two);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        let (i, j) = model.levels(s);
        let (p1, p2) = rho.actions()[s];
        let a = node_transition_pmf(i, p1, &pmf1, l1)?;
        let b = node_transition_pmf(j, p2, &pmf2, l2)?;
        for (ii, &qa) in a.probs.iter().enumerate() {
            if qa == 0.0 {
                continue;
            }
            for (jj, &qb) in b.probs.iter().enumerate() {
                m[(s, ii * l2 + jj)] = qa * qb;
            }
        }
    }
    Ok(TransferMatrix(m))
}
