//! Online power control: arrivals are random integers, buffers are finite and
//! the policy sees only the current buffer levels.

mod bellman;
mod evaluate;
mod transition;

pub use bellman::{
    bellman_t, feasible_actions, state_distortion, value_iteration, BellmanOperator, DistortionTable, IterationError,
    ValueIteration, ViOptions,
};
pub use evaluate::{
    closed_class_count, expected_distortion, optimal_values_by_enumeration, overflow_probability,
    policy_distortion, policy_value_exact, stationary_by_power_iteration, stationary_distribution,
};
pub use transition::{
    cap_mass_closed_form, node_transition, node_transition_counts, node_transition_pmf, transfer_matrix,
    HarvestPmf, NodeTransition, TransferMatrix,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Node, SystemParams};

/// Buffer sizes, harvest ranges and cost weighting of the online problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct OnlineModel {
    l1: usize,
    l2: usize,
    e1max: usize,
    e2max: usize,
    alpha: f64,
    delta: f64,
    params: SystemParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    l1: usize,
    l2: usize,
    e1max: usize,
    e2max: usize,
    alpha: f64,
    #[serde(default = "unit_delta")]
    delta: f64,
    params: SystemParams,
}

fn unit_delta() -> f64 {
    1.0
}

impl TryFrom<RawModel> for OnlineModel {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        OnlineModel::new(r.l1, r.l2, r.e1max, r.e2max, r.alpha, r.delta, r.params)
    }
}

impl From<OnlineModel> for RawModel {
    fn from(m: OnlineModel) -> Self {
        RawModel { l1: m.l1, l2: m.l2, e1max: m.e1max, e2max: m.e2max, alpha: m.alpha, delta: m.delta, params: m.params }
    }
}

impl OnlineModel {
    pub fn new(
        l1: usize,
        l2: usize,
        e1max: usize,
        e2max: usize,
        alpha: f64,
        delta: f64,
        params: SystemParams,
    ) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::InvalidParameter("buffer capacities must be at least 1".into()));
        }
        if e1max == 0 || e2max == 0 {
            return Err(Error::InvalidParameter("maximum harvest must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
        }
        Ok(OnlineModel { l1, l2, e1max, e2max, alpha, delta, params })
    }

    /// Desk-scale model: 12 x 12 buffers, harvests up to (5, 3), alpha = 0.95.
    pub fn ci(params: SystemParams) -> Self {
        OnlineModel { l1: 12, l2: 12, e1max: 5, e2max: 3, alpha: 0.95, delta: 1.0, params }
    }

    /// Full-size model: 30 x 30 buffers, harvests up to (8, 5), alpha = 0.99.
    pub fn paper_scale(params: SystemParams) -> Self {
        OnlineModel { l1: 30, l2: 30, e1max: 8, e2max: 5, alpha: 0.99, delta: 1.0, params }
    }

    pub fn l1(&self) -> usize {
        self.l1
    }
    pub fn l2(&self) -> usize {
        self.l2
    }
    pub fn e1max(&self) -> usize {
        self.e1max
    }
    pub fn e2max(&self) -> usize {
        self.e2max
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn capacity(&self, node: Node) -> usize {
        match node {
            Node::One => self.l1,
            Node::Two => self.l2,
        }
    }

    pub fn emax(&self, node: Node) -> usize {
        match node {
            Node::One => self.e1max,
            Node::Two => self.e2max,
        }
    }

    pub fn harvest(&self, node: Node) -> HarvestPmf {
        HarvestPmf::uniform(self.emax(node))
    }

    /// Number of energy states `L1 * L2`.
    pub fn num_states(&self) -> usize {
        self.l1 * self.l2
    }

    pub fn with_params(&self, params: SystemParams) -> Self {
        OnlineModel { params, ..self.clone() }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        OnlineModel::new(self.l1, self.l2, self.e1max, self.e2max, alpha, self.delta, self.params)
    }

    /// Same weighting and parameters with new buffers and harvest ranges.
    pub fn with_buffers(&self, l1: usize, l2: usize, e1max: usize, e2max: usize) -> Result<Self> {
        OnlineModel::new(l1, l2, e1max, e2max, self.alpha, self.delta, self.params)
    }

    pub fn encode(&self, i: usize, j: usize) -> StateIndex {
        StateIndex::encode(i, j, self.l2)
    }

    pub fn decode(&self, s: StateIndex) -> (usize, usize) {
        s.decode(self.l2)
    }

    /// Zero-based position of state `(i, j)` in value and policy vectors.
    pub fn position(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.l2 + (j - 1)
    }

    /// Levels `(i, j)` of the zero-based position `k`.
    pub fn levels(&self, k: usize) -> (usize, usize) {
        (k / self.l2 + 1, k % self.l2 + 1)
    }
}

/// One-based energy state `s = (i - 1) L2 + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex(usize);

impl StateIndex {
    pub fn new(s: usize, model: &OnlineModel) -> Result<Self> {
        if s == 0 || s > model.num_states() {
            return Err(Error::Domain(format!("state {s} outside [1, {}]", model.num_states())));
        }
        Ok(StateIndex(s))
    }

    pub fn encode(i: usize, j: usize, l2: usize) -> Self {
        StateIndex((i - 1) * l2 + j)
    }

    /// `(ceil(s / L2), s mod L2)` with a zero remainder mapped to `L2`.
    pub fn decode(self, l2: usize) -> (usize, usize) {
        let s = self.0;
        let i = s.div_ceil(l2);
        let r = s % l2;
        let j = if r == 0 { l2 } else { r };
        (i, j)
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

/// Stationary policy: one action `(p1, p2)` in quanta per energy state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTable {
    l1: usize,
    l2: usize,
    actions: Vec<(usize, usize)>,
}

impl PolicyTable {
    /// Checks `1 <= p1 <= i` and `1 <= p2 <= j` in every state.
    pub fn new(model: &OnlineModel, actions: Vec<(usize, usize)>) -> Result<Self> {
        if actions.len() != model.num_states() {
            return Err(Error::InvalidParameter(format!(
                "policy has {} actions for {} states",
                actions.len(),
                model.num_states()
            )));
        }
        for (k, &(p1, p2)) in actions.iter().enumerate() {
            let (i, j) = model.levels(k);
            if p1 < 1 || p1 > i || p2 < 1 || p2 > j {
                return Err(Error::InfeasibleAction { i, j, p1, p2 });
            }
        }
        Ok(PolicyTable { l1: model.l1, l2: model.l2, actions })
    }

    /// Spend everything in every state.
    pub fn greedy(model: &OnlineModel) -> Self {
        let actions = (0..model.num_states()).map(|k| model.levels(k)).collect();
        PolicyTable { l1: model.l1, l2: model.l2, actions }
    }

    pub fn action(&self, i: usize, j: usize) -> (usize, usize) {
        self.actions[(i - 1) * self.l2 + (j - 1)]
    }

    pub fn actions(&self) -> &[(usize, usize)] {
        &self.actions
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.l1, self.l2)
    }

    pub(crate) fn matches(&self, model: &OnlineModel) -> Result<()> {
        if self.l1 != model.l1 || self.l2 != model.l2 {
            return Err(Error::InvalidParameter(format!(
                "policy is for {}x{} buffers, model has {}x{}",
                self.l1, self.l2, model.l1, model.l2
            )));
        }
        Ok(())
    }
}

/// Anything that picks an action from the current buffer levels.
pub trait OnlinePolicy: Sync {
    fn action(&self, i: usize, j: usize) -> (usize, usize);
}

impl OnlinePolicy for PolicyTable {
    fn action(&self, i: usize, j: usize) -> (usize, usize) {
        PolicyTable::action(self, i, j)
    }
}

/// Per-state cost values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("cost values must be finite".into()));
        }
        Ok(CostVector(v))
    }

    pub fn zeros(n: usize) -> Self {
        CostVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sup_distance(&self, other: &CostVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
