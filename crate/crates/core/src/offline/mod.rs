//! Offline power control: the whole energy arrival trace is known in advance.

mod directional;
mod gbwf;
mod kkt;
mod oracle;
mod structure;

pub use directional::{directional_bands, directional_wf_single, Band};
pub use gbwf::{
    backward_wf_blocks, backward_wf_pass, iterative_gbwf, total_distortion, GbwfOptions, GbwfSolution,
    IterationRecord, WaterBlock,
};
pub use kkt::{eta_one_closed_form, kkt_multipliers, marginal_gain, water_level, water_levels, KktMultipliers};
pub use oracle::{offline_oracle, OracleMode, OracleSolution};
pub use structure::{verify_structure, BandLevel, StructureReport, StructureTolerance, Violation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Causality slack tolerated by [`PowerSchedule::is_causal`].
pub const CAUSALITY_TOL: f64 = 1e-9;

/// Harvested energy per slot, energy units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EnergyTrace(Vec<f64>);

impl EnergyTrace {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.is_empty() {
            return Err(Error::InvalidParameter("energy trace must have at least one slot".into()));
        }
        if let Some(bad) = e.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("energy arrival {bad} must be finite and >= 0")));
        }
        Ok(EnergyTrace(e))
    }

    /// Reference node-1 arrivals.
    pub fn paper_node1() -> Self {
        EnergyTrace(vec![5.0, 6.0, 2.0, 4.0, 9.0, 2.0, 10.0, 8.0, 6.0, 7.0])
    }

    /// Reference node-2 arrivals.
    pub fn paper_node2() -> Self {
        EnergyTrace(vec![5.0, 10.0, 2.0, 9.0, 10.0, 9.0, 2.0, 4.0, 5.0, 9.0])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Running sums `e[0] + ... + e[t]`.
    pub fn cumulative(&self) -> Vec<f64> {
        running_sum(&self.0)
    }
}

impl TryFrom<Vec<f64>> for EnergyTrace {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        EnergyTrace::new(v)
    }
}

impl From<EnergyTrace> for Vec<f64> {
    fn from(e: EnergyTrace) -> Self {
        e.0
    }
}

/// Transmit power per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerSchedule(Vec<f64>);

impl PowerSchedule {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!("power {bad} must be finite and >= 0")));
        }
        Ok(PowerSchedule(p))
    }

    pub fn zeros(t: usize) -> Self {
        PowerSchedule(vec![0.0; t])
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        debug_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        PowerSchedule(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Unspent energy after each slot: cumulative arrivals minus cumulative power.
    pub fn slack(&self, e: &EnergyTrace) -> Vec<f64> {
        let ce = e.cumulative();
        let cp = running_sum(&self.0);
        ce.iter().zip(&cp).map(|(a, b)| a - b).collect()
    }

    /// Energy causality with absolute slack `tol`.
    pub fn is_causal(&self, e: &EnergyTrace, tol: f64) -> bool {
        self.len() == e.len() && self.slack(e).iter().all(|s| *s >= -tol)
    }
}

impl TryFrom<Vec<f64>> for PowerSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PowerSchedule::new(v)
    }
}

impl From<PowerSchedule> for Vec<f64> {
    fn from(p: PowerSchedule) -> Self {
        p.0
    }
}

fn running_sum(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}
