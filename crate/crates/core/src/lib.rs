//! Transmit-power control for two energy-harvesting sensors that send
//! correlated Gaussian sources to a common fusion center.
//!
//! * [`model`]: rate-distortion region and the minimum weighted-sum distortion.
//! * [`offline`]: schedules for a known arrival trace (water-filling).
//! * [`online`]: stationary policies for random arrivals (value iteration).
//! * [`baselines`]: greedy and save-and-forward reference policies.
//! * [`sim`]: seeded Monte Carlo evaluation.

pub mod baselines;
pub mod error;
pub mod model;
pub mod offline;
pub mod online;
mod roots;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    brute_force_min_distortion, channel_rate, distortion_bounds, g_threshold, min_weighted_distortion,
    power_for_rate, region_contains, Branch, DistortionBounds, DistortionPoint, Node, RatePair, SystemParams,
    WeightedDistortion,
};
pub use offline::{EnergyTrace, PowerSchedule};
pub use online::{CostVector, OnlineModel, OnlinePolicy, PolicyTable, StateIndex, TransferMatrix};
