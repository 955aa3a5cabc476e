use serde::Serialize;

use super::kkt::water_levels;
use super::{EnergyTrace, PowerSchedule};
use crate::model::{Node, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureTolerance {
    /// Unspent energy at or below this marks a depletion slot.
    pub slack: f64,
    /// Relative spread allowed among the water levels of one band.
    pub level_rel: f64,
    /// Absolute power change ignored by the rise/fall checks.
    pub power: f64,
}

impl Default for StructureTolerance {
    fn default() -> Self {
        StructureTolerance { slack: 1e-7, level_rel: 1e-4, power: 1e-7 }
    }
}

/// Slots `start..end` of one node between consecutive depletions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandLevel {
    pub start: usize,
    pub end: usize,
    /// Mean water level over the band's powered slots (NaN if none).
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Water level changes inside a band.
    LevelJump { node: usize, slot: usize, from: f64, to: f64 },
    /// Water level drops from one band to the next.
    LevelDrop { node: usize, slot: usize, from: f64, to: f64 },
    /// Power does not rise after the node's own depletion.
    NoRiseAfterOwnDepletion { node: usize, slot: usize },
    /// Power does not fall after the other node's depletion.
    NoFallAfterOtherDepletion { node: usize, slot: usize },
    /// Schedule spends energy it has not harvested yet.
    Causality { node: usize, slot: usize, slack: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub bands: [Vec<BandLevel>; 2],
    pub depletion_slots: [Vec<usize>; 2],
    /// Per-slot generalized water level of each node.
    pub levels: [Vec<f64>; 2],
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the optimal-schedule structure: constant water level between
/// depletions, non-decreasing across them, power rising after the node's own
/// depletion and falling after the other node's.
pub fn verify_structure(
    p1: &PowerSchedule,
    p2: &PowerSchedule,
    e1: &EnergyTrace,
    e2: &EnergyTrace,
    params: &SystemParams,
    tol: &StructureTolerance,
) -> StructureReport {
    let t = e1.len();
    let p = [p1, p2];
    let e = [e1, e2];
    let levels = [water_levels(Node::One, p1, p2, params), water_levels(Node::Two, p2, p1, params)];
    let mut violations = Vec::new();
    let mut depleted = [vec![false; t], vec![false; t]];
    let mut depletion_slots: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        for (s, slack) in p[k].slack(e[k]).into_iter().enumerate() {
            if slack < -tol.slack {
                violations.push(Violation::Causality { node: k + 1, slot: s, slack });
            }
            if slack <= tol.slack {
                depleted[k][s] = true;
                depletion_slots[k].push(s);
            }
        }
    }

    let mut bands: [Vec<BandLevel>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        let powers = p[k].as_slice();
        let mut start = 0;
        for (s, &dep) in depleted[k].iter().enumerate().take(t) {
            if dep || s == t - 1 {
                let powered: Vec<usize> = (start..=s).filter(|&i| powers[i] > tol.power).collect();
                let level = if powered.is_empty() {
                    f64::NAN
                } else {
                    powered.iter().map(|&i| levels[k][i]).sum::<f64>() / powered.len() as f64
                };
                for w in powered.windows(2) {
                    let (a, b) = (levels[k][w[0]], levels[k][w[1]]);
                    if (a - b).abs() > tol.level_rel * a.abs().max(b.abs()) {
                        violations.push(Violation::LevelJump { node: k + 1, slot: w[1], from: a, to: b });
                    }
                }
                bands[k].push(BandLevel { start, end: s + 1, level });
                start = s + 1;
            }
        }
        let mut prev: Option<(f64, usize)> = None;
        for b in &bands[k] {
            if b.level.is_nan() {
                continue;
            }
            if let Some((lvl, _)) = prev {
                if b.level < lvl * (1.0 - tol.level_rel) {
                    violations.push(Violation::LevelDrop { node: k + 1, slot: b.start, from: lvl, to: b.level });
                }
            }
            prev = Some((b.level, b.start));
        }
    }

    for k in 0..2 {
        let o = 1 - k;
        let powers = p[k].as_slice();
        for s in 0..t.saturating_sub(1) {
            if depleted[k][s] && depleted[o][s] {
                continue;
            }
            if depleted[k][s] && powers[s + 1] < powers[s] - tol.power {
                violations.push(Violation::NoRiseAfterOwnDepletion { node: k + 1, slot: s });
            }
            if depleted[o][s] && !depleted[k][s] && powers[s + 1] > powers[s] + tol.power {
                violations.push(Violation::NoFallAfterOtherDepletion { node: k + 1, slot: s });
            }
        }
    }

    StructureReport { bands, depletion_slots, levels, violations }
}
