//! Reference policies: greedy spending and save-and-forward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offline::{EnergyTrace, PowerSchedule};
use crate::online::OnlinePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Greedy,
    SaveAndForward,
}

/// Length `h(T)` of the initial saving phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SavingRule {
    /// `ceil(sqrt(T))`.
    #[default]
    SqrtT,
    Fixed(usize),
}

impl SavingRule {
    pub fn slots(&self, t: usize) -> usize {
        match *self {
            SavingRule::SqrtT => (t as f64).sqrt().ceil() as usize,
            SavingRule::Fixed(h) => h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub horizon: usize,
    #[serde(default)]
    pub saving: SavingRule,
}

/// Spend the whole buffer.
pub fn greedy_action(i: usize, j: usize) -> (usize, usize) {
    (i, j)
}

/// Spend each arrival in the slot it arrives.
pub fn greedy_schedule(e: &EnergyTrace) -> PowerSchedule {
    PowerSchedule::new(e.as_slice().to_vec()).expect("arrivals are non-negative")
}

/// Greedy spending as an online policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl OnlinePolicy for Greedy {
    fn action(&self, i: usize, j: usize) -> (usize, usize) {
        greedy_action(i, j)
    }
}

/// Saves everything for `h(T)` slots, then spends the running mean arrival
/// scaled by `T / (T - h)`, clamped to the buffer; the last slot empties it.
pub fn save_and_forward(e: &EnergyTrace, rule: SavingRule) -> Result<PowerSchedule> {
    let t = e.len();
    if t < 4 {
        return Err(Error::InvalidParameter(format!("save-and-forward needs T >= 4, got {t}")));
    }
    let h = rule.slots(t);
    if h >= t {
        return Err(Error::InvalidParameter(format!("saving phase {h} must be shorter than T = {t}")));
    }
    let boost = t as f64 / (t - h) as f64;
    let mut p = vec![0.0; t];
    let mut buffer = 0.0;
    let mut arrived = 0.0;
    for (tau, &x) in e.as_slice().iter().enumerate() {
        buffer += x;
        arrived += x;
        if tau < h {
            continue;
        }
        let spend = if tau == t - 1 { buffer } else { (arrived / (tau + 1) as f64 * boost).min(buffer) };
        p[tau] = spend;
        buffer -= spend;
    }
    PowerSchedule::new(p)
}

pub fn baseline_schedule(e: &EnergyTrace, spec: &BaselineSpec) -> Result<PowerSchedule> {
    if spec.horizon != e.len() {
        return Err(Error::InvalidParameter(format!(
            "spec horizon {} does not match trace length {}",
            spec.horizon,
            e.len()
        )));
    }
    match spec.kind {
        BaselineKind::Greedy => Ok(greedy_schedule(e)),
        BaselineKind::SaveAndForward => save_and_forward(e, spec.saving),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_action(3, 5), (3, 5));
        let e = EnergyTrace::new(vec![5.0, 6.0, 2.0]).unwrap();
        assert_eq!(greedy_schedule(&e).as_slice(), &[5.0, 6.0, 2.0]);
    }

    #[test]
    fn constant_arrivals_boosted() {
        let t = 16;
        let e = EnergyTrace::new(vec![2.0; t]).unwrap();
        let p = save_and_forward(&e, SavingRule::SqrtT).unwrap();
        let h = 4;
        let expected = 2.0 * t as f64 / (t - h) as f64;
        assert!(p.as_slice()[..h].iter().all(|&v| v == 0.0));
        for &v in &p.as_slice()[h..] {
            assert!((v - expected).abs() < 1e-12);
        }
        assert!(p.is_causal(&e, 1e-12));
    }

    #[test]
    fn no_saving_is_running_mean() {
        let e = EnergyTrace::new(vec![1.0, 5.0, 0.0, 2.0, 4.0]).unwrap();
        let p = save_and_forward(&e, SavingRule::Fixed(0)).unwrap();
        let mut buffer = 0.0;
        let mut sum = 0.0;
        for (k, (&x, &q)) in e.as_slice().iter().zip(p.as_slice()).enumerate() {
            buffer += x;
            sum += x;
            let want = if k == 4 { buffer } else { (sum / (k + 1) as f64).min(buffer) };
            assert!((q - want).abs() < 1e-12);
            buffer -= q;
        }
    }

    #[test]
    fn short_horizon_rejected() {
        let e = EnergyTrace::new(vec![1.0; 3]).unwrap();
        assert!(save_and_forward(&e, SavingRule::SqrtT).is_err());
        let e = EnergyTrace::new(vec![1.0; 5]).unwrap();
        assert!(save_and_forward(&e, SavingRule::Fixed(5)).is_err());
    }
}
