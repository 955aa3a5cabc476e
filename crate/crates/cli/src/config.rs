//! Experiment configuration: a JSON file, optionally overlaid with the
//! reference constants by `--paper-defaults`.

use std::path::Path;

use ehpc_core::offline::EnergyTrace;
use ehpc_core::online::OnlineModel;
use ehpc_core::SystemParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// 12 x 12 buffers, harvests up to (5, 3), alpha = 0.95.
    #[default]
    Ci,
    /// 30 x 30 buffers, harvests up to (8, 5), alpha = 0.99.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    #[default]
    None,
    Exhaustive,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    Offline,
    Online,
    Greedy,
    #[serde(rename = "saveforward")]
    SaveForward,
}

impl PolicyChoice {
    pub const ALL: [PolicyChoice; 4] =
        [PolicyChoice::Offline, PolicyChoice::Online, PolicyChoice::Greedy, PolicyChoice::SaveForward];

    pub fn name(self) -> &'static str {
        match self {
            PolicyChoice::Offline => "offline",
            PolicyChoice::Online => "online",
            PolicyChoice::Greedy => "greedy",
            PolicyChoice::SaveForward => "saveforward",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traces {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

/// Buffer model fields; anything left out comes from the chosen scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub l1: Option<usize>,
    pub l2: Option<usize>,
    pub e1max: Option<usize>,
    pub e2max: Option<usize>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub gbwf_eps: f64,
    pub gbwf_max_iter: usize,
    pub vi_eps: f64,
    pub oracle: OracleChoice,
    /// Lattice resolution of the exhaustive oracle.
    pub oracle_grid: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { gbwf_eps: 1e-6, gbwf_max_iter: 500, vi_eps: 1e-3, oracle: OracleChoice::None, oracle_grid: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub horizon: usize,
    pub runs: usize,
    pub burn_in: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { horizon: 10_000, runs: 50, burn_in: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSettings {
    pub sqrt_eta: Vec<f64>,
    /// Episode length; every policy sees the same arrivals from full buffers.
    pub horizon: usize,
    pub runs: usize,
    pub policies: Vec<PolicyChoice>,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings { sqrt_eta: vec![0.3, 0.5, 0.7, 0.9], horizon: 200, runs: 16, policies: PolicyChoice::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverflowSettings {
    /// Common capacity `L1 = L2 = L` values.
    pub capacities: Vec<usize>,
    pub e1max: usize,
    pub e2max: usize,
    pub mc_horizon: usize,
    pub mc_runs: usize,
}

impl Default for OverflowSettings {
    fn default() -> Self {
        OverflowSettings { capacities: (4..=14).collect(), e1max: 8, e2max: 6, mc_horizon: 20_000, mc_runs: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "SystemParams::paper_defaults")]
    pub params: SystemParams,
    #[serde(default)]
    pub traces: Option<Traces>,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub simulation: SimSettings,
    #[serde(default)]
    pub compare: CompareSettings,
    #[serde(default)]
    pub overflow: OverflowSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::paper_defaults(),
            traces: None,
            scale: Scale::default(),
            model: ModelOverrides::default(),
            solver: SolverSettings::default(),
            seed: 0,
            simulation: SimSettings::default(),
            compare: CompareSettings::default(),
            overflow: OverflowSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))
    }

    /// Reference constants: eta = 0.7, w = (0.3, 0.7), h = (0.8, 0.5),
    /// alpha = 0.99, delta = 1 and the two ten-slot arrival sequences.
    pub fn apply_paper_defaults(&mut self) {
        self.params = SystemParams::paper_defaults();
        self.traces = Some(Traces {
            e1: EnergyTrace::paper_node1().as_slice().to_vec(),
            e2: EnergyTrace::paper_node2().as_slice().to_vec(),
        });
        self.model.alpha = Some(0.99);
        self.model.delta = Some(1.0);
    }

    pub fn energy_traces(&self) -> Result<(EnergyTrace, EnergyTrace), CliError> {
        let t = self
            .traces
            .as_ref()
            .ok_or_else(|| CliError::Config("no energy traces: give `traces` or --paper-defaults".into()))?;
        if t.e1.len() != t.e2.len() {
            return Err(CliError::Config(format!("traces differ in length ({} vs {})", t.e1.len(), t.e2.len())));
        }
        let e1 = EnergyTrace::new(t.e1.clone()).map_err(CliError::config)?;
        let e2 = EnergyTrace::new(t.e2.clone()).map_err(CliError::config)?;
        Ok((e1, e2))
    }

    pub fn online_model(&self) -> Result<OnlineModel, CliError> {
        let base = match self.scale {
            Scale::Ci => OnlineModel::ci(self.params),
            Scale::Paper => OnlineModel::paper_scale(self.params),
        };
        let m = &self.model;
        OnlineModel::new(
            m.l1.unwrap_or(base.l1()),
            m.l2.unwrap_or(base.l2()),
            m.e1max.unwrap_or(base.e1max()),
            m.e2max.unwrap_or(base.e2max()),
            m.alpha.unwrap_or(base.alpha()),
            m.delta.unwrap_or(base.delta()),
            self.params,
        )
        .map_err(CliError::config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_params_are_config_errors() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"bogus": 1}"#), Err(CliError::Config(_))));
        let bad = r#"{"params": {"eta": 0.5, "w1": 0.8, "w2": 0.2, "h1": 1, "h2": 1}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(CliError::Config(_))));
    }

    #[test]
    fn paper_defaults_fill_traces_and_discount() {
        let mut c = ExperimentConfig::default();
        assert!(c.energy_traces().is_err());
        c.apply_paper_defaults();
        let (e1, _) = c.energy_traces().unwrap();
        assert_eq!(e1.len(), 10);
        assert_eq!(c.online_model().unwrap().alpha(), 0.99);
    }

    #[test]
    fn overrides_apply_on_top_of_scale() {
        let c = ExperimentConfig::from_json(r#"{"scale": "paper", "model": {"l1": 4}}"#).unwrap();
        let m = c.online_model().unwrap();
        assert_eq!((m.l1(), m.l2(), m.e1max()), (4, 30, 8));
    }
}
