//! Flat key/value run configuration.
//!
//! ```toml
//! schema_version = 1
//! scenario = "ORPNN-MF(P)-PF"
//! seed = 7
//! j_max = 40000
//! l_min = 3
//! ```
//!
//! Every key except `schema_version` is optional; missing keys keep their
//! defaults. `echo` writes the complete resolved config back in the same format.

use std::path::Path;

use pnn_core::network::ForwardMode;
use pnn_core::plasticity::{MemoryMode, PlasticityMode};
use pnn_core::signal::SignalKind;
use pnn_core::trainer::{RangeMode, Resample, Scenario, SimpleMode, TrainingConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_min: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_mode: Option<RangeMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_mode: Option<MemoryMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plasticity_mode: Option<PlasticityMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phagocytic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simple_mode: Option<SimpleMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_mode: Option<ForwardMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample: Option<Resample>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_weights: Option<[f64; 2]>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive_capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restore_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_signs: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_init_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_weights: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanishing_window: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<Option<Scenario>> {
        self.scenario
            .as_deref()
            .map(|s| s.parse::<Scenario>().map_err(HarnessError::from))
            .transpose()
    }

    /// Applies the scenario preset, then every explicit key, to `base`. The
    /// result is normalized and validated.
    pub fn apply(&self, base: TrainingConfig) -> Result<TrainingConfig> {
        let mut c = match self.scenario()? {
            Some(s) => s.configure(base),
            None => base,
        };
        macro_rules! set {
            ($($key:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$key.clone() { c.$($field).+ = v; })*
            };
        }
        if let Some(j_max) = self.j_max {
            c = c.with_iterations(j_max);
        }
        set! {
            seed => seed,
            base_rate => base_rate,
            checkpoints => checkpoints,
            m_max => layout.m_max,
            k_max => layout.k_max,
            l_max => layout.l_max,
            l_min => layout.l_min,
            signal => signal.kind,
            amplitude => signal.amplitude,
            period => signal.period,
            period_end => signal.period_end,
            signal_length => signal.length,
            phase => signal.phase,
            range_mode => range_mode,
            memory_mode => memory_mode,
            plasticity_mode => plasticity_mode,
            phagocytic => phagocytic,
            simple_mode => simple_mode,
            forward_mode => forward_mode,
            resample => resample,
            memory_decay => factors.memory_decay,
            beta => factors.beta,
            window_length => factors.window_length,
            archive_capacity => archive_capacity,
            restore_ratio => restore_ratio,
            literal_signs => literal_signs,
            weight_init_scale => weight_init_scale,
            train_weights => train_weights,
            vanishing_window => vanishing_window,
        }
        if let Some([a, b]) = self.quantum_weights {
            c.factors.quantum_weights = (a, b);
        }
        let c = c.normalized();
        c.validate()?;
        Ok(c)
    }

    /// The complete resolved config.
    pub fn echo(config: &TrainingConfig, scenario: Option<Scenario>) -> Self {
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.map(|s| s.name().to_string()),
            seed: Some(config.seed),
            j_max: Some(config.j_max),
            base_rate: Some(config.base_rate),
            checkpoints: Some(config.checkpoints.clone()),
            m_max: Some(config.layout.m_max),
            k_max: Some(config.layout.k_max),
            l_max: Some(config.layout.l_max),
            l_min: Some(config.layout.l_min),
            signal: Some(config.signal.kind),
            amplitude: Some(config.signal.amplitude),
            period: Some(config.signal.period),
            period_end: Some(config.signal.period_end),
            signal_length: Some(config.signal.length),
            phase: Some(config.signal.phase),
            range_mode: Some(config.range_mode),
            memory_mode: Some(config.memory_mode),
            plasticity_mode: Some(config.plasticity_mode),
            phagocytic: Some(config.phagocytic),
            simple_mode: Some(config.simple_mode),
            forward_mode: Some(config.forward_mode),
            resample: Some(config.resample),
            memory_decay: Some(config.factors.memory_decay),
            beta: Some(config.factors.beta),
            window_length: Some(config.factors.window_length),
            quantum_weights: Some([config.factors.quantum_weights.0, config.factors.quantum_weights.1]),
            archive_capacity: Some(config.archive_capacity),
            restore_ratio: Some(config.restore_ratio),
            literal_signs: Some(config.literal_signs),
            weight_init_scale: Some(config.weight_init_scale),
            train_weights: Some(config.train_weights),
            vanishing_window: Some(config.vanishing_window),
        }
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let file = ConfigFile::parse("schema_version = 1\n").unwrap();
        assert_eq!(file.apply(TrainingConfig::default()).unwrap(), TrainingConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(ConfigFile::parse("schema_version = 1\nlmin = 3\n").is_err());
        assert!(ConfigFile::parse("schema_version = 2\n").is_err());
        assert!(ConfigFile::parse("seed = 2\n").is_err());
        let bad = ConfigFile::parse("schema_version = 1\nscenario = \"XRPNN\"\n").unwrap();
        assert!(bad.apply(TrainingConfig::default()).is_err());
        let bad = ConfigFile::parse("schema_version = 1\nl_min = 9\n").unwrap();
        assert!(matches!(bad.apply(TrainingConfig::default()), Err(HarnessError::Core(_))));
    }

    #[test]
    fn scenario_then_overrides() {
        let text = r#"
schema_version = 1
scenario = "orpnn-mf(p&n)-pf"
seed = 42
j_max = 800
l_min = 3
signal = "variable-cycle-cosine"
forward_mode = "free-running"
memory_decay = 6.5
restore_ratio = inf
"#;
        let c = ConfigFile::parse(text).unwrap().apply(TrainingConfig::default()).unwrap();
        assert_eq!(c.memory_mode, MemoryMode::PositiveNegative);
        assert_eq!(c.plasticity_mode, PlasticityMode::Best);
        assert!(c.phagocytic);
        assert_eq!(c.seed, 42);
        assert_eq!(c.checkpoints, vec![200, 400, 600, 800]);
        assert_eq!(c.layout.l_min, 3);
        assert_eq!(c.signal.kind, SignalKind::VariableCycleCosine);
        assert_eq!(c.forward_mode, ForwardMode::FreeRunning);
        assert_eq!(c.factors.memory_decay, 6.5);
        assert!(c.restore_ratio.is_infinite());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = Scenario::SimplePfCorrected.configure(TrainingConfig::default().with_iterations(1000));
        c.restore_ratio = f64::INFINITY;
        c.factors.quantum_weights = (0.5, 2.0);
        let text = ConfigFile::echo(&c, Some(Scenario::SimplePfCorrected)).to_text().unwrap();
        let back = ConfigFile::parse(&text).unwrap().apply(TrainingConfig::default()).unwrap();
        assert_eq!(back, c);
    }
}
