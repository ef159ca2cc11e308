//! Experiment config file (TOML). Every section is optional and falls back to
//! the defaults shown by `ris-inr print-config`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetMeta, GridSpec, SplitFractions};
use crate::error::{Error, Result};
use crate::field::GeometryConfig;
use crate::inr::train::Architecture;
use crate::inr::{Activation, LabelMode, PeConfig, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset seed (split permutation).
    pub seed: u64,
    pub scenario: GeometryConfig,
    pub grid: GridSpec,
    pub split: SplitFractions,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub ablate: AblationGrid,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dataset_meta(&self) -> DatasetMeta {
        DatasetMeta {
            seed: self.seed,
            geometry: self.scenario.clone(),
            grid: self.grid.clone(),
            split: self.split,
        }
    }
}

/// Model choices as written in config files; resolved into an
/// [`Architecture`] once the panel shape is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub positional_encoding: bool,
    pub base_freq: f64,
    pub levels: usize,
    /// Use the compressed `M + N - 1` bit label instead of all `M * N` bits.
    pub encoding: bool,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let pe = PeConfig::default();
        ModelConfig {
            positional_encoding: true,
            base_freq: pe.base_freq,
            levels: pe.levels,
            encoding: true,
            hidden_layers: 4,
            hidden_width: 128,
            activation: Activation::Relu,
        }
    }
}

impl ModelConfig {
    pub fn pe(&self) -> Option<PeConfig> {
        self.positional_encoding.then_some(PeConfig {
            base_freq: self.base_freq,
            levels: self.levels,
        })
    }

    pub fn labels(&self) -> LabelMode {
        if self.encoding {
            LabelMode::Encoded
        } else {
            LabelMode::Flat
        }
    }

    pub fn architecture(&self, rows: usize, cols: usize) -> Result<Architecture> {
        if let Some(pe) = self.pe() {
            pe.validate()?;
        }
        let arch = Architecture::new(
            rows,
            cols,
            self.labels(),
            self.pe(),
            self.hidden_layers,
            self.hidden_width,
            self.activation,
        );
        arch.mlp.validate()?;
        Ok(arch)
    }

    /// Short human-readable tag, e.g. `relu+pe+enc`.
    pub fn tag(&self) -> String {
        format!(
            "{}{}{}",
            self.activation.name(),
            if self.positional_encoding { "+pe" } else { "" },
            if self.encoding { "+enc" } else { "" }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Seed for the random-codebook baseline.
    pub random_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { random_seed: 12345 }
    }
}

/// Cells of the ablation table: every combination is trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationGrid {
    pub activations: Vec<Activation>,
    pub positional_encoding: Vec<bool>,
    pub encoding: Vec<bool>,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid {
            activations: Activation::ALL.to_vec(),
            positional_encoding: vec![false, true],
            encoding: vec![true, false],
        }
    }
}

impl AblationGrid {
    /// Expands into per-cell model configs, activation-major, then PE, then
    /// encoding.
    pub fn cells(&self, base: &ModelConfig) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for &activation in &self.activations {
            for &positional_encoding in &self.positional_encoding {
                for &encoding in &self.encoding {
                    out.push(ModelConfig {
                        activation,
                        positional_encoding,
                        encoding,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
    /// Also sweep the plain MLP (no PE, no label encoding) for comparison.
    pub include_plain: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fractions: vec![0.1, 0.2, 0.3, 0.5, 0.7, 1.0],
            include_plain: true,
        }
    }
}
