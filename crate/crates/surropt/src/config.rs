use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use surropt_core::dataset::SyntheticOracleConfig;
use surropt_core::de::{DEConfig, VariantId, VariantParams};
use surropt_core::objective::scenario_weights;
use surropt_core::surrogate::{table1_spec, TrainingConfig};

use crate::error::{ExperimentError, Result};

/// Everything a campaign needs; read from TOML. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base_seed: u64,
    pub scenario_ids: Vec<u32>,
    pub variants: Vec<VariantId>,
    pub runs_per_variant: usize,
    /// Objective evaluations per run.
    pub budget: usize,
    /// Rows of the reference architecture table to train (1-based).
    pub surrogate_spec_indices: Vec<usize>,
    pub de: DeSettings,
    pub data: DataSettings,
    pub training: TrainingSettings,
    pub compare: CompareSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeSettings {
    pub pop_size: usize,
    pub crossover_prob: f64,
    pub scale_factor: f64,
    pub variant_params: VariantParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSettings {
    /// Existing data set; when set, no synthetic data is generated.
    pub path: Option<PathBuf>,
    pub count: usize,
    pub train_fraction: f64,
    /// Defaults to `base_seed`.
    pub oracle_seed: Option<u64>,
    pub coupling_count: usize,
    pub noise_stddev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub early_stop_patience: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    /// 1-based evaluation index to compare at; `None` compares final values.
    pub at_eval: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base_seed: 2024,
            scenario_ids: vec![1, 2],
            variants: VariantId::ALL.to_vec(),
            runs_per_variant: 10,
            budget: 1000,
            surrogate_spec_indices: (1..=10).collect(),
            de: DeSettings::default(),
            data: DataSettings::default(),
            training: TrainingSettings::default(),
            compare: CompareSettings::default(),
        }
    }
}

impl Default for DeSettings {
    fn default() -> Self {
        let d = DEConfig::default();
        Self {
            pop_size: d.pop_size,
            crossover_prob: d.crossover_prob,
            scale_factor: d.scale_factor,
            variant_params: d.variant_params,
        }
    }
}

impl Default for DataSettings {
    fn default() -> Self {
        let o = SyntheticOracleConfig::default();
        Self {
            path: None,
            count: 2000,
            train_fraction: 0.8,
            oracle_seed: None,
            coupling_count: o.coupling_count,
            noise_stddev: o.noise_stddev,
        }
    }
}

impl Default for TrainingSettings {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            max_epochs: t.max_epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            early_stop_patience: t.early_stop_patience,
        }
    }
}

fn bad(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario_ids.is_empty() {
            return Err(bad("scenario_ids is empty"));
        }
        for &s in &self.scenario_ids {
            scenario_weights(s).map_err(|e| bad(e.to_string()))?;
        }
        if has_duplicates(&self.scenario_ids) {
            return Err(bad("scenario_ids contains duplicates"));
        }
        if self.variants.is_empty() {
            return Err(bad("variants is empty"));
        }
        if has_duplicates(&self.variants) {
            return Err(bad("variants contains duplicates"));
        }
        if self.runs_per_variant == 0 {
            return Err(bad("runs_per_variant must be at least 1"));
        }
        if self.surrogate_spec_indices.is_empty() {
            return Err(bad("surrogate_spec_indices is empty"));
        }
        for &i in &self.surrogate_spec_indices {
            table1_spec(i).map_err(|e| bad(e.to_string()))?;
        }
        if has_duplicates(&self.surrogate_spec_indices) {
            return Err(bad("surrogate_spec_indices contains duplicates"));
        }
        self.de_config(0).validate().map_err(|e| bad(e.to_string()))?;
        self.training_config(0).validate().map_err(|e| bad(e.to_string()))?;
        self.oracle_config().validate().map_err(|e| bad(e.to_string()))?;
        if self.data.count < 2 {
            return Err(bad("data.count must be at least 2"));
        }
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(bad("data.train_fraction must lie in (0, 1)"));
        }
        if self.compare.at_eval == Some(0) || self.compare.at_eval.is_some_and(|t| t > self.budget) {
            return Err(bad("compare.at_eval must lie in 1..=budget"));
        }
        Ok(())
    }

    pub fn de_config(&self, seed: u64) -> DEConfig {
        DEConfig {
            pop_size: self.de.pop_size,
            crossover_prob: self.de.crossover_prob,
            scale_factor: self.de.scale_factor,
            max_evals: self.budget,
            seed,
            variant_params: self.de.variant_params.clone(),
        }
    }

    pub fn training_config(&self, seed: u64) -> TrainingConfig {
        TrainingConfig {
            max_epochs: self.training.max_epochs,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            seed,
            early_stop_patience: self.training.early_stop_patience,
        }
    }

    pub fn oracle_config(&self) -> SyntheticOracleConfig {
        SyntheticOracleConfig {
            seed: self.data.oracle_seed.unwrap_or(self.base_seed),
            coupling_count: self.data.coupling_count,
            noise_stddev: self.data.noise_stddev,
        }
    }

    pub fn run_seed(&self, variant: VariantId, scenario: u32, run_index: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &format!("run/{}/{scenario}/{run_index}", variant.name()),
        )
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.base_seed, "split")
    }

    pub fn training_seed(&self, spec_index: usize, metric: surropt_core::dataset::Metric) -> u64 {
        derive_seed(self.base_seed, &format!("train/{spec_index}/{metric}"))
    }
}

fn has_duplicates<T: Ord + Clone>(v: &[T]) -> bool {
    let mut s = v.to_vec();
    s.sort();
    s.windows(2).any(|w| w[0] == w[1])
}

/// First 8 bytes (little endian) of `sha256(base_seed_le || tag)`.
pub fn derive_seed(base_seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}
