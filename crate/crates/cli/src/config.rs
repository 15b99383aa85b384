//! TOML experiment configuration.
//!
//! Every section and key has a default except `[scene]`, and unknown keys are
//! rejected. The effective configuration (defaults filled in, CLI overrides
//! applied) serializes back to TOML that reproduces the run.

use std::fs;
use std::path::{Path, PathBuf};

use fedsplit::experiment::{DataSource, PartitionSpec, SceneSpec};
use fedsplit::fedsim::{Architecture, FedConfig};
use fedsplit::interp::{check_grid, default_grid};
use fedsplit::splitnet::{enumerate_ways, NetworkSplit};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub scene: SceneConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub fed: FedSection,
    #[serde(default)]
    pub interp: InterpSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Vectors,
    Images,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    LabelShift,
    CovariateShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "SceneConfig::default_source")]
    pub source: SourceKind,
    #[serde(default = "SceneConfig::default_dim")]
    pub dim: usize,
    #[serde(default = "SceneConfig::default_class_sep")]
    pub class_sep: f64,
    #[serde(default = "one")]
    pub modes: usize,
    #[serde(default = "SceneConfig::default_side")]
    pub height: usize,
    #[serde(default = "SceneConfig::default_side")]
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_file: Option<PathBuf>,
    #[serde(default = "SceneConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "SceneConfig::default_test_samples")]
    pub test_samples: usize,
    #[serde(default = "ten")]
    pub classes: usize,
    #[serde(default = "ten")]
    pub clients: usize,
    #[serde(default = "SceneConfig::default_partition")]
    pub partition: PartitionKind,
    #[serde(default = "SceneConfig::default_shards")]
    pub shards_per_class: usize,
    #[serde(default = "SceneConfig::default_shards")]
    pub shards_per_client: usize,
    #[serde(default)]
    pub strength: f64,
    #[serde(default = "SceneConfig::default_train_fraction")]
    pub train_fraction: f64,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl SceneConfig {
    fn default_source() -> SourceKind {
        SourceKind::Vectors
    }
    fn default_dim() -> usize {
        32
    }
    fn default_class_sep() -> f64 {
        3.0
    }
    fn default_side() -> usize {
        12
    }
    fn default_samples() -> usize {
        2000
    }
    fn default_test_samples() -> usize {
        1000
    }
    fn default_partition() -> PartitionKind {
        PartitionKind::LabelShift
    }
    fn default_shards() -> usize {
        3
    }
    fn default_train_fraction() -> f64 {
        0.8
    }

    pub fn to_spec(&self) -> Result<SceneSpec, CliError> {
        let source = match self.source {
            SourceKind::Vectors => DataSource::Vectors {
                dim: self.dim,
                class_sep: self.class_sep,
                modes: self.modes,
            },
            SourceKind::Images => DataSource::Images {
                height: self.height,
                width: self.width,
            },
            SourceKind::File => DataSource::File {
                train: self
                    .train_file
                    .clone()
                    .ok_or_else(|| CliError::config("scene.train_file", "required when source = \"file\""))?,
                test: self.test_file.clone(),
            },
        };
        let partition = match self.partition {
            PartitionKind::LabelShift => PartitionSpec::LabelShift {
                shards_per_class: self.shards_per_class,
                shards_per_client: self.shards_per_client,
            },
            PartitionKind::CovariateShift => PartitionSpec::CovariateShift { strength: self.strength },
        };
        Ok(SceneSpec {
            source,
            samples: self.samples,
            test_samples: self.test_samples,
            classes: self.classes,
            clients: self.clients,
            partition,
            train_fraction: self.train_fraction,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.clients == 0 {
            return Err(CliError::config("scene.clients", "must be positive"));
        }
        if self.classes < 2 {
            return Err(CliError::config("scene.classes", "need at least 2 classes"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::config("scene.train_fraction", "must lie in (0, 1)"));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(CliError::config("scene.strength", "must be a non-negative number"));
        }
        if self.source != SourceKind::File {
            if self.samples == 0 {
                return Err(CliError::config("scene.samples", "must be positive"));
            }
            if self.train_file.is_some() || self.test_file.is_some() {
                return Err(CliError::config("scene.train_file", "only valid when source = \"file\""));
            }
        }
        if self.source == SourceKind::Vectors && (self.dim == 0 || self.modes == 0) {
            return Err(CliError::config("scene.dim", "dim and modes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Cnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "ModelConfig::default_kind")]
    pub kind: ModelKind,
    /// Hidden widths of the MLP, one unit each.
    #[serde(default = "ModelConfig::default_hidden")]
    pub hidden: Vec<usize>,
    /// Output channels of the CNN's conv units.
    #[serde(default = "ModelConfig::default_channels")]
    pub channels: Vec<usize>,
    /// Units per block, bottom first; empty means one block per unit.
    #[serde(default)]
    pub blocks: Vec<usize>,
    #[serde(default = "ModelConfig::default_way")]
    pub way: String,
    /// Ways for `compare`; empty means every way of the split.
    #[serde(default)]
    pub ways: Vec<String>,
    #[serde(default = "ModelConfig::default_temperature")]
    pub temperature: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: Self::default_kind(),
            hidden: Self::default_hidden(),
            channels: Self::default_channels(),
            blocks: Vec::new(),
            way: Self::default_way(),
            ways: Vec::new(),
            temperature: Self::default_temperature(),
        }
    }
}

impl ModelConfig {
    fn default_kind() -> ModelKind {
        ModelKind::Mlp
    }
    fn default_hidden() -> Vec<usize> {
        vec![64]
    }
    fn default_channels() -> Vec<usize> {
        vec![8]
    }
    fn default_way() -> String {
        "AB".into()
    }
    fn default_temperature() -> f64 {
        fedsplit::autofuse::DEFAULT_TEMPERATURE
    }

    /// Builds the split for samples of the given shape.
    pub fn split(&self, sample_shape: &[usize], classes: usize) -> Result<NetworkSplit, CliError> {
        let units = match (self.kind, sample_shape) {
            (ModelKind::Mlp, _) => {
                let input = sample_shape.iter().product();
                NetworkSplit::mlp_units(input, &self.hidden, classes)
            }
            (ModelKind::Cnn, &[c, h, w]) => NetworkSplit::cnn_units(c, h, w, &self.channels, classes)?,
            (ModelKind::Cnn, shape) => {
                return Err(CliError::config(
                    "model.kind",
                    format!("cnn needs [channels, height, width] samples, got {shape:?}"),
                ))
            }
        };
        let sizes = if self.blocks.is_empty() {
            vec![1; units.len()]
        } else {
            self.blocks.clone()
        };
        NetworkSplit::grouped(units, &sizes).map_err(|e| CliError::config("model.blocks", e.to_string()))
    }

    /// Number of blocks the split will have.
    pub fn num_blocks(&self) -> usize {
        if !self.blocks.is_empty() {
            return self.blocks.len();
        }
        match self.kind {
            ModelKind::Mlp => self.hidden.len() + 1,
            ModelKind::Cnn => self.channels.len() + 1,
        }
    }

    pub fn architecture(&self, name: &str, key: &str) -> Result<Architecture, CliError> {
        let arch = Architecture::parse(name, self.num_blocks()).map_err(|e| CliError::config(key, e.to_string()))?;
        Ok(match arch {
            Architecture::Auto { mode, .. } => Architecture::Auto {
                mode,
                temperature: self.temperature,
            },
            way => way,
        })
    }

    /// `ways`, or every way of the split when the list is empty.
    pub fn compare_architectures(&self) -> Result<Vec<Architecture>, CliError> {
        if self.ways.is_empty() {
            let all = enumerate_ways(self.num_blocks()).map_err(|e| CliError::config("model.blocks", e.to_string()))?;
            return Ok(all.into_iter().map(Architecture::Way).collect());
        }
        self.ways.iter().map(|w| self.architecture(w, "model.ways")).collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.hidden.contains(&0) {
            return Err(CliError::config("model.hidden", "widths must be positive"));
        }
        if self.channels.contains(&0) {
            return Err(CliError::config("model.channels", "channel counts must be positive"));
        }
        let units = match self.kind {
            ModelKind::Mlp => self.hidden.len() + 1,
            ModelKind::Cnn => self.channels.len() + 1,
        };
        if !self.blocks.is_empty() && (self.blocks.iter().sum::<usize>() != units || self.blocks.contains(&0)) {
            return Err(CliError::config(
                "model.blocks",
                format!("sizes {:?} must be positive and cover all {units} units", self.blocks),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(CliError::config("model.temperature", "must be positive"));
        }
        self.architecture(&self.way, "model.way")?;
        self.compare_architectures()?;
        Ok(())
    }
}

/// Federated training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedSection {
    #[serde(default = "FedSection::default_rounds")]
    pub rounds: usize,
    #[serde(default = "FedSection::default_sample_ratio")]
    pub sample_ratio: f64,
    #[serde(default = "one")]
    pub local_epochs: usize,
    #[serde(default = "FedSection::default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "FedSection::default_learning_rates")]
    pub learning_rates: Vec<f64>,
    #[serde(default = "FedSection::default_momentum")]
    pub momentum: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_local_steps: Option<usize>,
    #[serde(default = "ten")]
    pub record_every: usize,
}

impl Default for FedSection {
    fn default() -> Self {
        let d = FedConfig::default();
        Self {
            rounds: d.rounds,
            sample_ratio: d.sample_ratio,
            local_epochs: d.local_epochs,
            batch_size: d.batch_size,
            learning_rates: d.learning_rates,
            momentum: d.momentum,
            max_local_steps: d.max_local_steps,
            record_every: d.record_every,
        }
    }
}

impl FedSection {
    fn default_rounds() -> usize {
        FedConfig::default().rounds
    }
    fn default_sample_ratio() -> f64 {
        FedConfig::default().sample_ratio
    }
    fn default_batch_size() -> usize {
        FedConfig::default().batch_size
    }
    fn default_learning_rates() -> Vec<f64> {
        FedConfig::default().learning_rates
    }
    fn default_momentum() -> f64 {
        FedConfig::default().momentum
    }

    pub fn to_fed_config(&self, seed: u64, threads: Option<usize>) -> FedConfig {
        FedConfig {
            rounds: self.rounds,
            sample_ratio: self.sample_ratio,
            local_epochs: self.local_epochs,
            batch_size: self.batch_size,
            learning_rates: self.learning_rates.clone(),
            momentum: self.momentum,
            max_local_steps: self.max_local_steps,
            record_every: self.record_every,
            seed,
            threads,
        }
    }

    /// Number of metric records a run produces.
    pub fn records(&self) -> usize {
        self.rounds / self.record_every.max(1) + 1
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.sample_ratio > 0.0 && self.sample_ratio <= 1.0) {
            return Err(CliError::config("fed.sample_ratio", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(CliError::config("fed.batch_size", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(CliError::config("fed.record_every", "must be positive"));
        }
        if self.learning_rates.is_empty() {
            return Err(CliError::config("fed.learning_rates", "grid is empty"));
        }
        if self.learning_rates.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(CliError::config("fed.learning_rates", "rates must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CliError::config("fed.momentum", "must lie in [0, 1)"));
        }
        if self.max_local_steps == Some(0) {
            return Err(CliError::config("fed.max_local_steps", "must be positive when set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpSection {
    #[serde(default = "default_grid")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_grid")]
    pub betas: Vec<f64>,
}

impl Default for InterpSection {
    fn default() -> Self {
        Self {
            alphas: default_grid(),
            betas: default_grid(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scene.validate()?;
        self.model.validate()?;
        self.fed.validate()?;
        check_grid(&self.interp.alphas, "alpha").map_err(|e| CliError::config("interp.alphas", e.to_string()))?;
        check_grid(&self.interp.betas, "beta").map_err(|e| CliError::config("interp.betas", e.to_string()))?;
        Ok(())
    }

    /// Scoring needs five records; commands that score call this first.
    pub fn require_scorable(&self) -> Result<(), CliError> {
        let n = self.fed.records();
        if n < 5 {
            return Err(CliError::config(
                "fed.rounds",
                format!("{n} records (rounds / record_every + 1) are too few; scoring averages the last 5"),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        Ok(toml::to_string(self)?)
    }
}
