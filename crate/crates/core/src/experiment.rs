//! Scene construction from a declarative spec and multi-way comparisons.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fedsim::{select_best, Architecture, FedConfig, Metric, MetricsLog, Scene, Simulation, NoObserver};
use crate::rng::{stream, tag};
use crate::scenes::{
    build_global_test, covariate_shift_partition_of, label_shift_partition_of, load_dataset, synth_image_dataset,
    synth_mixture_dataset, Dataset, GlobalTestMode,
};
use crate::splitnet::NetworkSplit;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Gaussian class blobs in `dim` dimensions, `modes` blobs per class.
    Vectors { dim: usize, class_sep: f64, modes: usize },
    /// Single-channel class-template images.
    Images { height: usize, width: usize },
    /// FSDS files; the optional second file is the held-out global test set.
    File { train: PathBuf, test: Option<PathBuf> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionSpec {
    LabelShift {
        shards_per_class: usize,
        shards_per_client: usize,
    },
    /// `strength = 0` gives an iid split.
    CovariateShift { strength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub source: DataSource,
    /// Samples shared out to clients (synthetic sources only).
    pub samples: usize,
    /// Held-out global test samples (synthetic sources only); 0 means the
    /// global test set is the union of local test sets.
    pub test_samples: usize,
    pub classes: usize,
    pub clients: usize,
    pub partition: PartitionSpec,
    pub train_fraction: f64,
}

impl SceneSpec {
    fn load(&self, seed: u64) -> Result<(Dataset, usize)> {
        let mut rng = stream(seed, &[tag::DATA]);
        match &self.source {
            DataSource::Vectors { dim, class_sep, modes } => Ok((
                synth_mixture_dataset(self.samples + self.test_samples, self.classes, *dim, *modes, *class_sep, &mut rng)?,
                self.samples,
            )),
            DataSource::Images { height, width } => Ok((
                synth_image_dataset(self.samples + self.test_samples, self.classes, *height, *width, &mut rng)?,
                self.samples,
            )),
            DataSource::File { train, test } => {
                let ds = load_dataset(train)?;
                let n = ds.len();
                match test {
                    Some(t) => Ok((ds.concat(&load_dataset(t)?)?, n)),
                    None => Ok((ds, n)),
                }
            }
        }
    }

    /// Generates or loads the data, partitions it and splits every client
    /// 80/20 (or per `train_fraction`). Randomness derives from `seed`.
    pub fn build(&self, seed: u64) -> Result<Scene> {
        let (data, n_train) = self.load(seed)?;
        let pool: Vec<usize> = (0..n_train).collect();
        let held: Vec<usize> = (n_train..data.len()).collect();
        let mut rng = stream(seed, &[tag::PARTITION]);
        let (data, partition) = match self.partition {
            PartitionSpec::LabelShift {
                shards_per_class,
                shards_per_client,
            } => {
                let p = label_shift_partition_of(&data, &pool, self.clients, shards_per_class, shards_per_client, &mut rng)?;
                (data, p)
            }
            PartitionSpec::CovariateShift { strength } => {
                covariate_shift_partition_of(&data, &pool, self.clients, strength, &mut rng)?
            }
        };
        let partition = partition.split_local(self.train_fraction, &mut stream(seed, &[tag::PARTITION, 1]))?;
        let (partition, mode) = if held.is_empty() {
            (partition, GlobalTestMode::UnionOfLocal)
        } else {
            (partition.with_held_out(held), GlobalTestMode::HeldOut)
        };
        let global_test = build_global_test(&partition, mode)?;
        Ok(Scene {
            data,
            partition,
            global_test,
        })
    }
}

/// Best scores of one architecture over the learning-rate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WayResult {
    pub name: String,
    /// Rate with the best last-5 local accuracy.
    pub best_lr: f64,
    pub local_acc: f64,
    /// Best last-5 global accuracy over the grid, selected on its own.
    pub global_acc: Option<f64>,
    pub logs: Vec<MetricsLog>,
}

/// Runs `arch` once per learning rate in `cfg` and scores the logs.
pub fn evaluate_architecture(scene: &Scene, split: &NetworkSplit, arch: Architecture, cfg: &FedConfig) -> Result<WayResult> {
    let mut logs = Vec::with_capacity(cfg.learning_rates.len());
    for &lr in &cfg.learning_rates {
        logs.push(Simulation::new(scene, split, arch, cfg, lr)?.run(&mut NoObserver)?);
    }
    let (best_lr, local_acc) = select_best(&logs, Metric::Local)?;
    let global_acc = if arch.has_global_model() {
        Some(select_best(&logs, Metric::Global)?.1)
    } else {
        None
    };
    Ok(WayResult {
        name: arch.name(split.num_blocks()),
        best_lr,
        local_acc,
        global_acc,
        logs,
    })
}

pub fn compare(scene: &Scene, split: &NetworkSplit, archs: &[Architecture], cfg: &FedConfig) -> Result<Vec<WayResult>> {
    if archs.is_empty() {
        return Err(Error::config("no architectures to compare"));
    }
    archs.iter().map(|&a| evaluate_architecture(scene, split, a, cfg)).collect()
}
