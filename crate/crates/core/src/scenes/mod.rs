//! Datasets, client partitions, and synthetic data sources.

mod fsds;
mod partition;
mod synth;

pub use fsds::{load_dataset, read_dataset, save_dataset, write_dataset, FSDS_MAGIC, FSDS_VERSION};
pub use partition::{
    build_global_test, covariate_shift_partition, covariate_shift_partition_of, label_shift_partition, label_shift_partition_of,
    partition_stats, split_local, ClientData, GlobalTestMode, ScenePartition, StatsReport,
};
pub use synth::{synth_image_dataset, synth_label_dataset, synth_mixture_dataset};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Features with one label per leading-dimension entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Tensor,
    labels: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if features.shape().len() < 2 || features.shape().contains(&0) {
            return Err(Error::Data(format!(
                "features need shape [N, ...] with positive dims, got {:?}",
                features.shape()
            )));
        }
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if classes == 0 {
            return Err(Error::Data("class count must be positive".into()));
        }
        if let Some(i) = labels.iter().position(|&y| y >= classes) {
            return Err(Error::Data(format!(
                "sample {i} has label {} but there are {classes} classes",
                labels[i]
            )));
        }
        features.ensure_finite("dataset features")?;
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Shape of one sample, without the leading dimension.
    pub fn sample_shape(&self) -> &[usize] {
        &self.features.shape()[1..]
    }

    pub fn sample_len(&self) -> usize {
        self.features.row_len()
    }

    pub fn batch(&self, idx: &[usize]) -> (Tensor, Vec<usize>) {
        (
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Appends `other`, which must have the same sample shape and classes.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.sample_shape() != other.sample_shape() || self.classes != other.classes {
            return Err(Error::Data("cannot concatenate datasets of different layouts".into()));
        }
        let mut data = self.features.data().to_vec();
        data.extend_from_slice(other.features.data());
        let mut shape = self.features.shape().to_vec();
        shape[0] += other.len();
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Dataset::new(Tensor::new(shape, data)?, labels, self.classes)
    }

    pub(crate) fn map_rows(&mut self, idx: &[usize], mut f: impl FnMut(&mut [f64])) {
        let w = self.sample_len();
        let data = self.features.data_mut();
        for &i in idx {
            f(&mut data[i * w..(i + 1) * w]);
        }
    }
}
