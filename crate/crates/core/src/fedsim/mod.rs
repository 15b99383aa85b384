//! Federated rounds: client sampling, local training, shared-block averaging,
//! and the aggregation/personalization metrics.

mod network;
mod sim;

pub use network::{Architecture, Network};
pub use sim::{run_experiment, Client, NoObserver, RoundObserver, Scene, ServerState, Simulation, Upload};

use rand::seq::index;
use rand::Rng;

use crate::autofuse::{Coefficient, WeightWatch};
use crate::error::{Error, Result};
use crate::splitnet::ParamVector;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct FedConfig {
    pub rounds: usize,
    pub sample_ratio: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rates: Vec<f64>,
    pub momentum: f64,
    pub max_local_steps: Option<usize>,
    pub record_every: usize,
    pub seed: u64,
    /// Worker threads for client training; `None` uses the global pool size.
    pub threads: Option<usize>,
}

impl Default for FedConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            sample_ratio: 1.0,
            local_epochs: 1,
            batch_size: 64,
            learning_rates: vec![0.01, 0.03, 0.05],
            momentum: 0.9,
            max_local_steps: None,
            record_every: 10,
            seed: 0,
            threads: None,
        }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_ratio > 0.0 && self.sample_ratio <= 1.0) {
            return Err(Error::config(format!(
                "sample_ratio must be in (0, 1], got {}",
                self.sample_ratio
            )));
        }
        if self.batch_size == 0 || self.record_every == 0 {
            return Err(Error::config("batch_size and record_every must be positive"));
        }
        if self.learning_rates.is_empty() {
            return Err(Error::config("learning rate grid is empty"));
        }
        if let Some(&lr) = self.learning_rates.iter().find(|&&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::config(format!("learning rates must be positive, got {lr}")));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.max_local_steps == Some(0) {
            return Err(Error::config("max_local_steps must be positive when set"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be positive when set"));
        }
        Ok(())
    }

    /// Clients selected per round: `max(round(Q K), 1)`.
    pub fn clients_per_round(&self, clients: usize) -> usize {
        ((self.sample_ratio * clients as f64).round() as usize).clamp(1, clients.max(1))
    }
}

/// Uniform sample without replacement, returned in ascending id order.
pub fn sample_clients<R: Rng + ?Sized>(clients: usize, ratio: f64, rng: &mut R) -> Vec<usize> {
    let n = ((ratio * clients as f64).round() as usize).clamp(1, clients.max(1));
    let mut ids = index::sample(rng, clients, n.min(clients)).into_vec();
    ids.sort_unstable();
    ids
}

/// Elementwise mean, summed in the given order and divided once.
pub fn aggregate(updates: &[ParamVector]) -> Result<ParamVector> {
    let first = updates
        .first()
        .ok_or_else(|| Error::Protocol("no updates to aggregate".into()))?;
    if let Some((k, u)) = updates.iter().enumerate().find(|(_, u)| u.len() != first.len()) {
        return Err(Error::Protocol(format!(
            "update {k} has {} values, expected {}",
            u.len(),
            first.len()
        )));
    }
    let mut sum = first.0.clone();
    for u in &updates[1..] {
        for (s, v) in sum.iter_mut().zip(u.iter()) {
            *s += v;
        }
    }
    let n = updates.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    Ok(ParamVector(sum))
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(scores: &Tensor, labels: &[usize]) -> Result<f64> {
    if scores.rows() != labels.len() || labels.is_empty() {
        return Err(Error::config(format!(
            "{} score rows for {} labels",
            scores.rows(),
            labels.len()
        )));
    }
    let hits = scores
        .argmax_rows()
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub round: usize,
    /// `None` when the architecture has no complete shared model.
    pub global_acc: Option<f64>,
    /// `None` when no evaluated client had local test data.
    pub local_acc: Option<f64>,
    pub per_client: Vec<(usize, f64)>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRecord {
    pub round: usize,
    pub coefficients: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub architecture: String,
    pub learning_rate: f64,
    pub records: Vec<MetricsRecord>,
    pub coefficients: Vec<CoefficientRecord>,
    /// Extremes of the fusion weights drawn during training (auto modes).
    pub weights: Option<WeightWatch>,
    /// Client-rounds skipped because the client had no training data.
    pub skipped_clients: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Global,
    Local,
}

impl MetricsLog {
    /// Mean of the last five recorded values of `metric`.
    pub fn last5(&self, metric: Metric) -> Result<f64> {
        if self.records.len() < 5 {
            return Err(Error::Scoring(format!(
                "{} has {} records, need at least 5",
                self.architecture,
                self.records.len()
            )));
        }
        let tail = &self.records[self.records.len() - 5..];
        let mut sum = 0.0;
        for r in tail {
            let v = match metric {
                Metric::Global => r.global_acc.ok_or_else(|| {
                    Error::UnsupportedMetric(format!("{} has no global model", self.architecture))
                })?,
                Metric::Local => r
                    .local_acc
                    .ok_or_else(|| Error::Scoring(format!("round {} has no local accuracy", r.round)))?,
            };
            sum += v;
        }
        Ok(sum / 5.0)
    }
}

/// Picks the log with the highest last-5 mean; ties go to the smaller rate.
pub fn select_best(logs: &[MetricsLog], metric: Metric) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for log in logs {
        let score = log.last5(metric)?;
        let lr = log.learning_rate;
        best = match best {
            Some((blr, bs)) if bs > score || (bs == score && blr <= lr) => Some((blr, bs)),
            _ => Some((lr, score)),
        };
    }
    best.ok_or_else(|| Error::Scoring("no logs to select from".into()))
}
