use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};

/// One client's local train and test indices into the parent dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClientData {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl ClientData {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.train.iter().chain(&self.test).copied()
    }
}

/// Client index lists over one parent dataset.
///
/// Partitioners place every sample of a client in `train`; [`ScenePartition::split_local`]
/// then moves a fraction into `test`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenePartition {
    pub clients: Vec<ClientData>,
    pub held_out: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalTestMode {
    HeldOut,
    UnionOfLocal,
}

impl ScenePartition {
    pub fn from_pools(pools: Vec<Vec<usize>>) -> Self {
        Self {
            clients: pools
                .into_iter()
                .map(|train| ClientData {
                    train,
                    test: Vec::new(),
                })
                .collect(),
            held_out: None,
        }
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn with_held_out(mut self, indices: Vec<usize>) -> Self {
        self.held_out = Some(indices);
        self
    }

    /// Re-splits each client's samples into train/test with [`split_local`].
    pub fn split_local<R: Rng + ?Sized>(mut self, fraction: f64, rng: &mut R) -> Result<Self> {
        for (k, c) in self.clients.iter_mut().enumerate() {
            let all: Vec<usize> = c.all().collect();
            let (train, test) = split_local(&all, fraction, rng)
                .map_err(|e| Error::config(format!("client {k}: {e}")))?;
            c.train = train;
            c.test = test;
        }
        Ok(self)
    }

    /// Checks index bounds and disjointness against a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut owner = vec![usize::MAX; n];
        for (k, c) in self.clients.iter().enumerate() {
            for i in c.all() {
                if i >= n {
                    return Err(Error::Data(format!("client {k} references sample {i} of {n}")));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::Data(format!(
                        "sample {i} assigned to clients {} and {k}",
                        owner[i]
                    )));
                }
                owner[i] = k;
            }
        }
        if let Some(h) = &self.held_out {
            if let Some(&i) = h.iter().find(|&&i| i >= n) {
                return Err(Error::Data(format!("held-out index {i} out of range {n}")));
            }
        }
        Ok(())
    }
}

/// Shuffles `indices` and keeps `round(fraction * n)` for training.
pub fn split_local<R: Rng + ?Sized>(
    indices: &[usize],
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    let n = indices.len();
    if n < 2 {
        return Err(Error::config(format!("cannot split {n} samples into train and test")));
    }
    let mut v = indices.to_vec();
    v.shuffle(rng);
    let cut = (fraction * n as f64).round() as usize;
    let test = v.split_off(cut);
    Ok((v, test))
}

pub fn build_global_test(partition: &ScenePartition, mode: GlobalTestMode) -> Result<Vec<usize>> {
    match mode {
        GlobalTestMode::HeldOut => partition
            .held_out
            .clone()
            .ok_or_else(|| Error::config("held-out global test requested but none was provided")),
        GlobalTestMode::UnionOfLocal => Ok(partition
            .clients
            .iter()
            .flat_map(|c| c.test.iter().copied())
            .collect()),
    }
}

/// Shard partition over the whole dataset; see [`label_shift_partition_of`].
pub fn label_shift_partition<R: Rng + ?Sized>(
    ds: &Dataset,
    clients: usize,
    shards_per_class: usize,
    shards_per_client: usize,
    rng: &mut R,
) -> Result<ScenePartition> {
    let pool: Vec<usize> = (0..ds.len()).collect();
    label_shift_partition_of(ds, &pool, clients, shards_per_class, shards_per_client, rng)
}

/// Splits each class of `pool` into `shards_per_class` shards and hands every
/// client `shards_per_client` shards of distinct classes.
///
/// Clients are visited in shuffled order. A client first takes every class
/// whose unassigned shard count equals the number of clients still waiting
/// (otherwise some later client would be forced into a duplicate), then fills
/// up uniformly at random among classes with shards left. Given the
/// feasibility checks this never dead-ends.
pub fn label_shift_partition_of<R: Rng + ?Sized>(
    ds: &Dataset,
    pool: &[usize],
    clients: usize,
    shards_per_class: usize,
    shards_per_client: usize,
    rng: &mut R,
) -> Result<ScenePartition> {
    let (k, s, m, c) = (clients, shards_per_class, shards_per_client, ds.classes());
    if k == 0 || s == 0 || m == 0 {
        return Err(Error::config("clients and shard counts must be positive"));
    }
    if k * m != c * s {
        return Err(Error::config(format!(
            "{k} clients x {m} shards != {c} classes x {s} shards"
        )));
    }
    if m > c {
        return Err(Error::config(format!(
            "{m} distinct classes per client requested but only {c} exist"
        )));
    }
    if s > k {
        return Err(Error::config(format!(
            "{s} shards per class cannot go to distinct clients among {k}"
        )));
    }
    let mut by_class = vec![Vec::new(); c];
    for &i in pool {
        let y = *ds
            .labels()
            .get(i)
            .ok_or_else(|| Error::config(format!("pool index {i} out of range")))?;
        by_class[y].push(i);
    }
    if let Some((y, v)) = by_class.iter().enumerate().find(|(_, v)| v.len() < s) {
        return Err(Error::config(format!(
            "class {y} has {} samples, fewer than {s} shards",
            v.len()
        )));
    }

    let mut shards: Vec<Vec<Vec<usize>>> = Vec::with_capacity(c);
    for mut members in by_class {
        members.shuffle(rng);
        let size = members.len() / s;
        let mut class_shards = Vec::with_capacity(s);
        for j in 0..s {
            let end = if j + 1 == s { members.len() } else { (j + 1) * size };
            class_shards.push(members[j * size..end].to_vec());
        }
        shards.push(class_shards);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut remaining = vec![s; c];
    let mut pools = vec![Vec::new(); k];
    for (pos, &client) in order.iter().enumerate() {
        let waiting = k - pos;
        let mut chosen: Vec<usize> = (0..c).filter(|&y| remaining[y] == waiting).collect();
        let mut open: Vec<usize> = (0..c)
            .filter(|&y| remaining[y] > 0 && remaining[y] < waiting)
            .collect();
        if chosen.len() > m || chosen.len() + open.len() < m {
            return Err(Error::Internal("shard assignment reached an infeasible state".into()));
        }
        let need = m - chosen.len();
        open.shuffle(rng);
        chosen.extend_from_slice(&open[..need]);
        chosen.sort_unstable();
        for y in chosen {
            let shard = s - remaining[y];
            remaining[y] -= 1;
            pools[client].extend_from_slice(&shards[y][shard]);
        }
    }
    Ok(ScenePartition::from_pools(pools))
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform random split plus a per-client affine feature map; see
/// [`covariate_shift_partition_of`].
pub fn covariate_shift_partition<R: Rng + ?Sized>(
    ds: &Dataset,
    clients: usize,
    strength: f64,
    rng: &mut R,
) -> Result<(Dataset, ScenePartition)> {
    let pool: Vec<usize> = (0..ds.len()).collect();
    covariate_shift_partition_of(ds, &pool, clients, strength, rng)
}

/// Deals the shuffled `pool` round-robin to clients, then transforms each
/// client's samples: consecutive coordinate pairs are rotated by angles drawn
/// as `strength * pi/4 * N(0,1)`, then everything is shifted by
/// `strength * N(0, I)`. Returns the transformed dataset with the partition;
/// samples outside `pool` and all labels are untouched.
pub fn covariate_shift_partition_of<R: Rng + ?Sized>(
    ds: &Dataset,
    pool: &[usize],
    clients: usize,
    strength: f64,
    rng: &mut R,
) -> Result<(Dataset, ScenePartition)> {
    if clients == 0 {
        return Err(Error::config("need at least one client"));
    }
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::config(format!("transform strength must be >= 0, got {strength}")));
    }
    if let Some(&i) = pool.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::config(format!("pool index {i} out of range")));
    }
    let mut idx = pool.to_vec();
    idx.shuffle(rng);
    let mut pools = vec![Vec::new(); clients];
    for (j, i) in idx.into_iter().enumerate() {
        pools[j % clients].push(i);
    }
    let d = ds.sample_len();
    let mut out = ds.clone();
    for members in &pools {
        let angles: Vec<(f64, f64)> = (0..d / 2)
            .map(|_| {
                let a = strength * std::f64::consts::FRAC_PI_4 * standard_normal(rng);
                (a.cos(), a.sin())
            })
            .collect();
        let shift: Vec<f64> = (0..d).map(|_| strength * standard_normal(rng)).collect();
        if strength == 0.0 {
            continue;
        }
        out.map_rows(members, |row| {
            for (p, &(c, s)) in angles.iter().enumerate() {
                let (x, y) = (row[2 * p], row[2 * p + 1]);
                row[2 * p] = c * x - s * y;
                row[2 * p + 1] = s * x + c * y;
            }
            for (v, t) in row.iter_mut().zip(&shift) {
                *v += t;
            }
        });
    }
    out.features().ensure_finite("transformed features")?;
    Ok((out, ScenePartition::from_pools(pools)))
}

/// Label histograms per client (train and test together).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsReport {
    pub histogram: Vec<Vec<usize>>,
    pub client_totals: Vec<usize>,
    pub class_totals: Vec<usize>,
}

impl StatsReport {
    pub fn nonzero_classes(&self, client: usize) -> usize {
        self.histogram[client].iter().filter(|&&n| n > 0).count()
    }
}

pub fn partition_stats(partition: &ScenePartition, ds: &Dataset) -> StatsReport {
    let c = ds.classes();
    let histogram: Vec<Vec<usize>> = partition
        .clients
        .iter()
        .map(|cl| {
            let mut h = vec![0; c];
            for i in cl.all() {
                h[ds.labels()[i]] += 1;
            }
            h
        })
        .collect();
    let client_totals = histogram.iter().map(|h| h.iter().sum()).collect();
    let class_totals = (0..c).map(|y| histogram.iter().map(|h| h[y]).sum()).collect();
    StatsReport {
        histogram,
        client_totals,
        class_totals,
    }
}
