//! Synthetic labeled data and non-iid partitioning across devices.

use moac_core::rng::{derive_seed, rng_from_seed};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FeelError, Result};

/// Row-major feature matrix with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn example(&self, n: usize) -> &[f64] {
        &self.features[n * self.dim..(n + 1) * self.dim]
    }
}

/// Isotropic Gaussian clusters, one per class, with random centers of norm `separation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub dim: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub separation: f64,
    pub spread: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { classes: 10, dim: 20, train_per_class: 1000, test_per_class: 1000, separation: 3.0, spread: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub train: Dataset,
    pub test: Dataset,
}

pub fn gaussian_blobs(spec: &BlobSpec, seed: u64) -> SyntheticTask {
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let centers: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            let v: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x * spec.separation / norm).collect()
        })
        .collect();
    let draw = |per_class: usize, stream: u64| {
        let mut rng = rng_from_seed(derive_seed(seed, &[stream]));
        let mut features = Vec::with_capacity(per_class * spec.classes * spec.dim);
        let mut labels = Vec::with_capacity(per_class * spec.classes);
        for _ in 0..per_class {
            for (label, center) in centers.iter().enumerate() {
                features.extend(center.iter().map(|&c| c + spec.spread * rng.sample::<f64, _>(StandardNormal)));
                labels.push(label);
            }
        }
        Dataset { features, labels, dim: spec.dim, classes: spec.classes }
    };
    SyntheticTask { train: draw(spec.train_per_class, 1), test: draw(spec.test_per_class, 2) }
}

/// Splits example indexes across `devices`.
///
/// A `random_fraction` of the data is dealt out uniformly at random in equal
/// parts; the rest is sorted by label and cut into consecutive shards, one per
/// device, so each device sees only one or two labels from its shard. With
/// `shard_size = None` the residual is split evenly; otherwise residual
/// examples beyond `devices * shard_size` are left unassigned.
pub fn partition_shards(
    labels: &[usize],
    devices: usize,
    random_fraction: f64,
    shard_size: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if devices == 0 {
        return Err(FeelError::InvalidArgument("device count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&random_fraction) {
        return Err(FeelError::InvalidArgument(format!("random fraction {random_fraction} outside [0, 1]")));
    }
    let n = labels.len();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let per_device = ((random_fraction * n as f64).floor() as usize) / devices;
    let (random, residual) = order.split_at(per_device * devices);
    let shard = shard_size.unwrap_or(residual.len() / devices);
    if shard * devices > residual.len() {
        return Err(FeelError::InsufficientData { needed: per_device * devices + shard * devices, available: n });
    }
    let mut sorted = residual.to_vec();
    sorted.sort_by_key(|&e| (labels[e], e));
    let mut owners: Vec<usize> = (0..devices).collect();
    owners.shuffle(&mut rng);

    let mut shards: Vec<Vec<usize>> = random.chunks(per_device.max(1)).take(devices).map(<[usize]>::to_vec).collect();
    shards.resize(devices, Vec::new());
    for (s, &owner) in owners.iter().enumerate() {
        shards[owner].extend_from_slice(&sorted[s * shard..(s + 1) * shard]);
    }
    if shard_size.is_none() {
        // Even split leaves at most `devices - 1` examples; give them to the last shards.
        let rest = &sorted[shard * devices..];
        for (j, &e) in rest.iter().enumerate() {
            shards[owners[devices - rest.len() + j]].push(e);
        }
    }
    if shards.iter().any(Vec::is_empty) {
        return Err(FeelError::InsufficientData { needed: devices, available: n });
    }
    Ok(shards)
}
