//! Multinomial logistic regression trained by mini-batch SGD.
//!
//! Parameters are the `C x p` weight matrix in row-major order followed by
//! the `C` biases.

use moac_core::rng::rng_from_seed;
use rand::seq::SliceRandom;

use crate::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSpec {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self { epochs: 1, lr: 0.05, batch_size: 32 }
    }
}

pub fn param_count(dim: usize, classes: usize) -> usize {
    classes * (dim + 1)
}

fn logits(theta: &[f64], x: &[f64], classes: usize, out: &mut [f64]) {
    let dim = x.len();
    let bias = &theta[classes * dim..];
    for (c, o) in out.iter_mut().enumerate() {
        let w = &theta[c * dim..(c + 1) * dim];
        *o = bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

pub fn predict(theta: &[f64], x: &[f64], classes: usize) -> usize {
    let mut z = vec![0.0; classes];
    logits(theta, x, classes, &mut z);
    z.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best }).0
}

pub fn accuracy(theta: &[f64], data: &Dataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = (0..data.len()).filter(|&n| predict(theta, data.example(n), data.classes) == data.labels[n]).count();
    hits as f64 / data.len() as f64
}

/// Mean cross-entropy over `data`.
pub fn loss(theta: &[f64], data: &Dataset) -> f64 {
    let mut z = vec![0.0; data.classes];
    let total: f64 = (0..data.len())
        .map(|n| {
            logits(theta, data.example(n), data.classes, &mut z);
            softmax_in_place(&mut z);
            -z[data.labels[n]].max(1e-300).ln()
        })
        .sum();
    total / data.len().max(1) as f64
}

/// Local SGD from `theta` on the examples `shard`; deterministic per `seed`.
pub fn local_train(theta: &[f64], data: &Dataset, shard: &[usize], spec: &TrainSpec, seed: u64) -> Vec<f64> {
    let mut model = theta.to_vec();
    if spec.epochs == 0 || spec.lr == 0.0 || shard.is_empty() {
        return model;
    }
    let (dim, classes) = (data.dim, data.classes);
    let mut rng = rng_from_seed(seed);
    let mut order = shard.to_vec();
    let mut grad = vec![0.0; model.len()];
    let mut p = vec![0.0; classes];
    for _ in 0..spec.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &n in batch {
                let x = data.example(n);
                logits(&model, x, classes, &mut p);
                softmax_in_place(&mut p);
                p[data.labels[n]] -= 1.0;
                for c in 0..classes {
                    let gw = &mut grad[c * dim..(c + 1) * dim];
                    gw.iter_mut().zip(x).for_each(|(g, &xi)| *g += p[c] * xi);
                    grad[classes * dim + c] += p[c];
                }
            }
            let step = spec.lr / batch.len() as f64;
            model.iter_mut().zip(&grad).for_each(|(w, g)| *w -= step * g);
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gaussian_blobs, BlobSpec};

    #[test]
    fn no_op_training() {
        let task = gaussian_blobs(&BlobSpec { train_per_class: 10, test_per_class: 1, ..BlobSpec::default() }, 0);
        let theta = vec![0.1; param_count(20, 10)];
        let shard: Vec<usize> = (0..50).collect();
        let spec = TrainSpec { epochs: 0, ..TrainSpec::default() };
        assert_eq!(local_train(&theta, &task.train, &shard, &spec, 1), theta);
        let spec = TrainSpec { lr: 0.0, ..TrainSpec::default() };
        assert_eq!(local_train(&theta, &task.train, &shard, &spec, 1), theta);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let task = gaussian_blobs(&BlobSpec { classes: 3, dim: 4, train_per_class: 2, test_per_class: 1, ..BlobSpec::default() }, 5);
        let theta: Vec<f64> = (0..param_count(4, 3)).map(|j| ((j * 7) % 5) as f64 * 0.1 - 0.2).collect();
        // One full-batch step of size lr moves along -lr * grad of the mean loss.
        let spec = TrainSpec { epochs: 1, lr: 1e-6, batch_size: 100 };
        let shard: Vec<usize> = (0..task.train.len()).collect();
        let stepped = local_train(&theta, &task.train, &shard, &spec, 0);
        for j in 0..theta.len() {
            let h = 1e-6;
            let mut up = theta.clone();
            up[j] += h;
            let mut down = theta.clone();
            down[j] -= h;
            let fd = (loss(&up, &task.train) - loss(&down, &task.train)) / (2.0 * h);
            let sgd = (theta[j] - stepped[j]) / spec.lr;
            assert!((fd - sgd).abs() < 1e-5, "param {j}: {fd} vs {sgd}");
        }
    }
}
