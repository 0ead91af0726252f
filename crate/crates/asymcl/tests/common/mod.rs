//! Shared helpers for the integration suites: an independent
//! central-difference gradient oracle and random input generators.
//!
//! Each integration target compiles this module separately, so not every
//! helper is used by every target.
#![allow(dead_code)]

use asymcl::autodiff::Tensor;
use asymcl::losses::FeatureBatch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central finite differences: `(f(x+h) − f(x−h)) / 2h` per coordinate.
/// This is the independent oracle every gradient check compares against.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Relative error with a unit floor, the usual gradient-check metric.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random values bounded away from the ReLU/max kinks at the given points.
pub fn random_away_from(rng: &mut ChaCha8Rng, len: usize, kinks: &[f64]) -> Vec<f64> {
    (0..len)
        .map(|_| loop {
            let v = rng.gen_range(-2.0..2.0);
            if kinks.iter().all(|&k| (v - k).abs() > 1e-3) {
                break v;
            }
        })
        .collect()
}

/// Random labeled batch of ℓ2-normalized rows with both classes present.
pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureBatch {
    let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    labels[0] = 0;
    if n > 1 {
        labels[1] = 1;
    }
    FeatureBatch::normalize(Tensor::new(vec![n, d], data).unwrap(), labels).unwrap()
}

/// Raw (unnormalized) feature matrix with norms bounded away from zero,
/// suitable for differentiating through row normalization.
pub fn random_raw_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.gen_range(0.25..1.75)).collect()
}

pub fn random_binary_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    labels[0] = 0;
    if n > 1 {
        labels[1] = 1;
    }
    labels
}
