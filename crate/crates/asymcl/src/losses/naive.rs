//! Deliberately naive reference implementations of the contrastive losses.
//!
//! These follow the defining formulas literally: unshifted exponentials and
//! per-pair double loops, no vectorization, no shared softmax helper. They
//! exist solely to cross-check the stable implementations in the parent
//! module and must stay independent of them.

// Indexed loops are the point here; iterator rewrites would obscure the
// correspondence with the defining formulas.
#![allow(clippy::needless_range_loop)]

use super::{FeatureBatch, PROB_EPS};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `p_ij = exp(z_i·z_j/τ) / Σ_{k≠i} exp(z_i·z_k/τ)`, evaluated exactly as
/// written. Diagonal entries are 0.
pub fn pairwise_probs(batch: &FeatureBatch, tau: f64) -> Vec<Vec<f64>> {
    let n = batch.len();
    let mut probs = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut denom = 0.0;
        for k in 0..n {
            if k != i {
                denom += (dot(batch.row(i), batch.row(k)) / tau).exp();
            }
        }
        for j in 0..n {
            if j != i {
                probs[i][j] = (dot(batch.row(i), batch.row(j)) / tau).exp() / denom;
            }
        }
    }
    probs
}

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Per-anchor loss pieces: mean log-probability over positives and mean
/// `ln(1 − p)` over negatives, `None` when the respective set is empty.
#[derive(Debug, Clone, Copy)]
pub struct AnchorTerms {
    pub positive: Option<f64>,
    pub negative: Option<f64>,
}

/// Computes `L_i⁺` and `L_i⁻` for every anchor by double loop.
pub fn per_anchor_terms(batch: &FeatureBatch, tau: f64, gamma: f64) -> Vec<AnchorTerms> {
    let probs = pairwise_probs(batch, tau);
    let labels = batch.labels();
    let n = batch.len();
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let mut pos_sum = 0.0;
        let mut pos_count = 0usize;
        let mut neg_sum = 0.0;
        let mut neg_count = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            let p = clamp(probs[i][j]);
            if labels[j] == labels[i] {
                pos_sum += (1.0 - p).powf(gamma) * p.ln();
                pos_count += 1;
            } else {
                neg_sum += (1.0 - p).ln();
                neg_count += 1;
            }
        }
        terms.push(AnchorTerms {
            positive: (pos_count > 0).then(|| pos_sum / pos_count as f64),
            negative: (neg_count > 0).then(|| neg_sum / neg_count as f64),
        });
    }
    terms
}

pub fn contrastive_loss(batch: &FeatureBatch, tau: f64) -> f64 {
    -per_anchor_terms(batch, tau, 0.0)
        .iter()
        .filter_map(|t| t.positive)
        .sum::<f64>()
}

pub fn focal_contrastive_loss(batch: &FeatureBatch, tau: f64) -> f64 {
    -per_anchor_terms(batch, tau, 1.0)
        .iter()
        .filter_map(|t| t.positive)
        .sum::<f64>()
}

pub fn acl(batch: &FeatureBatch, tau: f64, eta: f64) -> f64 {
    afcl(batch, tau, eta, 0.0)
}

pub fn afcl(batch: &FeatureBatch, tau: f64, eta: f64, gamma: f64) -> f64 {
    let mut total = 0.0;
    for t in per_anchor_terms(batch, tau, gamma) {
        total -= t.positive.unwrap_or(0.0) + eta * t.negative.unwrap_or(0.0);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::super::FeatureBatch;
    use crate::autodiff::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureBatch {
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        FeatureBatch::normalize(Tensor::new(vec![n, d], data).unwrap(), labels).unwrap()
    }

    #[test]
    fn stable_and_naive_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(2..=16);
            let batch = random_batch(&mut rng, n, 4);
            let stable = super::super::pairwise_probs(&batch, 0.07).unwrap();
            let naive = super::pairwise_probs(&batch, 0.07);
            for i in 0..n {
                for j in 0..n {
                    assert!((stable.get2(i, j) - naive[i][j]).abs() <= 1e-6);
                }
            }
            let pairs = [
                (
                    super::super::contrastive_loss(&batch, 0.07).unwrap(),
                    super::contrastive_loss(&batch, 0.07),
                ),
                (
                    super::super::afcl(&batch, 0.07, 120.0, 7.0).unwrap(),
                    super::afcl(&batch, 0.07, 120.0, 7.0),
                ),
            ];
            for (stable, naive) in pairs {
                assert!((stable - naive).abs() <= 1e-6 * naive.abs().max(1.0));
            }
        }
    }
}
