//! The loss family as differentiable tape nodes.
//!
//! Each builder composes exclusively from the closed op set of
//! [`crate::autodiff`]: focusing factors `(1−p)^γ` become
//! `exp(γ·ln(1−p))`, sigmoid-based losses use a max-shifted softplus, and
//! probabilities are clamped to `[PROB_EPS, 1−PROB_EPS]` through
//! `max_with_constant` before any logarithm.

use super::{LossError, LossParams, PROB_EPS};
use crate::autodiff::{NodeId, Tape, Tensor};

/// Clamps every entry of `x` into `[lo, hi]` using only max and negation:
/// `min(v, hi) = −max(−v, −hi)`.
pub fn clamp_node(tape: &mut Tape, x: NodeId, lo: f64, hi: f64) -> Result<NodeId, LossError> {
    let floored = tape.max_with_constant(x, lo)?;
    let negated = tape.neg(floored);
    let capped = tape.max_with_constant(negated, -hi)?;
    Ok(tape.neg(capped))
}

fn clamp_unit(tape: &mut Tape, x: NodeId) -> Result<NodeId, LossError> {
    clamp_node(tape, x, PROB_EPS, 1.0 - PROB_EPS)
}

fn ones_like(tape: &mut Tape, x: NodeId) -> NodeId {
    let shape = tape.value(x).shape().to_vec();
    let len: usize = shape.iter().product();
    tape.constant(Tensor::from_parts(shape, vec![1.0; len]))
}

/// `ln(1 + e^x)` computed as `max(x, 0) + ln(1 + e^{−|x|})`, which stays
/// finite for any logit.
pub fn softplus_node(tape: &mut Tape, x: NodeId) -> Result<NodeId, LossError> {
    let pos = tape.relu(x);
    let negated = tape.neg(x);
    let neg = tape.relu(negated);
    let abs = tape.add(pos, neg)?;
    let minus_abs = tape.neg(abs);
    let e = tape.exp(minus_abs);
    let ones = ones_like(tape, x);
    let one_plus = tape.add(ones, e)?;
    let log_term = tape.log(one_plus)?;
    Ok(tape.add(pos, log_term)?)
}

/// The pairwise probability matrix of Eq.-style softmax over
/// temperature-scaled similarities, with the diagonal masked, as a node.
/// `z` must hold ℓ2-normalized rows.
pub fn pairwise_probs_node(tape: &mut Tape, z: NodeId, tau: f64) -> Result<NodeId, LossError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(LossError::InvalidParam(format!(
            "tau must be a finite positive number, got {tau}"
        )));
    }
    let n = tape.value(z).shape()[0];
    let sims = tape.matmul_transpose_rhs(z, z)?;
    let scaled = tape.scale(sims, 1.0 / tau)?;
    let mut mask = vec![1.0; n * n];
    for i in 0..n {
        mask[i * n + i] = 0.0;
    }
    Ok(tape.softmax_rows_with_mask(scaled, &Tensor::from_parts(vec![n, n], mask))?)
}

/// Weight matrix with `1/|P_i|` at positive pairs, 0 elsewhere. Rows whose
/// positive set is empty are all zero, so those anchors drop out of the sum.
fn positive_weights(labels: &[usize]) -> Tensor {
    let n = labels.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let pos = super::positives(labels, i);
        if pos.is_empty() {
            continue;
        }
        let inv = 1.0 / pos.len() as f64;
        for j in pos {
            w[i * n + j] = inv;
        }
    }
    Tensor::from_parts(vec![n, n], w)
}

fn negative_weights(labels: &[usize]) -> Tensor {
    let n = labels.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        let neg = super::negatives(labels, i);
        if neg.is_empty() {
            continue;
        }
        let inv = 1.0 / neg.len() as f64;
        for j in neg {
            w[i * n + j] = inv;
        }
    }
    Tensor::from_parts(vec![n, n], w)
}

/// `(1−p)^γ · ln p` as a node matrix; `γ = 0` short-circuits to `ln p`.
fn focused_log_probs(
    tape: &mut Tape,
    probs_clamped: NodeId,
    gamma: f64,
) -> Result<NodeId, LossError> {
    let log_p = tape.log(probs_clamped)?;
    if gamma == 0.0 {
        return Ok(log_p);
    }
    let ones = ones_like(tape, probs_clamped);
    let one_minus = tape.sub(ones, probs_clamped)?;
    let log_one_minus = tape.log(one_minus)?;
    let scaled = tape.scale(log_one_minus, gamma)?;
    let factor = tape.exp(scaled);
    Ok(tape.mul(factor, log_p)?)
}

fn contrastive_family_node(
    tape: &mut Tape,
    z: NodeId,
    labels: &[usize],
    tau: f64,
    eta: f64,
    gamma: f64,
) -> Result<NodeId, LossError> {
    let n = tape.value(z).shape()[0];
    if labels.len() != n {
        return Err(LossError::LabelCountMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    let probs = pairwise_probs_node(tape, z, tau)?;
    let clamped = clamp_unit(tape, probs)?;
    let w_plus = tape.constant(positive_weights(labels));
    let focused = focused_log_probs(tape, clamped, gamma)?;
    let pos_terms = tape.mul(w_plus, focused)?;
    let pos_sum = tape.sum(pos_terms);
    let inner = if eta == 0.0 {
        pos_sum
    } else {
        let ones = ones_like(tape, clamped);
        let one_minus = tape.sub(ones, clamped)?;
        let log_one_minus = tape.log(one_minus)?;
        let w_minus = tape.constant(negative_weights(labels));
        let neg_terms = tape.mul(w_minus, log_one_minus)?;
        let neg_sum = tape.sum(neg_terms);
        let weighted = tape.scale(neg_sum, eta)?;
        tape.add(pos_sum, weighted)?
    };
    Ok(tape.neg(inner))
}

/// Supervised contrastive loss as a scalar node.
pub fn contrastive_loss_node(
    tape: &mut Tape,
    z: NodeId,
    labels: &[usize],
    tau: f64,
) -> Result<NodeId, LossError> {
    contrastive_family_node(tape, z, labels, tau, 0.0, 0.0)
}

/// Focal contrastive loss as a scalar node.
pub fn focal_contrastive_loss_node(
    tape: &mut Tape,
    z: NodeId,
    labels: &[usize],
    tau: f64,
) -> Result<NodeId, LossError> {
    contrastive_family_node(tape, z, labels, tau, 0.0, 1.0)
}

/// Asymmetric contrastive loss as a scalar node.
pub fn acl_node(
    tape: &mut Tape,
    z: NodeId,
    labels: &[usize],
    tau: f64,
    eta: f64,
) -> Result<NodeId, LossError> {
    super::check_nonneg("eta", eta)?;
    contrastive_family_node(tape, z, labels, tau, eta, 0.0)
}

/// Asymmetric focal contrastive loss as a scalar node.
pub fn afcl_node(
    tape: &mut Tape,
    z: NodeId,
    labels: &[usize],
    tau: f64,
    eta: f64,
    gamma: f64,
) -> Result<NodeId, LossError> {
    super::check_nonneg("eta", eta)?;
    super::check_nonneg("gamma", gamma)?;
    contrastive_family_node(tape, z, labels, tau, eta, gamma)
}

fn label_tensors(
    tape: &mut Tape,
    targets: &[u8],
    shape: &[usize],
) -> Result<(NodeId, NodeId), LossError> {
    let y: Vec<f64> = targets
        .iter()
        .map(|&t| match t {
            0 => Ok(0.0),
            1 => Ok(1.0),
            other => Err(LossError::InvalidLabel(other)),
        })
        .collect::<Result<_, _>>()?;
    let complement: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
    let y_node = tape.constant(Tensor::from_parts(shape.to_vec(), y));
    let c_node = tape.constant(Tensor::from_parts(shape.to_vec(), complement));
    Ok((y_node, c_node))
}

/// Summed binary cross-entropy over a probability node.
pub fn ce_probs_node(tape: &mut Tape, probs: NodeId, targets: &[u8]) -> Result<NodeId, LossError> {
    focal_probs_node(tape, probs, targets, 0.0)
}

/// Summed focal loss over a probability node:
/// `Σ −y(1−p)^γ ln p − (1−y) p^γ ln(1−p)`.
pub fn focal_probs_node(
    tape: &mut Tape,
    probs: NodeId,
    targets: &[u8],
    gamma: f64,
) -> Result<NodeId, LossError> {
    super::check_nonneg("gamma", gamma)?;
    if tape.value(probs).len() != targets.len() {
        return Err(LossError::LengthMismatch {
            labels: targets.len(),
            probs: tape.value(probs).len(),
        });
    }
    let shape = tape.value(probs).shape().to_vec();
    let (y, y_c) = label_tensors(tape, targets, &shape)?;
    let p = clamp_unit(tape, probs)?;
    let ones = ones_like(tape, p);
    let q = tape.sub(ones, p)?; // 1 − p
    let log_p = tape.log(p)?;
    let log_q = tape.log(q)?;
    let pos = apply_focus(tape, q, log_p, gamma)?;
    let neg = apply_focus(tape, p, log_q, gamma)?;
    let pos_terms = tape.mul(y, pos)?;
    let neg_terms = tape.mul(y_c, neg)?;
    let total = tape.add(pos_terms, neg_terms)?;
    let sum = tape.sum(total);
    Ok(tape.neg(sum))
}

/// `base^γ · log_term`, with `γ = 0` collapsing to `log_term`.
fn apply_focus(
    tape: &mut Tape,
    base: NodeId,
    log_term: NodeId,
    gamma: f64,
) -> Result<NodeId, LossError> {
    if gamma == 0.0 {
        return Ok(log_term);
    }
    let log_base = tape.log(base)?;
    let scaled = tape.scale(log_base, gamma)?;
    let power = tape.exp(scaled);
    Ok(tape.mul(power, log_term)?)
}

/// Asymmetric multi-label loss over a probability node, mirroring
/// [`super::asl_multilabel`]. The shifted probability `max(p − m, 0)` is
/// clamped to `PROB_EPS` before its logarithm, so a fully shifted-out term
/// contributes ~1e-12 instead of exactly 0.
pub fn asl_node(
    tape: &mut Tape,
    probs: NodeId,
    targets: &[u8],
    params: &LossParams,
) -> Result<NodeId, LossError> {
    params.validate()?;
    if tape.value(probs).len() != targets.len() {
        return Err(LossError::LengthMismatch {
            labels: targets.len(),
            probs: tape.value(probs).len(),
        });
    }
    let shape = tape.value(probs).shape().to_vec();
    let (y, y_c) = label_tensors(tape, targets, &shape)?;
    let p = clamp_unit(tape, probs)?;
    let ones = ones_like(tape, p);
    let q = tape.sub(ones, p)?;
    let log_p = tape.log(p)?;
    let pos = apply_focus(tape, q, log_p, params.gamma_plus)?;
    let pos_terms = tape.mul(y, pos)?;

    let len: usize = shape.iter().product();
    let margin = tape.constant(Tensor::from_parts(shape.clone(), vec![params.margin; len]));
    let raw_shift = tape.sub(p, margin)?;
    let floored = tape.max_with_constant(raw_shift, 0.0)?;
    let shifted = clamp_unit(tape, floored)?;
    let ones2 = ones_like(tape, shifted);
    let one_minus_shift = tape.sub(ones2, shifted)?;
    let log_oms = tape.log(one_minus_shift)?;
    let neg = apply_focus(tape, shifted, log_oms, params.gamma_minus)?;
    let neg_terms = tape.mul(y_c, neg)?;

    let total = tape.add(pos_terms, neg_terms)?;
    let sum = tape.sum(total);
    Ok(tape.neg(sum))
}

/// Mean binary cross-entropy over raw logits, via stable softplus:
/// `mean(y·softplus(−x) + (1−y)·softplus(x))`.
pub fn ce_logits_node(
    tape: &mut Tape,
    logits: NodeId,
    targets: &[u8],
) -> Result<NodeId, LossError> {
    if tape.value(logits).len() != targets.len() {
        return Err(LossError::LengthMismatch {
            labels: targets.len(),
            probs: tape.value(logits).len(),
        });
    }
    let shape = tape.value(logits).shape().to_vec();
    let (y, y_c) = label_tensors(tape, targets, &shape)?;
    let neg_logits = tape.neg(logits);
    let sp_neg = softplus_node(tape, neg_logits)?; // −ln p
    let sp_pos = softplus_node(tape, logits)?; // −ln(1−p)
    let pos_terms = tape.mul(y, sp_neg)?;
    let neg_terms = tape.mul(y_c, sp_pos)?;
    let total = tape.add(pos_terms, neg_terms)?;
    Ok(tape.mean(total))
}

/// Mean focal loss over raw logits. Uses the identities
/// `(1−p)^γ = exp(−γ·softplus(x))` and `p^γ = exp(−γ·softplus(−x))`.
pub fn focal_logits_node(
    tape: &mut Tape,
    logits: NodeId,
    targets: &[u8],
    gamma: f64,
) -> Result<NodeId, LossError> {
    super::check_nonneg("gamma", gamma)?;
    if gamma == 0.0 {
        return ce_logits_node(tape, logits, targets);
    }
    if tape.value(logits).len() != targets.len() {
        return Err(LossError::LengthMismatch {
            labels: targets.len(),
            probs: tape.value(logits).len(),
        });
    }
    let shape = tape.value(logits).shape().to_vec();
    let (y, y_c) = label_tensors(tape, targets, &shape)?;
    let neg_logits = tape.neg(logits);
    let sp_neg = softplus_node(tape, neg_logits)?; // −ln p
    let sp_pos = softplus_node(tape, logits)?; // −ln(1−p)
    let scaled_pos = tape.scale(sp_pos, -gamma)?;
    let focus_pos = tape.exp(scaled_pos); // (1−p)^γ
    let scaled_neg = tape.scale(sp_neg, -gamma)?;
    let focus_neg = tape.exp(scaled_neg); // p^γ
    let pos_inner = tape.mul(focus_pos, sp_neg)?;
    let neg_inner = tape.mul(focus_neg, sp_pos)?;
    let pos_terms = tape.mul(y, pos_inner)?;
    let neg_terms = tape.mul(y_c, neg_inner)?;
    let total = tape.add(pos_terms, neg_terms)?;
    Ok(tape.mean(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{self, FeatureBatch};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureBatch {
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        FeatureBatch::normalize(Tensor::new(vec![n, d], data).unwrap(), labels).unwrap()
    }

    #[test]
    fn graph_losses_match_plain_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let batch = random_batch(&mut rng, 8, 4);
            let mut tape = Tape::new();
            let z = tape.constant(batch.features().clone());
            let cases: Vec<(NodeId, f64)> = vec![
                (
                    contrastive_loss_node(&mut tape, z, batch.labels(), 0.07).unwrap(),
                    losses::contrastive_loss(&batch, 0.07).unwrap(),
                ),
                (
                    focal_contrastive_loss_node(&mut tape, z, batch.labels(), 0.07).unwrap(),
                    losses::focal_contrastive_loss(&batch, 0.07).unwrap(),
                ),
                (
                    acl_node(&mut tape, z, batch.labels(), 0.07, 120.0).unwrap(),
                    losses::acl(&batch, 0.07, 120.0).unwrap(),
                ),
                (
                    afcl_node(&mut tape, z, batch.labels(), 0.07, 300.0, 7.0).unwrap(),
                    losses::afcl(&batch, 0.07, 300.0, 7.0).unwrap(),
                ),
            ];
            for (node, plain) in cases {
                let graph = tape.value(node).scalar_value().unwrap();
                assert!(
                    (graph - plain).abs() <= 1e-9 * plain.abs().max(1.0),
                    "graph {graph} vs plain {plain}"
                );
            }
        }
    }

    #[test]
    fn probability_losses_match_plain_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let k = rng.gen_range(1..6);
            let targets: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2) as u8).collect();
            let probs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..0.99)).collect();
            let params = losses::LossParams {
                gamma_plus: 1.0,
                gamma_minus: 2.0,
                margin: 0.1,
                ..losses::LossParams::default()
            };

            let mut tape = Tape::new();
            let p = tape.constant(Tensor::new(vec![k], probs.clone()).unwrap());
            let ce = ce_probs_node(&mut tape, p, &targets).unwrap();
            let fl = focal_probs_node(&mut tape, p, &targets, 2.0).unwrap();
            let asl = asl_node(&mut tape, p, &targets, &params).unwrap();

            let ce_plain: f64 = targets
                .iter()
                .zip(&probs)
                .map(|(&y, &pv)| losses::ce_loss(y, pv).unwrap())
                .sum();
            let fl_plain: f64 = targets
                .iter()
                .zip(&probs)
                .map(|(&y, &pv)| losses::focal_loss(y, pv, 2.0).unwrap())
                .sum();
            let asl_plain = losses::asl_multilabel(&targets, &probs, &params).unwrap();

            for (node, plain) in [(ce, ce_plain), (fl, fl_plain), (asl, asl_plain)] {
                let graph = tape.value(node).scalar_value().unwrap();
                assert!(
                    (graph - plain).abs() <= 1e-10 * plain.abs().max(1.0),
                    "graph {graph} vs plain {plain}"
                );
            }
        }
    }

    #[test]
    fn logit_losses_match_sigmoid_composition() {
        let sigmoid = |x: f64| {
            if x >= 0.0 {
                1.0 / (1.0 + (-x).exp())
            } else {
                x.exp() / (1.0 + x.exp())
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..100 {
            let n = rng.gen_range(1..8);
            let targets: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let mut tape = Tape::new();
            let x = tape.constant(Tensor::new(vec![n], logits.clone()).unwrap());
            let ce = ce_logits_node(&mut tape, x, &targets).unwrap();
            let fl = focal_logits_node(&mut tape, x, &targets, 2.0).unwrap();

            let ce_ref: f64 = targets
                .iter()
                .zip(&logits)
                .map(|(&y, &l)| losses::ce_loss(y, sigmoid(l)).unwrap())
                .sum::<f64>()
                / n as f64;
            let fl_ref: f64 = targets
                .iter()
                .zip(&logits)
                .map(|(&y, &l)| losses::focal_loss(y, sigmoid(l), 2.0).unwrap())
                .sum::<f64>()
                / n as f64;

            let ce_graph = tape.value(ce).scalar_value().unwrap();
            let fl_graph = tape.value(fl).scalar_value().unwrap();
            assert!((ce_graph - ce_ref).abs() <= 1e-9 * ce_ref.max(1.0));
            assert!((fl_graph - fl_ref).abs() <= 1e-9 * fl_ref.max(1.0));
        }
    }

    #[test]
    fn softplus_is_stable_for_large_inputs() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![2], vec![800.0, -800.0]).unwrap());
        let sp = softplus_node(&mut tape, x).unwrap();
        let v = tape.value(sp).data();
        assert!((v[0] - 800.0).abs() < 1e-9);
        assert!(v[1].abs() < 1e-9);
        assert!(v.iter().all(|t| t.is_finite()));
    }
}
