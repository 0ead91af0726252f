//! Classification and contrastive losses for imbalanced binary tasks.
//!
//! Scalar losses: cross-entropy ([`ce_loss`]), focal loss ([`focal_loss`]),
//! and the asymmetric multi-label loss ([`asl_multilabel`]) with its shifted
//! probability `max(p − m, 0)`.
//!
//! Batch contrastive losses over ℓ2-normalized features: the supervised
//! contrastive loss ([`contrastive_loss`]), its focal variant
//! ([`focal_contrastive_loss`]), and the asymmetric generalizations
//! [`acl`] and [`afcl`], which add an `η`-weighted term contrasting each
//! anchor against its negative pairs. They form a reduction lattice:
//!
//! ```text
//! afcl(η=0, γ=1) = focal_contrastive_loss
//! afcl(γ=0)      = acl
//! acl(η=0)       = contrastive_loss
//! focal_loss(γ=0) = ce_loss
//! ```
//!
//! All contrastive losses use natural logarithms (the optimization
//! convention; the information-theory module uses base 2) and compute the
//! pairwise probabilities of [`pairwise_probs`] with a per-row max shift, so
//! small temperatures such as τ = 0.07 do not overflow. Every function here
//! is pure and thread-safe. The [`graph`] submodule builds the same losses
//! as differentiable tape nodes; [`naive`] holds deliberately unoptimized
//! reference implementations used for cross-checking.

pub mod graph;
pub mod naive;

use crate::autodiff::{AutodiffError, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arguments of every logarithm are clamped to `[PROB_EPS, 1 − PROB_EPS]`
/// after the stable softmax, preventing −∞ without visibly biasing values
/// at 64-bit precision.
pub const PROB_EPS: f64 = 1e-12;

/// Row norms must be within this tolerance of 1 for a batch to be accepted.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("binary label must be 0 or 1, got {0}")]
    InvalidLabel(u8),
    #[error("label and probability vectors have different lengths: {labels} vs {probs}")]
    LengthMismatch { labels: usize, probs: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("a feature batch needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("features need at least 2 dimensions, got {0}")]
    DimensionTooSmall(usize),
    #[error("feature row {row} has norm {norm}, more than 1e-9 away from 1")]
    NotNormalized { row: usize, norm: f64 },
    #[error("batch has {rows} feature rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Hyperparameters shared by the loss family: temperature τ, asymmetry
/// weight η, focusing exponents γ / γ⁺ / γ⁻, and the probability margin m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossParams {
    pub tau: f64,
    pub eta: f64,
    pub gamma: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub margin: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            tau: 0.07,
            eta: 0.0,
            gamma: 0.0,
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            margin: 0.0,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<(), LossError> {
        check_tau(self.tau)?;
        for (name, v) in [
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("gamma_plus", self.gamma_plus),
            ("gamma_minus", self.gamma_minus),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(LossError::InvalidParam(format!(
                    "{name} must be a finite nonnegative number, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.margin) {
            return Err(LossError::InvalidParam(format!(
                "margin must lie in [0, 1], got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<(), LossError> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(LossError::InvalidParam(format!(
            "tau must be a finite positive number, got {tau}"
        )))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<(), LossError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(LossError::InvalidParam(format!(
            "{name} must be a finite nonnegative number, got {v}"
        )))
    }
}

/// Which contrastive loss drives feature learning. The asymmetric variants
/// read `eta` (and `gamma`, for AFCL) from the accompanying [`LossParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastiveKind {
    Cl,
    Fcl,
    Acl,
    Afcl,
}

impl ContrastiveKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cl => "cl",
            Self::Fcl => "fcl",
            Self::Acl => "acl",
            Self::Afcl => "afcl",
        }
    }

    pub fn parse(name: &str) -> Result<Self, LossError> {
        match name.to_ascii_lowercase().as_str() {
            "cl" => Ok(Self::Cl),
            "fcl" => Ok(Self::Fcl),
            "acl" => Ok(Self::Acl),
            "afcl" => Ok(Self::Afcl),
            other => Err(LossError::InvalidParam(format!(
                "unknown contrastive loss {other:?}; expected cl, fcl, acl, or afcl"
            ))),
        }
    }

    /// Plain-value evaluation on a batch.
    pub fn value(self, batch: &FeatureBatch, params: &LossParams) -> Result<f64, LossError> {
        match self {
            Self::Cl => contrastive_loss(batch, params.tau),
            Self::Fcl => focal_contrastive_loss(batch, params.tau),
            Self::Acl => acl(batch, params.tau, params.eta),
            Self::Afcl => afcl(batch, params.tau, params.eta, params.gamma),
        }
    }

    /// The same loss as a differentiable node over normalized features `z`.
    pub fn node(
        self,
        tape: &mut crate::autodiff::Tape,
        z: crate::autodiff::NodeId,
        labels: &[usize],
        params: &LossParams,
    ) -> Result<crate::autodiff::NodeId, LossError> {
        match self {
            Self::Cl => graph::contrastive_loss_node(tape, z, labels, params.tau),
            Self::Fcl => graph::focal_contrastive_loss_node(tape, z, labels, params.tau),
            Self::Acl => graph::acl_node(tape, z, labels, params.tau, params.eta),
            Self::Afcl => graph::afcl_node(tape, z, labels, params.tau, params.eta, params.gamma),
        }
    }
}

impl std::fmt::Display for ContrastiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A mini-batch of ℓ2-normalized feature rows with integer class labels.
#[derive(Debug, Clone)]
pub struct FeatureBatch {
    features: Tensor,
    labels: Vec<usize>,
}

impl FeatureBatch {
    /// Accepts features whose rows are already unit-norm within 1e-9.
    pub fn new(features: Tensor, labels: Vec<usize>) -> Result<Self, LossError> {
        let [n, d] = *features.shape() else {
            return Err(LossError::DimensionTooSmall(0));
        };
        if n < 2 {
            return Err(LossError::BatchTooSmall(n));
        }
        if d < 2 {
            return Err(LossError::DimensionTooSmall(d));
        }
        if labels.len() != n {
            return Err(LossError::LabelCountMismatch {
                rows: n,
                labels: labels.len(),
            });
        }
        for row in 0..n {
            let norm = features.row(row).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(LossError::NotNormalized { row, norm });
            }
        }
        Ok(Self { features, labels })
    }

    /// ℓ2-normalizes each row, then builds the batch.
    pub fn normalize(features: Tensor, labels: Vec<usize>) -> Result<Self, LossError> {
        let [n, d] = *features.shape() else {
            return Err(LossError::DimensionTooSmall(0));
        };
        let mut data = features.data().to_vec();
        for i in 0..n {
            let row = &mut data[i * d..(i + 1) * d];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(LossError::NotNormalized { row: i, norm });
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        Self::new(Tensor::new(vec![n, d], data)?, labels)
    }

    /// Number of anchors in the batch.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least two rows
    }

    /// Feature dimensionality.
    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }
}

fn check_probability(p: f64) -> Result<f64, LossError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p.clamp(PROB_EPS, 1.0 - PROB_EPS))
    } else {
        Err(LossError::ProbabilityOutOfRange(p))
    }
}

fn check_label(y: u8) -> Result<f64, LossError> {
    match y {
        0 => Ok(0.0),
        1 => Ok(1.0),
        other => Err(LossError::InvalidLabel(other)),
    }
}

/// Binary cross-entropy loss `−y ln p − (1−y) ln(1−p)`.
pub fn ce_loss(y: u8, p: f64) -> Result<f64, LossError> {
    let yf = check_label(y)?;
    let p = check_probability(p)?;
    Ok(-yf * p.ln() - (1.0 - yf) * (1.0 - p).ln())
}

/// Focal loss `−y (1−p)^γ ln p − (1−y) p^γ ln(1−p)`; reduces to [`ce_loss`]
/// at γ = 0.
pub fn focal_loss(y: u8, p: f64, gamma: f64) -> Result<f64, LossError> {
    let yf = check_label(y)?;
    check_nonneg("gamma", gamma)?;
    let p = check_probability(p)?;
    Ok(-yf * (1.0 - p).powf(gamma) * p.ln() - (1.0 - yf) * p.powf(gamma) * (1.0 - p).ln())
}

/// Asymmetric multi-label loss over `K` labels: the positive terms use the
/// focusing exponent γ⁺, the negative terms use γ⁻ applied to the shifted
/// probability `p⁽ᵐ⁾ = max(p − m, 0)`.
pub fn asl_multilabel(y: &[u8], p: &[f64], params: &LossParams) -> Result<f64, LossError> {
    if y.len() != p.len() {
        return Err(LossError::LengthMismatch {
            labels: y.len(),
            probs: p.len(),
        });
    }
    params.validate()?;
    let mut total = 0.0;
    for (&yi, &pi) in y.iter().zip(p) {
        let yf = check_label(yi)?;
        let pc = check_probability(pi)?;
        if yf == 1.0 {
            total -= (1.0 - pc).powf(params.gamma_plus) * pc.ln();
        } else {
            let shifted = (pi - params.margin).max(0.0);
            if shifted > 0.0 {
                let sc = shifted.clamp(PROB_EPS, 1.0 - PROB_EPS);
                total -= sc.powf(params.gamma_minus) * (1.0 - sc).ln();
            }
            // shifted = 0 contributes nothing: ln(1 − 0) = 0.
        }
    }
    Ok(total)
}

/// Positive-pair indices for anchor `i`: same label, excluding `i` itself.
pub(crate) fn positives(labels: &[usize], i: usize) -> Vec<usize> {
    (0..labels.len())
        .filter(|&j| j != i && labels[j] == labels[i])
        .collect()
}

/// Negative-pair indices for anchor `i`: different label.
pub(crate) fn negatives(labels: &[usize], i: usize) -> Vec<usize> {
    (0..labels.len())
        .filter(|&j| j != i && labels[j] != labels[i])
        .collect()
}

/// Pairwise same-class probabilities `p_ij` of the softmax over the
/// temperature-scaled cosine similarities of each anchor to every other
/// feature. Row `i` sums to 1 over `j ≠ i`; the diagonal is masked to 0.
///
/// Computed with a per-row max shift before exponentiation: τ = 0.07 scales
/// similarities by ≈14, which overflows naive exponentials for large
/// batches.
#[allow(clippy::needless_range_loop)]
pub fn pairwise_probs(batch: &FeatureBatch, tau: f64) -> Result<Tensor, LossError> {
    check_tau(tau)?;
    let n = batch.len();
    let mut probs = vec![0.0; n * n];
    for i in 0..n {
        let row = batch.row(i);
        let mut scaled = vec![0.0; n];
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            if j == i {
                continue;
            }
            let sim: f64 = row.iter().zip(batch.row(j)).map(|(a, b)| a * b).sum();
            scaled[j] = sim / tau;
            max = max.max(scaled[j]);
        }
        let mut denom = 0.0;
        for j in 0..n {
            if j != i {
                let e = (scaled[j] - max).exp();
                probs[i * n + j] = e;
                denom += e;
            }
        }
        for j in 0..n {
            probs[i * n + j] /= denom;
        }
    }
    Ok(Tensor::from_parts(vec![n, n], probs))
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Supervised contrastive loss `−Σᵢ (1/|Pᵢ|) Σ_{j∈Pᵢ} ln p_ij`.
/// Anchors with no positive pair contribute 0.
pub fn contrastive_loss(batch: &FeatureBatch, tau: f64) -> Result<f64, LossError> {
    let probs = pairwise_probs(batch, tau)?;
    let mut total = 0.0;
    for i in 0..batch.len() {
        let pos = positives(batch.labels(), i);
        if pos.is_empty() {
            continue;
        }
        let inner: f64 = pos.iter().map(|&j| clamp_prob(probs.get2(i, j)).ln()).sum();
        total -= inner / pos.len() as f64;
    }
    Ok(total)
}

/// Focal contrastive loss `−Σᵢ (1/|Pᵢ|) Σ_{j∈Pᵢ} (1 − p_ij) ln p_ij`.
pub fn focal_contrastive_loss(batch: &FeatureBatch, tau: f64) -> Result<f64, LossError> {
    let probs = pairwise_probs(batch, tau)?;
    let mut total = 0.0;
    for i in 0..batch.len() {
        let pos = positives(batch.labels(), i);
        if pos.is_empty() {
            continue;
        }
        let inner: f64 = pos
            .iter()
            .map(|&j| {
                let p = clamp_prob(probs.get2(i, j));
                (1.0 - p) * p.ln()
            })
            .sum();
        total -= inner / pos.len() as f64;
    }
    Ok(total)
}

/// Asymmetric contrastive loss `−Σᵢ (Lᵢ⁺ + η Lᵢ⁻)` with
/// `Lᵢ⁺ = (1/|Pᵢ|) Σ_{Pᵢ} ln p_ij` and `Lᵢ⁻ = (1/|Nᵢ|) Σ_{Nᵢ} ln(1 − p_ij)`.
///
/// An anchor with an empty positive (or negative) set contributes nothing
/// through that term, so a lone minority sample still pushes its negatives
/// away while the plain contrastive loss would ignore it entirely.
pub fn acl(batch: &FeatureBatch, tau: f64, eta: f64) -> Result<f64, LossError> {
    check_nonneg("eta", eta)?;
    let probs = pairwise_probs(batch, tau)?;
    let mut total = 0.0;
    for i in 0..batch.len() {
        total -= positive_term(&probs, batch.labels(), i, 0.0)
            + eta * negative_term(&probs, batch.labels(), i);
    }
    Ok(total)
}

/// Asymmetric focal contrastive loss: [`acl`] with the positive term
/// focused by `(1 − p_ij)^γ`. The negative term is left unmodified; the
/// pairwise probabilities are typically so small that a `p^γ` factor would
/// make it vanish.
pub fn afcl(batch: &FeatureBatch, tau: f64, eta: f64, gamma: f64) -> Result<f64, LossError> {
    check_nonneg("eta", eta)?;
    check_nonneg("gamma", gamma)?;
    let probs = pairwise_probs(batch, tau)?;
    let mut total = 0.0;
    for i in 0..batch.len() {
        total -= positive_term(&probs, batch.labels(), i, gamma)
            + eta * negative_term(&probs, batch.labels(), i);
    }
    Ok(total)
}

/// `Lᵢ⁺` with focusing exponent γ (γ = 0 recovers the plain mean log-prob).
fn positive_term(probs: &Tensor, labels: &[usize], i: usize, gamma: f64) -> f64 {
    let pos = positives(labels, i);
    if pos.is_empty() {
        return 0.0;
    }
    let sum: f64 = pos
        .iter()
        .map(|&j| {
            let p = clamp_prob(probs.get2(i, j));
            if gamma == 0.0 {
                p.ln()
            } else {
                (1.0 - p).powf(gamma) * p.ln()
            }
        })
        .sum();
    sum / pos.len() as f64
}

fn negative_term(probs: &Tensor, labels: &[usize], i: usize) -> f64 {
    let neg = negatives(labels, i);
    if neg.is_empty() {
        return 0.0;
    }
    let sum: f64 = neg
        .iter()
        .map(|&j| (1.0 - clamp_prob(probs.get2(i, j))).ln())
        .sum();
    sum / neg.len() as f64
}
