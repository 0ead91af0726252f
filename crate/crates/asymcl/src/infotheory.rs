//! Exact discrete information theory: entropy, joint and conditional entropy,
//! mutual information, KL divergence, and cross-entropy, all in bits
//! (logarithms to base 2).
//!
//! Every quantity is computed over finite distributions ([`Pmf`],
//! [`JointPmf`]) with the convention `0·log 0 = 0`, implemented by skipping
//! zero-probability terms rather than relying on floating-point limits.
//! Sums are compensated (Kahan) so identities such as
//! `H(X;X̂) = H(X) + D_KL(X‖X̂)` hold to near machine precision.
//!
//! All functions are pure and safe to call concurrently.

use thiserror::Error;

/// Tolerance for accepting a distribution as normalized. Inputs whose total
/// mass is within this bound of 1 are rescaled exactly; anything further off
/// is rejected, since silent renormalization would hide caller bugs.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InfoError {
    #[error("a probability distribution needs at least one outcome")]
    Empty,
    #[error("probability {value} at index {index} is not a finite nonnegative number")]
    InvalidEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, more than 1e-9 away from 1")]
    NotNormalized { sum: f64 },
    #[error("distributions have different sizes: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("divergence undefined: p has mass {mass} at outcome {index} where q has none")]
    SupportViolation { index: usize, mass: f64 },
}

/// Compensated (Kahan) summation over an iterator of terms.
fn kahan_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for t in terms {
        let y = t - c;
        let s = sum + y;
        c = (s - sum) - y;
        sum = s;
    }
    sum
}

/// A finite probability mass function over outcomes `0..n`.
///
/// Entries are validated nonnegative and rescaled to sum exactly to 1 when
/// the raw total is within [`NORMALIZATION_TOLERANCE`] of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self, InfoError> {
        if probs.is_empty() {
            return Err(InfoError::Empty);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(InfoError::InvalidEntry { index, value });
            }
        }
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(InfoError::NotNormalized { sum });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs })
    }

    /// The uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self, InfoError> {
        if n == 0 {
            return Err(InfoError::Empty);
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one outcome
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A joint distribution over a grid of outcomes; rows index the variable X,
/// columns index Y.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    probs: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl JointPmf {
    /// Builds a joint distribution from a row-major grid.
    pub fn new(grid: &[Vec<f64>]) -> Result<Self, InfoError> {
        if grid.is_empty() || grid[0].is_empty() {
            return Err(InfoError::Empty);
        }
        let cols = grid[0].len();
        if let Some(bad) = grid.iter().find(|r| r.len() != cols) {
            return Err(InfoError::SizeMismatch {
                left: cols,
                right: bad.len(),
            });
        }
        let flat: Vec<f64> = grid.iter().flatten().copied().collect();
        Self::from_flat(grid.len(), cols, flat)
    }

    pub fn from_flat(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self, InfoError> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(InfoError::SizeMismatch {
                left: rows * cols,
                right: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(InfoError::InvalidEntry { index, value });
            }
        }
        let sum = kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(InfoError::NotNormalized { sum });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    /// Marginal distribution of X (sums over columns).
    pub fn row_marginal(&self) -> Pmf {
        let probs: Vec<f64> = (0..self.rows)
            .map(|x| kahan_sum((0..self.cols).map(|y| self.get(x, y))))
            .collect();
        Pmf::new(probs).expect("marginal of a valid joint is a valid pmf")
    }

    /// Marginal distribution of Y (sums over rows).
    pub fn col_marginal(&self) -> Pmf {
        let probs: Vec<f64> = (0..self.cols)
            .map(|y| kahan_sum((0..self.rows).map(|x| self.get(x, y))))
            .collect();
        Pmf::new(probs).expect("marginal of a valid joint is a valid pmf")
    }

    /// The same distribution with the roles of X and Y swapped.
    pub fn transposed(&self) -> JointPmf {
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                probs[y * self.rows + x] = self.get(x, y);
            }
        }
        JointPmf {
            probs,
            rows: self.cols,
            cols: self.rows,
        }
    }
}

/// Shannon entropy `H(X) = −Σ p_x log₂ p_x`, in bits.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_of_terms(p.probs.iter().copied())
}

fn entropy_of_terms<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    kahan_sum(
        probs
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2()),
    )
}

/// Entropy of the joint variable `(X, Y)`.
pub fn joint_entropy(j: &JointPmf) -> f64 {
    entropy_of_terms(j.probs.iter().copied())
}

/// Conditional entropy `H(Y | X) = Σ_x p_x · H(Y | X = x)`, with X on rows.
///
/// Computed from the per-row conditional distributions rather than by
/// subtracting entropies, so the additivity identity
/// `H(X, Y) = H(X) + H(Y | X)` is a genuine numerical check.
pub fn conditional_entropy(j: &JointPmf) -> f64 {
    kahan_sum((0..j.rows).map(|x| {
        let px = kahan_sum((0..j.cols).map(|y| j.get(x, y)));
        if px == 0.0 {
            return 0.0;
        }
        px * entropy_of_terms((0..j.cols).map(|y| j.get(x, y) / px))
    }))
}

/// Mutual information `I(X; Y) = H(Y) − H(Y | X)`, in bits. Symmetric in its
/// arguments up to floating-point roundoff and nonnegative.
pub fn mutual_information(j: &JointPmf) -> f64 {
    entropy(&j.col_marginal()) - conditional_entropy(j)
}

/// KL divergence `D(p ‖ q) = Σ p_x log₂(p_x / q_x)`, in bits.
///
/// Undefined (an error, not `+∞`) when `p` puts mass where `q` has none, so
/// callers can distinguish "undefined" from "large".
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64, InfoError> {
    check_support(p.probs(), q.probs())?;
    Ok(kahan_sum(
        p.probs
            .iter()
            .zip(&q.probs)
            .filter(|(&pp, _)| pp > 0.0)
            .map(|(&pp, &qq)| pp * (pp / qq).log2()),
    ))
}

/// Cross-entropy `H(p; q) = −Σ p_x log₂ q_x`, in bits. Satisfies
/// `H(p; q) = H(p) + D(p ‖ q)` and reduces to `H(p)` at `q = p`.
pub fn cross_entropy(p: &Pmf, q: &Pmf) -> Result<f64, InfoError> {
    check_support(p.probs(), q.probs())?;
    Ok(kahan_sum(
        p.probs
            .iter()
            .zip(&q.probs)
            .filter(|(&pp, _)| pp > 0.0)
            .map(|(&pp, &qq)| -pp * qq.log2()),
    ))
}

fn check_support(p: &[f64], q: &[f64]) -> Result<(), InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::SizeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for (index, (&pp, &qq)) in p.iter().zip(q).enumerate() {
        if pp > 0.0 && qq == 0.0 {
            return Err(InfoError::SupportViolation { index, mass: pp });
        }
    }
    Ok(())
}

/// Conditional cross-entropy: the expectation, over the true joint, of the
/// negative log of the estimator's conditional probability of Y given X
/// (X on rows for both arguments).
///
/// With `est = truth` this collapses to [`conditional_entropy`]; with a
/// single row (deterministic X) it collapses to the [`cross_entropy`] of the
/// row distributions.
pub fn conditional_cross_entropy(truth: &JointPmf, est: &JointPmf) -> Result<f64, InfoError> {
    if truth.rows != est.rows || truth.cols != est.cols {
        return Err(InfoError::SizeMismatch {
            left: truth.probs.len(),
            right: est.probs.len(),
        });
    }
    let mut terms = Vec::with_capacity(truth.probs.len());
    for x in 0..truth.rows {
        let qx = kahan_sum((0..est.cols).map(|y| est.get(x, y)));
        for y in 0..truth.cols {
            let p = truth.get(x, y);
            if p == 0.0 {
                continue;
            }
            let q = est.get(x, y);
            if q == 0.0 || qx == 0.0 {
                return Err(InfoError::SupportViolation {
                    index: x * truth.cols + y,
                    mass: p,
                });
            }
            terms.push(-p * (q / qx).log2());
        }
    }
    Ok(kahan_sum(terms))
}

/// Entropy of the uniform distribution over `n` outcomes; equals `log₂ n`.
pub fn uniform_entropy(n: usize) -> Result<f64, InfoError> {
    Ok(entropy(&Pmf::uniform(n)?))
}
