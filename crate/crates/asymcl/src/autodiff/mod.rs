//! Minimal reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! The building blocks are [`Tensor`] (immutable dense values) and [`Tape`]
//! (a single-writer record of operations). Distinct tapes are independent and
//! may run on different threads; a tape itself is confined to one thread.

mod tape;
mod tensor;

pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors raised while building tensors or differentiation graphs.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape {shape:?} does not match data length {len}")]
    ShapeDataMismatch { shape: Vec<usize>, len: usize },
    #[error("zero-sized tensors are not supported")]
    EmptyTensor,
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("{op}: operand shapes {lhs:?} and {rhs:?} do not conform")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: expected a rank-{expected} tensor, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("log requires strictly positive inputs, found {value}")]
    LogDomain { value: f64 },
    #[error("l2_normalize_rows: row {row} has zero norm")]
    ZeroRow { row: usize },
    #[error("softmax mask excludes every entry of row {row}")]
    EmptyMaskRow { row: usize },
    #[error("mask entries must be 0 or 1, found {value}")]
    InvalidMask { value: f64 },
    #[error("expected a scalar, got shape {shape:?}")]
    NonScalar { shape: Vec<usize> },
}
