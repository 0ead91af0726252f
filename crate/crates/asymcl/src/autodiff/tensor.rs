//! Dense row-major arrays of 64-bit floats.

use super::AutodiffError;

/// A dense tensor: a shape and a flat row-major `f64` buffer.
///
/// Scalars carry the empty shape `[]`. Zero-sized tensors are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, validating that the shape matches the data length
    /// and that every entry is finite.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, AutodiffError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(AutodiffError::ShapeDataMismatch {
                shape,
                len: data.len(),
            });
        }
        if data.is_empty() {
            return Err(AutodiffError::EmptyTensor);
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(AutodiffError::NonFinite { index, value });
        }
        Ok(Self { shape, data })
    }

    /// Builds a rank-2 tensor from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AutodiffError> {
        if rows.is_empty() {
            return Err(AutodiffError::EmptyTensor);
        }
        let cols = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(AutodiffError::ShapeDataMismatch {
                shape: vec![rows.len(), cols],
                len: bad.len(),
            });
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(vec![rows.len(), cols], data)
    }

    /// A rank-0 scalar.
    pub fn scalar(value: f64) -> Result<Self, AutodiffError> {
        Self::new(Vec::new(), vec![value])
    }

    /// A tensor of the given shape filled with a constant.
    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self, AutodiffError> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![value; len])
    }

    /// Zeros with the same shape as `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    /// Internal constructor for op outputs; skips the finiteness scan.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // zero-sized tensors are rejected at construction
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// True when the tensor holds exactly one entry, whatever the rank.
    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// The single entry of a scalar tensor.
    pub fn scalar_value(&self) -> Result<f64, AutodiffError> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(AutodiffError::NonScalar {
                shape: self.shape.clone(),
            })
        }
    }

    /// Rows and columns of a rank-2 tensor.
    pub(crate) fn dims2(&self, op: &'static str) -> Result<(usize, usize), AutodiffError> {
        if self.shape.len() == 2 {
            Ok((self.shape[0], self.shape[1]))
        } else {
            Err(AutodiffError::RankMismatch {
                op,
                expected: 2,
                shape: self.shape.clone(),
            })
        }
    }

    /// Entry `(r, c)` of a rank-2 tensor. Callers guarantee bounds.
    pub fn get2(&self, r: usize, c: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[r * self.shape[1] + c]
    }

    /// Row `r` of a rank-2 tensor as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }
}
