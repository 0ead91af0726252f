//! Dataset acquisition and imbalance-scenario construction.
//!
//! Sources are a seeded two-Gaussian synthetic generator and an IDX-format
//! loader for MNIST-family image files (big-endian magic + dimensions + raw
//! bytes, bit-exact). On top of those sit exact-count class rebalancing
//! ([`apply_scenario`]), a stratified train/test split, and optional
//! horizontal-flip augmentation for image data.
//!
//! Every operation draws all randomness from an explicit seed; nothing here
//! reads ambient entropy.

use crate::autodiff::{AutodiffError, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// IDX magic number for unsigned-byte rank-3 image files.
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
/// IDX magic number for unsigned-byte rank-1 label files.
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("IDX format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("dataset is empty")]
    Empty,
    #[error("label {label} at index {index} is not binary")]
    LabelNotBinary { index: usize, label: u8 },
    #[error("{samples} samples but {labels} labels")]
    CountMismatch { samples: usize, labels: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("class {class} has only {available} samples, {requested} requested")]
    InsufficientClass {
        class: u8,
        available: usize,
        requested: usize,
    },
    #[error("class {class} has {count} samples; at least 2 are required to split")]
    ClassTooSmall { class: u8, count: usize },
    #[error("sample dimension {dim} is not divisible by image width {width}")]
    NotImageShaped { dim: usize, width: usize },
    #[error("invalid train fraction {0}; must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error(transparent)]
    Tensor(#[from] AutodiffError),
}

/// Where a dataset came from; flip augmentation only applies to image data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    Idx,
}

/// A binary-labeled dataset: an `N×D` sample matrix and `N` labels in
/// `{0, 1}`.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Tensor,
    labels: Vec<u8>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        samples: Tensor,
        labels: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        let [n, _d] = *samples.shape() else {
            return Err(DataError::Format {
                offset: 0,
                message: format!("samples must be a rank-2 matrix, got {:?}", samples.shape()),
            });
        };
        if n == 0 {
            return Err(DataError::Empty);
        }
        if labels.len() != n {
            return Err(DataError::CountMismatch {
                samples: n,
                labels: labels.len(),
            });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(DataError::LabelNotBinary { index, label });
        }
        Ok(Self {
            samples,
            labels,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty datasets
    }

    pub fn dim(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn samples(&self) -> &Tensor {
        &self.samples
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    /// Counts of class-0 and class-1 samples.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - ones, ones)
    }

    fn subset(&self, indices: &[usize]) -> Result<Dataset, DataError> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(
            Tensor::new(vec![indices.len(), d], data)?,
            labels,
            self.provenance,
        )
    }

    /// Writes `label,f0,f1,…` rows with full `f64` round-trip precision.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), DataError> {
        let mut out = String::new();
        out.push_str("label");
        for j in 0..self.dim() {
            out.push_str(&format!(",f{j}"));
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&self.labels[i].to_string());
            for v in self.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a dataset previously written by [`Dataset::write_csv`].
    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Dataset, DataError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(DataError::Empty)?;
        let dim = header.split(',').count().saturating_sub(1);
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let label: u8 =
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| DataError::Format {
                        offset: lineno + 2,
                        message: "bad label field".into(),
                    })?;
            labels.push(label);
            for f in fields {
                data.push(f.parse::<f64>().map_err(|e| DataError::Format {
                    offset: lineno + 2,
                    message: e.to_string(),
                })?);
            }
        }
        Dataset::new(
            Tensor::new(vec![labels.len(), dim], data)?,
            labels,
            Provenance::Synthetic,
        )
    }
}

/// An imbalance scenario: the majority-class share of a fixed-size dataset,
/// written as a ratio such as `90:10`. Class 0 is the majority class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub majority_fraction: f64,
    pub total_size: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(majority_fraction: f64, total_size: usize, seed: u64) -> Result<Self, DataError> {
        if !(0.5..1.0).contains(&majority_fraction) {
            return Err(DataError::InvalidScenario(format!(
                "majority fraction {majority_fraction} must lie in [0.5, 1.0)"
            )));
        }
        let spec = Self {
            majority_fraction,
            total_size,
            seed,
        };
        if spec.majority_count() == 0 || spec.minority_count() == 0 {
            return Err(DataError::InvalidScenario(format!(
                "total size {total_size} leaves a class empty at ratio {}",
                spec.ratio_label()
            )));
        }
        Ok(spec)
    }

    /// Parses a `"majority:minority"` ratio such as `"90:10"` or `"3:1"`.
    pub fn from_ratio(ratio: &str, total_size: usize, seed: u64) -> Result<Self, DataError> {
        let (a, b) = ratio
            .split_once(':')
            .ok_or_else(|| DataError::InvalidScenario(format!("bad ratio {ratio:?}")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| DataError::InvalidScenario(format!("bad ratio {ratio:?}")))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| DataError::InvalidScenario(format!("bad ratio {ratio:?}")))?;
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 || b <= 0.0 || a < b {
            return Err(DataError::InvalidScenario(format!(
                "ratio {ratio:?} must be majority:minority with majority >= minority > 0"
            )));
        }
        Self::new(a / (a + b), total_size, seed)
    }

    pub fn majority_count(&self) -> usize {
        (self.majority_fraction * self.total_size as f64).round() as usize
    }

    pub fn minority_count(&self) -> usize {
        self.total_size - self.majority_count()
    }

    /// The scenario as a percentage ratio string, e.g. `"90:10"`.
    pub fn ratio_label(&self) -> String {
        let a = (self.majority_fraction * 100.0).round() as u32;
        format!("{}:{}", a, 100 - a)
    }
}

/// Samples two Gaussian blobs with unit covariance: class 0 (majority) and
/// class 1 (minority) centered `center_separation` apart along the first
/// axis. Counts follow the scenario exactly; everything is seeded.
pub fn generate_gaussians(
    dim: usize,
    center_separation: f64,
    spec: &ScenarioSpec,
) -> Result<Dataset, DataError> {
    if dim < 2 {
        return Err(DataError::InvalidScenario(format!(
            "dimension {dim} must be at least 2"
        )));
    }
    if !(center_separation.is_finite() && center_separation >= 0.0) {
        return Err(DataError::InvalidScenario(format!(
            "separation {center_separation} must be finite and nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = center_separation / 2.0;
    let counts = [spec.majority_count(), spec.minority_count()];
    let mut data = Vec::with_capacity(spec.total_size * dim);
    let mut labels = Vec::with_capacity(spec.total_size);
    for (class, &count) in counts.iter().enumerate() {
        let center = if class == 0 { -half } else { half };
        for _ in 0..count {
            for axis in 0..dim {
                let noise: f64 = rng.sample(StandardNormal);
                data.push(if axis == 0 { center + noise } else { noise });
            }
            labels.push(class as u8);
        }
    }
    Dataset::new(
        Tensor::new(vec![spec.total_size, dim], data)?,
        labels,
        Provenance::Synthetic,
    )
}

struct IdxReader {
    bytes: Vec<u8>,
    offset: usize,
}

impl IdxReader {
    fn open(path: &Path) -> Result<Self, DataError> {
        Ok(Self {
            bytes: fs::read(path)?,
            offset: 0,
        })
    }

    fn read_u32_be(&mut self) -> Result<u32, DataError> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(DataError::Format {
                offset: self.offset,
                message: "truncated file while reading a 32-bit field".into(),
            });
        }
        let raw: [u8; 4] = self.bytes[self.offset..end].try_into().expect("4 bytes");
        self.offset = end;
        Ok(u32::from_be_bytes(raw))
    }

    fn expect_magic(&mut self, expected: u32) -> Result<(), DataError> {
        let at = self.offset;
        let found = self.read_u32_be()?;
        if found != expected {
            return Err(DataError::Format {
                offset: at,
                message: format!("bad magic number {found:#010x}, expected {expected:#010x}"),
            });
        }
        Ok(())
    }

    fn read_bytes(&mut self, count: usize) -> Result<&[u8], DataError> {
        let end = self.offset + count;
        if end > self.bytes.len() {
            return Err(DataError::Format {
                offset: self.offset,
                message: format!(
                    "truncated file: {count} bytes expected, {} available",
                    self.bytes.len() - self.offset
                ),
            });
        }
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }
}

/// Loads an IDX image/label file pair, keeps only the two requested classes,
/// and remaps them to a binary task (`class_a → 0`, `class_b → 1`). Pixels
/// are scaled to `[0, 1]` by dividing by 255; images flatten row-major to
/// `D = rows × cols`.
pub fn load_idx<P: AsRef<Path>>(
    images_path: P,
    labels_path: P,
    class_a: u8,
    class_b: u8,
) -> Result<Dataset, DataError> {
    let mut images = IdxReader::open(images_path.as_ref())?;
    images.expect_magic(IDX_IMAGE_MAGIC)?;
    let count = images.read_u32_be()? as usize;
    let rows = images.read_u32_be()? as usize;
    let cols = images.read_u32_be()? as usize;
    let dim = rows * cols;
    let pixel_bytes = images.read_bytes(count * dim)?.to_vec();

    let mut labels = IdxReader::open(labels_path.as_ref())?;
    labels.expect_magic(IDX_LABEL_MAGIC)?;
    let label_count = labels.read_u32_be()? as usize;
    if label_count != count {
        return Err(DataError::Format {
            offset: 4,
            message: format!("label count {label_count} does not match image count {count}"),
        });
    }
    let label_bytes = labels.read_bytes(count)?.to_vec();

    let mut data = Vec::new();
    let mut kept_labels = Vec::new();
    for (i, &label) in label_bytes.iter().enumerate() {
        let remapped = if label == class_a {
            0
        } else if label == class_b {
            1
        } else {
            continue;
        };
        kept_labels.push(remapped);
        data.extend(
            pixel_bytes[i * dim..(i + 1) * dim]
                .iter()
                .map(|&p| f64::from(p) / 255.0),
        );
    }
    if kept_labels.is_empty() {
        return Err(DataError::Empty);
    }
    Dataset::new(
        Tensor::new(vec![kept_labels.len(), dim], data)?,
        kept_labels,
        Provenance::Idx,
    )
}

/// Writes images as an IDX unsigned-byte file (fixture/export helper).
pub fn write_idx_images<P: AsRef<Path>>(
    path: P,
    images: &[Vec<u8>],
    rows: usize,
    cols: usize,
) -> Result<(), DataError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&IDX_IMAGE_MAGIC.to_be_bytes())?;
    file.write_all(&(images.len() as u32).to_be_bytes())?;
    file.write_all(&(rows as u32).to_be_bytes())?;
    file.write_all(&(cols as u32).to_be_bytes())?;
    for image in images {
        if image.len() != rows * cols {
            return Err(DataError::Format {
                offset: 0,
                message: format!("image has {} pixels, expected {}", image.len(), rows * cols),
            });
        }
        file.write_all(image)?;
    }
    Ok(())
}

/// Writes labels as an IDX unsigned-byte file (fixture/export helper).
pub fn write_idx_labels<P: AsRef<Path>>(path: P, labels: &[u8]) -> Result<(), DataError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&IDX_LABEL_MAGIC.to_be_bytes())?;
    file.write_all(&(labels.len() as u32).to_be_bytes())?;
    file.write_all(labels)?;
    Ok(())
}

/// Subsamples the dataset without replacement to the scenario's exact class
/// counts: `majority_count()` of class 0, `minority_count()` of class 1.
pub fn apply_scenario(dataset: &Dataset, spec: &ScenarioSpec) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let wanted = [spec.majority_count(), spec.minority_count()];
    let mut chosen = Vec::with_capacity(spec.total_size);
    for class in 0..2u8 {
        let mut pool: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels()[i] == class)
            .collect();
        let requested = wanted[class as usize];
        if pool.len() < requested {
            return Err(DataError::InsufficientClass {
                class,
                available: pool.len(),
                requested,
            });
        }
        shuffle(&mut pool, &mut rng);
        chosen.extend_from_slice(&pool[..requested]);
    }
    dataset.subset(&chosen)
}

/// Stratified train/test split: each class is shuffled and split
/// independently, with `floor(count · train_fraction)` samples going to the
/// train side. The two parts are disjoint and their union is the input.
pub fn split_train_test(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction.is_finite() && 0.0 < train_fraction && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..2u8 {
        let mut pool: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels()[i] == class)
            .collect();
        if pool.is_empty() {
            continue;
        }
        if pool.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                count: pool.len(),
            });
        }
        shuffle(&mut pool, &mut rng);
        let take = (pool.len() as f64 * train_fraction).floor() as usize;
        train_idx.extend_from_slice(&pool[..take]);
        test_idx.extend_from_slice(&pool[take..]);
    }
    Ok((dataset.subset(&train_idx)?, dataset.subset(&test_idx)?))
}

/// Mirrors each sample horizontally with probability 1/2 (labels unchanged).
/// Synthetic data is returned untouched with a warning: coordinates are not
/// pixels.
pub fn augment_flip(
    dataset: &Dataset,
    image_width: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if dataset.provenance() != Provenance::Idx {
        log::warn!("flip augmentation skipped: dataset is not image data");
        return Ok(dataset.clone());
    }
    if image_width == 0 || !dataset.dim().is_multiple_of(image_width) {
        return Err(DataError::NotImageShaped {
            dim: dataset.dim(),
            width: image_width,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dataset.dim();
    let mut data = Vec::with_capacity(dataset.len() * d);
    for i in 0..dataset.len() {
        if rng.gen_bool(0.5) {
            data.extend(hflip(dataset.row(i), image_width));
        } else {
            data.extend_from_slice(dataset.row(i));
        }
    }
    Dataset::new(
        Tensor::new(vec![dataset.len(), d], data)?,
        dataset.labels().to_vec(),
        dataset.provenance(),
    )
}

/// Horizontal mirror of one row-major flattened image.
pub fn hflip(sample: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(sample.len());
    for row in sample.chunks(width) {
        out.extend(row.iter().rev());
    }
    out
}

/// Fisher-Yates shuffle driven by the given RNG.
fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        indices.swap(i, rng.gen_range(0..=i));
    }
}

pub(crate) fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    shuffle(&mut indices, rng);
    indices
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_counts_are_exact() {
        let cases = [
            ("50:50", 500, 500),
            ("55:45", 550, 450),
            ("60:40", 600, 400),
            ("65:35", 650, 350),
            ("70:30", 700, 300),
            ("75:25", 750, 250),
            ("80:20", 800, 200),
            ("85:15", 850, 150),
            ("90:10", 900, 100),
            ("95:5", 950, 50),
            ("98:2", 980, 20),
        ];
        for (ratio, major, minor) in cases {
            let spec = ScenarioSpec::from_ratio(ratio, 1000, 0).unwrap();
            assert_eq!(spec.majority_count(), major, "{ratio}");
            assert_eq!(spec.minority_count(), minor, "{ratio}");
            assert_eq!(spec.ratio_label(), ratio);
        }
    }

    #[test]
    fn scenario_rejects_bad_ratios() {
        assert!(ScenarioSpec::from_ratio("10:90", 1000, 0).is_err());
        assert!(ScenarioSpec::from_ratio("fifty:fifty", 1000, 0).is_err());
        assert!(ScenarioSpec::from_ratio("99.9:0.1", 100, 0).is_err()); // minority empty
    }

    #[test]
    fn gaussians_match_scenario_counts() {
        let spec = ScenarioSpec::from_ratio("98:2", 1000, 7).unwrap();
        let d = generate_gaussians(4, 6.0, &spec).unwrap();
        assert_eq!(d.class_counts(), (980, 20));
        assert_eq!(d.dim(), 4);
        let spec = ScenarioSpec::from_ratio("50:50", 1000, 7).unwrap();
        assert_eq!(
            generate_gaussians(2, 1.0, &spec).unwrap().class_counts(),
            (500, 500)
        );
    }

    #[test]
    fn gaussians_are_seed_deterministic() {
        let spec = ScenarioSpec::from_ratio("80:20", 100, 3).unwrap();
        let a = generate_gaussians(3, 2.0, &spec).unwrap();
        let b = generate_gaussians(3, 2.0, &spec).unwrap();
        assert_eq!(a.samples().data(), b.samples().data());
    }

    #[test]
    fn gaussian_centers_are_separated() {
        let spec = ScenarioSpec::from_ratio("50:50", 2000, 11).unwrap();
        let d = generate_gaussians(2, 6.0, &spec).unwrap();
        let mean_axis0 = |class: u8| {
            let idx: Vec<usize> = (0..d.len()).filter(|&i| d.labels()[i] == class).collect();
            idx.iter().map(|&i| d.row(i)[0]).sum::<f64>() / idx.len() as f64
        };
        let gap = mean_axis0(1) - mean_axis0(0);
        assert!((gap - 6.0).abs() < 0.3, "center gap {gap}");
    }

    #[test]
    fn apply_scenario_subsamples_exact_counts() {
        let spec = ScenarioSpec::from_ratio("50:50", 2000, 5).unwrap();
        let source = generate_gaussians(2, 1.0, &spec).unwrap();
        let target = ScenarioSpec::from_ratio("60:40", 1000, 6).unwrap();
        let rebalanced = apply_scenario(&source, &target).unwrap();
        assert_eq!(rebalanced.class_counts(), (600, 400));
        // Rebalancing an already-conforming dataset is the identity up to order.
        let identity = apply_scenario(&rebalanced, &target).unwrap();
        assert_eq!(identity.class_counts(), (600, 400));
    }

    #[test]
    fn apply_scenario_rejects_insufficient_minority() {
        let spec = ScenarioSpec::from_ratio("90:10", 100, 5).unwrap();
        let source = generate_gaussians(2, 1.0, &spec).unwrap(); // 90/10
        let target = ScenarioSpec::from_ratio("50:50", 100, 6).unwrap(); // wants 50/50
        assert!(matches!(
            apply_scenario(&source, &target),
            Err(DataError::InsufficientClass {
                class: 1,
                available: 10,
                requested: 50
            })
        ));
    }

    #[test]
    fn split_980_20_gives_686_14_train() {
        let spec = ScenarioSpec::from_ratio("98:2", 1000, 9).unwrap();
        let d = generate_gaussians(2, 3.0, &spec).unwrap();
        let (train, test) = split_train_test(&d, 0.7, 1).unwrap();
        assert_eq!(train.class_counts(), (686, 14));
        assert_eq!(test.class_counts(), (294, 6));
    }

    #[test]
    fn split_balanced_is_350_150_per_class() {
        let spec = ScenarioSpec::from_ratio("50:50", 1000, 9).unwrap();
        let d = generate_gaussians(2, 3.0, &spec).unwrap();
        let (train, test) = split_train_test(&d, 0.7, 1).unwrap();
        assert_eq!(train.class_counts(), (350, 350));
        assert_eq!(test.class_counts(), (150, 150));
    }

    #[test]
    fn split_is_a_partition() {
        let spec = ScenarioSpec::from_ratio("75:25", 200, 13).unwrap();
        let d = generate_gaussians(3, 2.0, &spec).unwrap();
        let (train, test) = split_train_test(&d, 0.7, 2).unwrap();
        assert_eq!(train.len() + test.len(), d.len());
        // Rows are distinct continuous draws, so membership identifies them.
        let key = |row: &[f64]| format!("{:?}", row);
        let mut seen: std::collections::HashSet<String> =
            (0..train.len()).map(|i| key(train.row(i))).collect();
        for i in 0..test.len() {
            assert!(seen.insert(key(test.row(i))), "row appears in both splits");
        }
        let original: std::collections::HashSet<String> =
            (0..d.len()).map(|i| key(d.row(i))).collect();
        assert_eq!(seen, original);
    }

    #[test]
    fn split_rejects_tiny_class() {
        let samples = Tensor::new(vec![3, 2], vec![0.0; 6]).unwrap();
        let d = Dataset::new(samples, vec![0, 0, 1], Provenance::Synthetic).unwrap();
        assert!(matches!(
            split_train_test(&d, 0.7, 0),
            Err(DataError::ClassTooSmall { class: 1, count: 1 })
        ));
    }

    #[test]
    fn hflip_is_an_involution() {
        let sample: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(hflip(&hflip(&sample, 4), 4), sample);
        // A symmetric image is unchanged.
        let symmetric = vec![1.0, 2.0, 1.0, 5.0, 6.0, 5.0];
        assert_eq!(hflip(&symmetric, 3), symmetric);
    }

    #[test]
    fn augment_flip_is_noop_for_synthetic_data() {
        let spec = ScenarioSpec::from_ratio("50:50", 10, 1).unwrap();
        let d = generate_gaussians(2, 1.0, &spec).unwrap();
        let out = augment_flip(&d, 1, 99).unwrap();
        assert_eq!(out.samples().data(), d.samples().data());
    }

    #[test]
    fn augment_flip_is_seed_deterministic() {
        let images: Vec<Vec<u8>> = (0..8).map(|i| vec![i as u8, 2 * i as u8, 0, 7]).collect();
        let labels = vec![0u8, 1, 0, 1, 0, 1, 0, 1];
        let dir = std::env::temp_dir().join("asymcl_flip_test");
        fs::create_dir_all(&dir).unwrap();
        let ip = dir.join("imgs.idx");
        let lp = dir.join("labels.idx");
        write_idx_images(&ip, &images, 2, 2).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        let d = load_idx(&ip, &lp, 0, 1).unwrap();
        let a = augment_flip(&d, 2, 5).unwrap();
        let b = augment_flip(&d, 2, 5).unwrap();
        assert_eq!(a.samples().data(), b.samples().data());
        assert_eq!(a.labels(), d.labels());
    }

    #[test]
    fn idx_round_trip_recovers_pixels() {
        let images: Vec<Vec<u8>> = vec![
            vec![0, 128, 255, 64],
            vec![1, 2, 3, 4],
            vec![250, 251, 252, 253],
            vec![9, 8, 7, 6],
        ];
        let labels = vec![0u8, 6, 0, 6];
        let dir = std::env::temp_dir().join("asymcl_idx_test");
        fs::create_dir_all(&dir).unwrap();
        let ip = dir.join("imgs.idx");
        let lp = dir.join("labels.idx");
        write_idx_images(&ip, &images, 2, 2).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        let d = load_idx(&ip, &lp, 0, 6).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.labels(), &[0, 1, 0, 1]);
        for (i, image) in images.iter().enumerate() {
            let recovered: Vec<u8> = d
                .row(i)
                .iter()
                .map(|&v| (v * 255.0).round() as u8)
                .collect();
            assert_eq!(&recovered, image, "image {i}");
        }
    }

    #[test]
    fn idx_class_filter_keeps_only_requested() {
        let images: Vec<Vec<u8>> = (0..6).map(|i| vec![i as u8; 4]).collect();
        let labels = vec![0u8, 1, 2, 6, 0, 3];
        let dir = std::env::temp_dir().join("asymcl_idx_filter");
        fs::create_dir_all(&dir).unwrap();
        let ip = dir.join("imgs.idx");
        let lp = dir.join("labels.idx");
        write_idx_images(&ip, &images, 2, 2).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        let d = load_idx(&ip, &lp, 0, 6).unwrap();
        assert_eq!(d.len(), 3); // indices 0, 3, 4
        assert_eq!(d.labels(), &[0, 1, 0]);
    }

    #[test]
    fn idx_rejects_wrong_magic() {
        let dir = std::env::temp_dir().join("asymcl_idx_magic");
        fs::create_dir_all(&dir).unwrap();
        let ip = dir.join("bad.idx");
        fs::write(&ip, 0x12345678u32.to_be_bytes()).unwrap();
        let lp = dir.join("labels.idx");
        write_idx_labels(&lp, &[0, 1]).unwrap();
        match load_idx(&ip, &lp, 0, 1) {
            Err(DataError::Format { offset: 0, message }) => {
                assert!(message.contains("magic"), "{message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn idx_reports_truncation_offset() {
        let dir = std::env::temp_dir().join("asymcl_idx_trunc");
        fs::create_dir_all(&dir).unwrap();
        let ip = dir.join("trunc.idx");
        let mut bytes = Vec::new();
        bytes.extend(IDX_IMAGE_MAGIC.to_be_bytes());
        bytes.extend(2u32.to_be_bytes()); // claims 2 images
        bytes.extend(2u32.to_be_bytes());
        bytes.extend(2u32.to_be_bytes());
        bytes.extend([1u8, 2, 3]); // but provides 3 of 8 pixel bytes
        fs::write(&ip, bytes).unwrap();
        let lp = dir.join("labels.idx");
        write_idx_labels(&lp, &[0, 1]).unwrap();
        assert!(matches!(
            load_idx(&ip, &lp, 0, 1),
            Err(DataError::Format { offset: 16, .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let spec = ScenarioSpec::from_ratio("70:30", 20, 17).unwrap();
        let d = generate_gaussians(3, 2.0, &spec).unwrap();
        let dir = std::env::temp_dir().join("asymcl_csv_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        d.write_csv(&path).unwrap();
        let back = Dataset::read_csv(&path).unwrap();
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.samples().data(), d.samples().data());
    }
}
