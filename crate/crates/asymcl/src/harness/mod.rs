//! Experiment harness: confusion-matrix metrics, the single-run pipeline,
//! the scenario × hyperparameter grid runner, and result persistence.
//!
//! The positive class for TP/FN accounting is the minority class (class 1).
//! Accuracy is polarity-agnostic and UWA is polarity-symmetric, so only the
//! confusion-count labeling depends on that convention.

mod checks;
mod grid;

pub use checks::{run_all_checks, CheckOutcome};
pub use grid::{
    emit_results, emit_sweep, loss_comparison_cells, read_results_csv, run_grid, run_sweep,
    CellStats, FailedCell, GridTables, LossCell, OutputFormat, SweepResult, DEFAULT_ETA_GRID,
    DEFAULT_GAMMA_GRID, DEFAULT_SCENARIOS,
};

use crate::autodiff::Tensor;
use crate::data::{
    apply_scenario, augment_flip, generate_gaussians, load_idx, split_train_test, DataError,
    Dataset, ScenarioSpec,
};
use crate::infotheory::InfoError;
use crate::losses::{ContrastiveKind, LossError};
use crate::model::{
    classify, init_model, train_stage1, train_stage2, EncoderSpec, ModelError, ModelState,
    TrainConfig,
};
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("prediction and truth vectors have different lengths: {predictions} vs {truths}")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("confusion counts are empty")]
    EmptyCounts,
    #[error("metric undefined: class {class} is absent from the test set")]
    MetricUndefined { class: u8 },
    #[error("no rows to emit")]
    EmptyRows,
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("result file error on line {line}: {message}")]
    ResultFormat { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Binary confusion counts; class 1 (minority) is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

/// Tallies predictions against ground truth.
pub fn confusion(predictions: &[u8], truths: &[u8]) -> Result<ConfusionCounts, HarnessError> {
    if predictions.len() != truths.len() {
        return Err(HarnessError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(HarnessError::EmptyCounts);
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p, t) {
            (1, 1) => counts.true_pos += 1,
            (0, 0) => counts.true_neg += 1,
            (1, 0) => counts.false_pos += 1,
            (0, 1) => counts.false_neg += 1,
            _ => {
                return Err(HarnessError::InvalidConfig(format!(
                    "labels must be binary, got prediction {p} / truth {t}"
                )))
            }
        }
    }
    Ok(counts)
}

/// Weighted accuracy `(TP + TN) / (TP + TN + FP + FN)`.
pub fn accuracy(counts: &ConfusionCounts) -> Result<f64, HarnessError> {
    let total = counts.total();
    if total == 0 {
        return Err(HarnessError::EmptyCounts);
    }
    Ok((counts.true_pos + counts.true_neg) as f64 / total as f64)
}

/// Unweighted accuracy: the mean of the two per-class recalls,
/// `(TP/(TP+FN) + TN/(TN+FP)) / 2`. Errors (never silently 0) when a class
/// is absent from the test set.
pub fn uwa(counts: &ConfusionCounts) -> Result<f64, HarnessError> {
    let positives = counts.true_pos + counts.false_neg;
    let negatives = counts.true_neg + counts.false_pos;
    if positives == 0 {
        return Err(HarnessError::MetricUndefined { class: 1 });
    }
    if negatives == 0 {
        return Err(HarnessError::MetricUndefined { class: 0 });
    }
    Ok(0.5
        * (counts.true_pos as f64 / positives as f64 + counts.true_neg as f64 / negatives as f64))
}

/// Mean within-class and between-class cosine similarity of embedding rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineStats {
    pub intra: f64,
    pub inter: f64,
}

/// Averages pairwise cosine similarities over same-label and different-label
/// pairs. Requires at least one pair of each kind.
pub fn cosine_separation(embeddings: &Tensor, labels: &[u8]) -> Result<CosineStats, HarnessError> {
    let n = labels.len();
    if embeddings.rank() != 2 || embeddings.shape()[0] != n {
        return Err(HarnessError::LengthMismatch {
            predictions: embeddings.shape().first().copied().unwrap_or(0),
            truths: n,
        });
    }
    let mut intra = (0.0, 0usize);
    let mut inter = (0.0, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = embeddings
                .row(i)
                .iter()
                .zip(embeddings.row(j))
                .map(|(a, b)| a * b)
                .sum();
            if labels[i] == labels[j] {
                intra.0 += dot;
                intra.1 += 1;
            } else {
                inter.0 += dot;
                inter.1 += 1;
            }
        }
    }
    if intra.1 == 0 || inter.1 == 0 {
        return Err(HarnessError::MetricUndefined {
            class: u8::from(inter.1 != 0),
        });
    }
    Ok(CosineStats {
        intra: intra.0 / intra.1 as f64,
        inter: inter.0 / inter.1 as f64,
    })
}

/// One experiment outcome; accuracy and UWA are always recomputable from
/// the stored confusion counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub loss_name: String,
    pub eta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub uwa: f64,
    pub counts: ConfusionCounts,
    pub runtime_seconds: f64,
}

/// Where the experiment's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    /// Two seeded Gaussian blobs, `separation` apart, in `dim` dimensions.
    Synthetic { dim: usize, separation: f64 },
    /// An IDX image/label file pair filtered to two classes.
    Idx {
        images: String,
        labels: String,
        #[serde(default)]
        class_a: u8,
        #[serde(default = "default_class_b")]
        class_b: u8,
    },
}

fn default_class_b() -> u8 {
    6
}

/// Encoder architecture without the input width, which is taken from the
/// loaded data at run time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderShape {
    pub hidden_dims: Vec<usize>,
    pub feature_dim: usize,
    pub projection_dim: usize,
}

impl Default for EncoderShape {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64],
            feature_dim: 32,
            projection_dim: 16,
        }
    }
}

impl EncoderShape {
    pub fn to_spec(&self, input_dim: usize) -> EncoderSpec {
        EncoderSpec {
            input_dim,
            hidden_dims: self.hidden_dims.clone(),
            feature_dim: self.feature_dim,
            projection_dim: self.projection_dim,
        }
    }
}

/// Full specification of a single experiment. The master `seed` drives data
/// generation, the split, augmentation, parameter initialization, and batch
/// shuffling through fixed offsets, so a row is reproducible from its config
/// alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataSource,
    pub scenario: String,
    pub total_size: usize,
    pub train_fraction: f64,
    pub augment: bool,
    pub image_width: usize,
    pub encoder: EncoderShape,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        use crate::losses::LossParams;
        Self {
            data: DataSource::Synthetic {
                dim: 8,
                separation: 6.0,
            },
            scenario: "90:10".into(),
            total_size: 1000,
            train_fraction: 0.7,
            augment: false,
            image_width: 28,
            encoder: EncoderShape::default(),
            train: TrainConfig {
                loss: ContrastiveKind::Afcl,
                loss_params: LossParams {
                    eta: 300.0,
                    gamma: 7.0,
                    ..LossParams::default()
                },
                ..TrainConfig::default()
            },
            seed: 42,
        }
    }
}

impl RunConfig {
    /// The (η, γ) pair a result row reports: parameters that a loss variant
    /// does not read are recorded as their effective constants.
    fn effective_params(&self) -> (f64, f64) {
        let p = &self.train.loss_params;
        match self.train.loss {
            ContrastiveKind::Cl => (0.0, 0.0),
            ContrastiveKind::Fcl => (0.0, 1.0),
            ContrastiveKind::Acl => (p.eta, 0.0),
            ContrastiveKind::Afcl => (p.eta, p.gamma),
        }
    }
}

/// Artifacts of a finished run beyond the summary row.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub row: ResultRow,
    pub state: ModelState,
    pub stage1_trace: Vec<f64>,
    pub stage2_trace: Vec<f64>,
    pub test_set: Dataset,
}

/// Runs the full pipeline (data → scenario → split → optional augmentation
/// → stage 1 → stage 2 → prediction → metrics) and keeps the trained model.
pub fn run_experiment_full(config: &RunConfig) -> Result<ExperimentOutput, HarnessError> {
    let started = Instant::now();
    let seed = config.seed;
    let scenario = ScenarioSpec::from_ratio(&config.scenario, config.total_size, seed)?;

    let dataset = match &config.data {
        DataSource::Synthetic { dim, separation } => {
            generate_gaussians(*dim, *separation, &scenario)?
        }
        DataSource::Idx {
            images,
            labels,
            class_a,
            class_b,
        } => {
            let pool = load_idx(images, labels, *class_a, *class_b)?;
            apply_scenario(&pool, &scenario)?
        }
    };

    let (train_set, test_set) =
        split_train_test(&dataset, config.train_fraction, seed.wrapping_add(1))?;
    let train_set = if config.augment {
        augment_flip(&train_set, config.image_width, seed.wrapping_add(2))?
    } else {
        train_set
    };

    let spec = config.encoder.to_spec(dataset.dim());
    let mut state = init_model(&spec, seed.wrapping_add(3))?;
    let mut train_config = config.train.clone();
    train_config.seed = seed.wrapping_add(4);

    let stage1_trace = train_stage1(&mut state, &train_set, &train_config)?;
    let stage2_trace = train_stage2(&mut state, &train_set, &train_config)?;

    let probabilities = state.predict(test_set.samples())?;
    let predictions = classify(&probabilities);
    let counts = confusion(&predictions, test_set.labels())?;
    let (eta, gamma) = config.effective_params();
    let row = ResultRow {
        scenario: scenario.ratio_label(),
        loss_name: config.train.loss.name().to_string(),
        eta,
        gamma,
        tau: config.train.loss_params.tau,
        seed,
        accuracy: accuracy(&counts)?,
        uwa: uwa(&counts)?,
        counts,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput {
        row,
        state,
        stage1_trace,
        stage2_trace,
        test_set,
    })
}

/// [`run_experiment_full`] reduced to its summary row.
pub fn run_experiment(config: &RunConfig) -> Result<ResultRow, HarnessError> {
    Ok(run_experiment_full(config)?.row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_simple_cases() {
        let c = confusion(&[1, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                true_pos: 2,
                true_neg: 1,
                false_pos: 0,
                false_neg: 0
            }
        );
        let c = confusion(&[0; 5], &[1; 5]).unwrap();
        assert_eq!(c.false_neg, 5);
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn confusion_matches_counting_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let preds: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2) as u8).collect();
        let truths: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2) as u8).collect();
        let c = confusion(&preds, &truths).unwrap();
        let count = |p: u8, t: u8| {
            preds
                .iter()
                .zip(&truths)
                .filter(|(&a, &b)| a == p && b == t)
                .count()
        };
        assert_eq!(c.true_pos, count(1, 1));
        assert_eq!(c.true_neg, count(0, 0));
        assert_eq!(c.false_pos, count(1, 0));
        assert_eq!(c.false_neg, count(0, 1));
    }

    #[test]
    fn confusion_rejects_length_mismatch() {
        assert!(matches!(
            confusion(&[1, 0], &[1]),
            Err(HarnessError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn accuracy_cases() {
        let c = ConfusionCounts {
            true_pos: 3,
            true_neg: 5,
            false_pos: 1,
            false_neg: 1,
        };
        assert!((accuracy(&c).unwrap() - 0.8).abs() <= 1e-12);
        let perfect = ConfusionCounts {
            true_pos: 4,
            true_neg: 6,
            ..Default::default()
        };
        assert_eq!(accuracy(&perfect).unwrap(), 1.0);
        let skewed = ConfusionCounts {
            true_pos: 90,
            false_neg: 10,
            true_neg: 5,
            false_pos: 5,
        };
        assert!((accuracy(&skewed).unwrap() - 0.863_636_363_636_363_6).abs() <= 1e-12);
        assert!(accuracy(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn uwa_cases() {
        let c = ConfusionCounts {
            true_pos: 90,
            false_neg: 10,
            true_neg: 5,
            false_pos: 5,
        };
        assert!((uwa(&c).unwrap() - 0.7).abs() <= 1e-12);
        // All-majority predictor: one recall is 1, the other 0.
        let degenerate = ConfusionCounts {
            true_pos: 0,
            false_neg: 10,
            true_neg: 90,
            false_pos: 0,
        };
        assert!((uwa(&degenerate).unwrap() - 0.5).abs() <= 1e-12);
        let perfect = ConfusionCounts {
            true_pos: 50,
            true_neg: 50,
            ..Default::default()
        };
        assert_eq!(uwa(&perfect).unwrap(), 1.0);
    }

    #[test]
    fn uwa_undefined_without_both_classes() {
        let only_positive = ConfusionCounts {
            true_pos: 5,
            false_neg: 2,
            ..Default::default()
        };
        assert!(matches!(
            uwa(&only_positive),
            Err(HarnessError::MetricUndefined { class: 0 })
        ));
        let only_negative = ConfusionCounts {
            true_neg: 5,
            false_pos: 2,
            ..Default::default()
        };
        assert!(matches!(
            uwa(&only_negative),
            Err(HarnessError::MetricUndefined { class: 1 })
        ));
    }

    #[test]
    fn run_config_default_round_trips_through_json() {
        let config = RunConfig::default();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn effective_params_follow_loss_kind() {
        let mut config = RunConfig::default();
        assert_eq!(config.effective_params(), (300.0, 7.0));
        config.train.loss = ContrastiveKind::Cl;
        assert_eq!(config.effective_params(), (0.0, 0.0));
        config.train.loss = ContrastiveKind::Fcl;
        assert_eq!(config.effective_params(), (0.0, 1.0));
        config.train.loss = ContrastiveKind::Acl;
        assert_eq!(config.effective_params(), (300.0, 0.0));
    }
}
