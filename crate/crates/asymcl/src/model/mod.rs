//! Two-stage training at desk scale: an MLP feature encoder plus projection
//! head learned with a contrastive loss (stage 1), then a one-logit
//! classification head trained with CE or focal loss on top of the frozen
//! encoder (stage 2). The projection head is dropped after stage 1; the
//! classifier consumes raw encoder features.
//!
//! A [`ModelState`] is single-writer during training; prediction and
//! embedding are read-only and thread-safe. All initialization and batch
//! shuffling derive from explicit seeds, so a full two-stage run is
//! bit-reproducible per seed on one platform.

mod adam;
mod checkpoint;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint};

use crate::autodiff::{AutodiffError, NodeId, Tape, Tensor};
use crate::data::{DataError, Dataset};
use crate::losses::{graph, ContrastiveKind, FeatureBatch, LossError, LossParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid encoder spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("input has dimension {got}, encoder expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stage 1 cannot run: encoder is already frozen")]
    AlreadyFrozen,
    #[error("stage 2 requires a completed stage 1")]
    Stage1NotRun,
    #[error("prediction requires a trained classification head")]
    NotTrained,
    #[error("parameter group sizes differ: {params} params, {grads} grads, {state} states")]
    ParamGroupMismatch {
        params: usize,
        grads: usize,
        state: usize,
    },
    #[error("parameter shape {param:?} does not match gradient shape {grad:?}")]
    GradientShapeMismatch { param: Vec<usize>, grad: Vec<usize> },
    #[error("checkpoint error at byte {offset}: {message}")]
    Checkpoint { offset: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Architecture of the MLP encoder and projection head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub feature_dim: usize,
    pub projection_dim: usize,
}

impl EncoderSpec {
    /// input → 64 → 32 features with a 16-dimensional projection.
    pub fn with_defaults(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: vec![64],
            feature_dim: 32,
            projection_dim: 16,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 || self.feature_dim == 0 || self.projection_dim == 0 {
            return Err(ModelError::InvalidSpec(
                "all dimensions must be at least 1".into(),
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(ModelError::InvalidSpec(
                "hidden dimensions must be at least 1".into(),
            ));
        }
        if self.projection_dim > self.feature_dim {
            return Err(ModelError::InvalidSpec(format!(
                "projection dimension {} exceeds feature dimension {}",
                self.projection_dim, self.feature_dim
            )));
        }
        Ok(())
    }
}

/// The loss that trains the classification head in stage 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Stage2Loss {
    Ce,
    Fl {
        #[serde(default = "default_stage2_gamma")]
        gamma: f64,
    },
}

fn default_stage2_gamma() -> f64 {
    2.0
}

/// Hyperparameters for a full two-stage run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss: ContrastiveKind,
    pub loss_params: LossParams,
    pub stage2_loss: Stage2Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stage1_epochs: 20,
            stage2_epochs: 10,
            learning_rate: 1e-2,
            batch_size: 128,
            loss: ContrastiveKind::Cl,
            loss_params: LossParams::default(),
            stage2_loss: Stage2Loss::Ce,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.stage1_epochs == 0 || self.stage2_epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig(
                "batch size must be positive".into(),
            ));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate {} must be finite and nonnegative",
                self.learning_rate
            )));
        }
        self.loss_params.validate()?;
        if let Stage2Loss::Fl { gamma } = self.stage2_loss {
            if !gamma.is_finite() || gamma < 0.0 {
                return Err(ModelError::InvalidConfig(format!(
                    "stage-2 focal gamma {gamma} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// One affine layer: weight `[in, out]` and bias `[out]`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// All learnable parameters plus the training-phase flags.
#[derive(Debug, Clone)]
pub struct ModelState {
    spec: EncoderSpec,
    encoder: Vec<DenseLayer>,
    projection: Vec<DenseLayer>,
    classifier: DenseLayer,
    frozen: bool,
    stage1_trained: bool,
    classifier_trained: bool,
    rng_seed: u64,
}

/// Deterministic initialization from a seed: biases zero, weights drawn
/// uniformly from `±1/√fan_in`.
pub fn init_model(spec: &EncoderSpec, seed: u64) -> Result<ModelState, ModelError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = |fan_in: usize, fan_out: usize| -> DenseLayer {
        let limit = 1.0 / (fan_in as f64).sqrt();
        let weights: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        DenseLayer {
            weight: Tensor::from_parts(vec![fan_in, fan_out], weights),
            bias: Tensor::from_parts(vec![fan_out], vec![0.0; fan_out]),
        }
    };

    let mut encoder = Vec::new();
    let mut prev = spec.input_dim;
    for &width in &spec.hidden_dims {
        encoder.push(dense(prev, width));
        prev = width;
    }
    encoder.push(dense(prev, spec.feature_dim));

    let projection = vec![
        dense(spec.feature_dim, spec.feature_dim),
        dense(spec.feature_dim, spec.projection_dim),
    ];
    let classifier = dense(spec.feature_dim, 1);

    Ok(ModelState {
        spec: spec.clone(),
        encoder,
        projection,
        classifier,
        frozen: false,
        stage1_trained: false,
        classifier_trained: false,
        rng_seed: seed,
    })
}

struct LayerNodes {
    weight: NodeId,
    bias: NodeId,
}

fn register_layers(tape: &mut Tape, layers: &[DenseLayer], requires_grad: bool) -> Vec<LayerNodes> {
    layers
        .iter()
        .map(|layer| LayerNodes {
            weight: tape.leaf(layer.weight.clone(), requires_grad),
            bias: tape.leaf(layer.bias.clone(), requires_grad),
        })
        .collect()
}

fn dense_forward(tape: &mut Tape, x: NodeId, layer: &LayerNodes) -> Result<NodeId, ModelError> {
    let product = tape.matmul(x, layer.weight)?;
    Ok(tape.add(product, layer.bias)?)
}

/// Encoder chain: ReLU after every hidden layer, linear feature output.
fn encoder_forward(
    tape: &mut Tape,
    x: NodeId,
    layers: &[LayerNodes],
) -> Result<NodeId, ModelError> {
    let mut h = x;
    for (i, layer) in layers.iter().enumerate() {
        h = dense_forward(tape, h, layer)?;
        if i + 1 < layers.len() {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

/// Projection head: affine → ReLU → affine → row normalization.
fn projection_forward(
    tape: &mut Tape,
    features: NodeId,
    layers: &[LayerNodes],
) -> Result<NodeId, ModelError> {
    let hidden = dense_forward(tape, features, &layers[0])?;
    let activated = tape.relu(hidden);
    let projected = dense_forward(tape, activated, &layers[1])?;
    Ok(tape.l2_normalize_rows(projected)?)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ModelState {
    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn stage1_trained(&self) -> bool {
        self.stage1_trained
    }

    pub fn classifier_trained(&self) -> bool {
        self.classifier_trained
    }

    /// Additive checksum over encoder and projection parameters; constant
    /// from the moment stage 2 begins.
    pub fn frozen_group_checksum(&self) -> u64 {
        let mut acc: u64 = 0;
        for layer in self.encoder.iter().chain(&self.projection) {
            for tensor in [&layer.weight, &layer.bias] {
                for &v in tensor.data() {
                    acc = acc.wrapping_add(v.to_bits()).rotate_left(1);
                }
            }
        }
        acc
    }

    /// Ordered (name, tensor) view of every parameter, used by checkpoints.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.weight"), &layer.weight));
            out.push((format!("encoder.{i}.bias"), &layer.bias));
        }
        for (i, layer) in self.projection.iter().enumerate() {
            out.push((format!("projection.{i}.weight"), &layer.weight));
            out.push((format!("projection.{i}.bias"), &layer.bias));
        }
        out.push(("classifier.weight".into(), &self.classifier.weight));
        out.push(("classifier.bias".into(), &self.classifier.bias));
        out
    }

    fn check_input(&self, samples: &Tensor) -> Result<(), ModelError> {
        let got = samples.shape().get(1).copied().unwrap_or(0);
        if samples.rank() != 2 || got != self.spec.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.spec.input_dim,
                got,
            });
        }
        Ok(())
    }

    /// Projected, ℓ2-normalized embeddings of a sample batch.
    pub fn embed(&self, samples: &Tensor) -> Result<Tensor, ModelError> {
        self.check_input(samples)?;
        let mut tape = Tape::new();
        let x = tape.constant(samples.clone());
        let enc = register_layers(&mut tape, &self.encoder, false);
        let proj = register_layers(&mut tape, &self.projection, false);
        let features = encoder_forward(&mut tape, x, &enc)?;
        let z = projection_forward(&mut tape, features, &proj)?;
        Ok(tape.value(z).clone())
    }

    /// Embeddings paired with their labels, ready for a contrastive loss.
    pub fn embed_batch(
        &self,
        samples: &Tensor,
        labels: &[usize],
    ) -> Result<FeatureBatch, ModelError> {
        Ok(FeatureBatch::new(self.embed(samples)?, labels.to_vec())?)
    }

    /// Raw encoder features (what the stage-2 classifier consumes).
    pub fn encode(&self, samples: &Tensor) -> Result<Tensor, ModelError> {
        self.check_input(samples)?;
        let mut tape = Tape::new();
        let x = tape.constant(samples.clone());
        let enc = register_layers(&mut tape, &self.encoder, false);
        let features = encoder_forward(&mut tape, x, &enc)?;
        Ok(tape.value(features).clone())
    }

    /// Class-1 probabilities for a sample batch. Requires stage 2.
    pub fn predict(&self, samples: &Tensor) -> Result<Vec<f64>, ModelError> {
        if !self.classifier_trained {
            return Err(ModelError::NotTrained);
        }
        self.logits(samples)
    }

    fn logits(&self, samples: &Tensor) -> Result<Vec<f64>, ModelError> {
        self.check_input(samples)?;
        let mut tape = Tape::new();
        let x = tape.constant(samples.clone());
        let enc = register_layers(&mut tape, &self.encoder, false);
        let clf = register_layers(&mut tape, std::slice::from_ref(&self.classifier), false);
        let features = encoder_forward(&mut tape, x, &enc)?;
        let logits = dense_forward(&mut tape, features, &clf[0])?;
        Ok(tape
            .value(logits)
            .data()
            .iter()
            .map(|&v| sigmoid(v))
            .collect())
    }
}

/// Probability-threshold decision: class 1 iff `p ≥ 0.5` (ties go to 1).
pub fn classify(probabilities: &[f64]) -> Vec<u8> {
    probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect()
}

fn gather_rows(dataset: &Dataset, indices: &[usize]) -> (Tensor, Vec<u8>) {
    let d = dataset.dim();
    let mut data = Vec::with_capacity(indices.len() * d);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        data.extend_from_slice(dataset.row(i));
        labels.push(dataset.labels()[i]);
    }
    (Tensor::from_parts(vec![indices.len(), d], data), labels)
}

fn collect_grads(
    tape: &Tape,
    grads: &crate::autodiff::Gradients,
    leaves: &[NodeId],
) -> Vec<Tensor> {
    leaves
        .iter()
        .map(|&id| {
            grads
                .get(id)
                .cloned()
                .unwrap_or_else(|| tape.value(id).zeros_like())
        })
        .collect()
}

fn stage1_batch_loss(
    state: &ModelState,
    x: &Tensor,
    labels: &[usize],
    config: &TrainConfig,
) -> Result<(Tape, NodeId, Vec<NodeId>), ModelError> {
    let mut tape = Tape::new();
    let x_node = tape.constant(x.clone());
    let enc = register_layers(&mut tape, &state.encoder, true);
    let proj = register_layers(&mut tape, &state.projection, true);
    let features = encoder_forward(&mut tape, x_node, &enc)?;
    let z = projection_forward(&mut tape, features, &proj)?;
    let loss = config
        .loss
        .node(&mut tape, z, labels, &config.loss_params)?;
    let leaves: Vec<NodeId> = enc
        .iter()
        .chain(&proj)
        .flat_map(|l| [l.weight, l.bias])
        .collect();
    Ok((tape, loss, leaves))
}

/// Stage 1: contrastive feature learning. Updates encoder and projection
/// parameters only and returns one mean loss per epoch, evaluated over the
/// dataset in a fixed batch order after each epoch's updates (so a zero
/// learning rate yields a perfectly constant trace).
pub fn train_stage1(
    state: &mut ModelState,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<f64>, ModelError> {
    if state.frozen {
        return Err(ModelError::AlreadyFrozen);
    }
    config.validate()?;
    state.check_input(dataset.samples())?;

    let mut adam = {
        let params: Vec<&Tensor> = state
            .encoder
            .iter()
            .chain(&state.projection)
            .flat_map(|l| [&l.weight, &l.bias])
            .collect();
        AdamState::new(&params)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.stage1_epochs);

    for _epoch in 0..config.stage1_epochs {
        let order = crate::data::shuffled_indices(dataset.len(), &mut rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                log::warn!(
                    "skipping mini-batch of size {} (need at least 2)",
                    chunk.len()
                );
                continue;
            }
            let (x, labels) = gather_rows(dataset, chunk);
            let labels: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
            let (tape, loss, leaves) = stage1_batch_loss(state, &x, &labels, config)?;
            let grads = tape.backward(loss)?;
            let grad_tensors = collect_grads(&tape, &grads, &leaves);
            let mut params: Vec<&mut Tensor> = state
                .encoder
                .iter_mut()
                .chain(&mut state.projection)
                .flat_map(|l| [&mut l.weight, &mut l.bias])
                .collect();
            adam.step(&mut params, &grad_tensors, config.learning_rate)?;
        }
        trace.push(stage1_epoch_loss(state, dataset, config)?);
    }
    state.stage1_trained = true;
    Ok(trace)
}

/// Mean stage-1 loss over fixed-order batches with the current parameters.
fn stage1_epoch_loss(
    state: &ModelState,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<f64, ModelError> {
    let order: Vec<usize> = (0..dataset.len()).collect();
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(config.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let (x, labels) = gather_rows(dataset, chunk);
        let labels: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
        let batch = state.embed_batch(&x, &labels)?;
        total += config.loss.value(&batch, &config.loss_params)?;
        batches += 1;
    }
    if batches == 0 {
        return Err(ModelError::InvalidConfig(
            "dataset yields no trainable mini-batch".into(),
        ));
    }
    Ok(total / batches as f64)
}

fn stage2_batch_loss(
    state: &ModelState,
    x: &Tensor,
    labels: &[u8],
    config: &TrainConfig,
) -> Result<(Tape, NodeId, Vec<NodeId>), ModelError> {
    let mut tape = Tape::new();
    let x_node = tape.constant(x.clone());
    let enc = register_layers(&mut tape, &state.encoder, false);
    let clf = register_layers(&mut tape, std::slice::from_ref(&state.classifier), true);
    let features = encoder_forward(&mut tape, x_node, &enc)?;
    let logits = dense_forward(&mut tape, features, &clf[0])?;
    let loss = match config.stage2_loss {
        Stage2Loss::Ce => graph::ce_logits_node(&mut tape, logits, labels)?,
        Stage2Loss::Fl { gamma } => graph::focal_logits_node(&mut tape, logits, labels, gamma)?,
    };
    Ok((tape, loss, vec![clf[0].weight, clf[0].bias]))
}

/// Stage 2: classifier fine-tuning. Marks the encoder and projection groups
/// frozen, then updates only the classification head. The trace is evaluated
/// like stage 1's, in fixed order after each epoch.
pub fn train_stage2(
    state: &mut ModelState,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<f64>, ModelError> {
    if !state.stage1_trained {
        return Err(ModelError::Stage1NotRun);
    }
    config.validate()?;
    state.check_input(dataset.samples())?;
    state.frozen = true;

    let mut adam = AdamState::new(&[&state.classifier.weight, &state.classifier.bias]);
    // Offset keeps stage-2 shuffles decoupled from stage 1's stream.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut trace = Vec::with_capacity(config.stage2_epochs);

    for _epoch in 0..config.stage2_epochs {
        let order = crate::data::shuffled_indices(dataset.len(), &mut rng);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                log::warn!(
                    "skipping mini-batch of size {} (need at least 2)",
                    chunk.len()
                );
                continue;
            }
            let (x, labels) = gather_rows(dataset, chunk);
            let (tape, loss, leaves) = stage2_batch_loss(state, &x, &labels, config)?;
            let grads = tape.backward(loss)?;
            let grad_tensors = collect_grads(&tape, &grads, &leaves);
            let mut params: Vec<&mut Tensor> =
                vec![&mut state.classifier.weight, &mut state.classifier.bias];
            adam.step(&mut params, &grad_tensors, config.learning_rate)?;
        }
        trace.push(stage2_epoch_loss(state, dataset, config)?);
    }
    state.classifier_trained = true;
    Ok(trace)
}

fn stage2_epoch_loss(
    state: &ModelState,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<f64, ModelError> {
    let order: Vec<usize> = (0..dataset.len()).collect();
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(config.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let (x, labels) = gather_rows(dataset, chunk);
        let (tape, loss, _) = stage2_batch_loss(state, &x, &labels, config)?;
        total += tape.value(loss).scalar_value()?;
        batches += 1;
    }
    if batches == 0 {
        return Err(ModelError::InvalidConfig(
            "dataset yields no trainable mini-batch".into(),
        ));
    }
    Ok(total / batches as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_gaussians, Provenance, ScenarioSpec};

    fn tiny_spec() -> EncoderSpec {
        EncoderSpec {
            input_dim: 4,
            hidden_dims: vec![8],
            feature_dim: 8,
            projection_dim: 4,
        }
    }

    fn tiny_dataset(seed: u64) -> Dataset {
        let spec = ScenarioSpec::from_ratio("70:30", 60, seed).unwrap();
        generate_gaussians(4, 5.0, &spec).unwrap()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            stage1_epochs: 3,
            stage2_epochs: 3,
            batch_size: 16,
            loss: ContrastiveKind::Afcl,
            loss_params: LossParams {
                eta: 120.0,
                gamma: 2.0,
                ..LossParams::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn init_is_seed_deterministic() {
        let spec = tiny_spec();
        let a = init_model(&spec, 7).unwrap();
        let b = init_model(&spec, 7).unwrap();
        assert_eq!(a.frozen_group_checksum(), b.frozen_group_checksum());
        for ((_, ta), (_, tb)) in a.named_params().iter().zip(b.named_params()) {
            assert_eq!(ta.data(), tb.data());
        }
        let c = init_model(&spec, 8).unwrap();
        let differs = a
            .named_params()
            .iter()
            .zip(c.named_params())
            .any(|((_, ta), (_, tb))| ta.data() != tb.data());
        assert!(differs);
    }

    #[test]
    fn init_biases_are_zero() {
        let state = init_model(&tiny_spec(), 1).unwrap();
        for (name, tensor) in state.named_params() {
            if name.ends_with("bias") {
                assert!(tensor.data().iter().all(|&v| v == 0.0), "{name}");
            }
        }
    }

    #[test]
    fn zero_hidden_layer_spec_is_accepted() {
        let spec = EncoderSpec {
            input_dim: 4,
            hidden_dims: vec![],
            feature_dim: 6,
            projection_dim: 3,
        };
        let state = init_model(&spec, 3).unwrap();
        let x = Tensor::new(vec![2, 4], vec![0.5; 8]).unwrap();
        let features = state.encode(&x).unwrap();
        assert_eq!(features.shape(), &[2, 6]);
    }

    #[test]
    fn embed_rows_are_unit_norm() {
        let state = init_model(&tiny_spec(), 5).unwrap();
        let data = tiny_dataset(1);
        let z = state.embed(data.samples()).unwrap();
        for i in 0..z.shape()[0] {
            let norm: f64 = z.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-9);
            assert!(z.row(i).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn embed_duplicate_inputs_give_identical_rows() {
        let state = init_model(&tiny_spec(), 5).unwrap();
        let x = Tensor::new(vec![2, 4], vec![0.3, -1.0, 0.7, 2.0, 0.3, -1.0, 0.7, 2.0]).unwrap();
        let z = state.embed(&x).unwrap();
        assert_eq!(z.row(0), z.row(1));
    }

    #[test]
    fn embed_rejects_dimension_mismatch() {
        let state = init_model(&tiny_spec(), 5).unwrap();
        let x = Tensor::new(vec![2, 3], vec![0.0; 6]).unwrap();
        assert!(matches!(
            state.embed(&x),
            Err(ModelError::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn zero_learning_rate_changes_nothing_and_trace_is_constant() {
        let mut state = init_model(&tiny_spec(), 11).unwrap();
        let before = state.frozen_group_checksum();
        let data = tiny_dataset(2);
        let config = TrainConfig {
            learning_rate: 0.0,
            ..tiny_config()
        };
        let trace = train_stage1(&mut state, &data, &config).unwrap();
        assert_eq!(state.frozen_group_checksum(), before);
        for window in trace.windows(2) {
            assert_eq!(window[0].to_bits(), window[1].to_bits());
        }
        let clf_before = state.classifier.weight.data().to_vec();
        train_stage2(&mut state, &data, &config).unwrap();
        assert_eq!(state.classifier.weight.data(), clf_before.as_slice());
    }

    #[test]
    fn stage1_loss_decreases_on_separable_data() {
        let mut state = init_model(&tiny_spec(), 11).unwrap();
        let data = tiny_dataset(3);
        let config = TrainConfig {
            stage1_epochs: 20,
            ..tiny_config()
        };
        let trace = train_stage1(&mut state, &data, &config).unwrap();
        assert_eq!(trace.len(), 20);
        assert!(trace.iter().all(|v| v.is_finite()));
        assert!(trace.last().unwrap() < trace.first().unwrap());
    }

    #[test]
    fn stage2_freezes_encoder_and_trains_classifier() {
        let mut state = init_model(&tiny_spec(), 11).unwrap();
        let data = tiny_dataset(4);
        let config = tiny_config();
        train_stage1(&mut state, &data, &config).unwrap();
        let frozen = state.frozen_group_checksum();
        let clf_before = state.classifier.weight.data().to_vec();
        let trace = train_stage2(&mut state, &data, &config).unwrap();
        assert_eq!(state.frozen_group_checksum(), frozen);
        assert_ne!(state.classifier.weight.data(), clf_before.as_slice());
        assert_eq!(trace.len(), config.stage2_epochs);
        assert!(state.is_frozen());
        // Stage 1 may not run again once frozen.
        assert!(matches!(
            train_stage1(&mut state, &data, &config),
            Err(ModelError::AlreadyFrozen)
        ));
    }

    #[test]
    fn stage2_requires_stage1() {
        let mut state = init_model(&tiny_spec(), 1).unwrap();
        let data = tiny_dataset(5);
        assert!(matches!(
            train_stage2(&mut state, &data, &tiny_config()),
            Err(ModelError::Stage1NotRun)
        ));
    }

    #[test]
    fn stage2_training_separates_separable_data() {
        let mut state = init_model(&tiny_spec(), 11).unwrap();
        let spec = ScenarioSpec::from_ratio("70:30", 120, 6).unwrap();
        let data = generate_gaussians(4, 6.0, &spec).unwrap();
        let config = TrainConfig {
            stage1_epochs: 20,
            stage2_epochs: 10,
            ..tiny_config()
        };
        train_stage1(&mut state, &data, &config).unwrap();
        train_stage2(&mut state, &data, &config).unwrap();
        let probs = state.predict(data.samples()).unwrap();
        let preds = classify(&probs);
        let correct = preds
            .iter()
            .zip(data.labels())
            .filter(|(&p, &t)| p == t)
            .count();
        assert!(
            correct as f64 / data.len() as f64 >= 0.95,
            "train accuracy {correct}/{}",
            data.len()
        );
    }

    #[test]
    fn predict_requires_training_and_is_batch_invariant() {
        let mut state = init_model(&tiny_spec(), 11).unwrap();
        let data = tiny_dataset(7);
        assert!(matches!(
            state.predict(data.samples()),
            Err(ModelError::NotTrained)
        ));
        let config = tiny_config();
        train_stage1(&mut state, &data, &config).unwrap();
        train_stage2(&mut state, &data, &config).unwrap();
        let batch_probs = state.predict(data.samples()).unwrap();
        for (i, &expected) in batch_probs.iter().enumerate().take(4) {
            let single = Tensor::new(vec![1, 4], data.row(i).to_vec()).unwrap();
            let p = state.predict(&single).unwrap()[0];
            assert!((p - expected).abs() <= 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn classify_threshold_ties_to_class_one() {
        assert_eq!(
            classify(&[0.49999, 0.5, 0.50001, 1.0, 0.0]),
            vec![0, 1, 1, 1, 0]
        );
    }

    #[test]
    fn full_run_is_bit_reproducible() {
        let run = || {
            let mut state = init_model(&tiny_spec(), 11).unwrap();
            let data = tiny_dataset(8);
            let config = tiny_config();
            let t1 = train_stage1(&mut state, &data, &config).unwrap();
            let t2 = train_stage2(&mut state, &data, &config).unwrap();
            let probs = state.predict(data.samples()).unwrap();
            (t1, t2, probs)
        };
        let (a1, a2, ap) = run();
        let (b1, b2, bp) = run();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a1), bits(&b1));
        assert_eq!(bits(&a2), bits(&b2));
        assert_eq!(bits(&ap), bits(&bp));
    }

    #[test]
    fn single_class_batches_are_harmless() {
        // All labels equal: the contrastive loss is well-defined (positives
        // are everyone) and training must not fail.
        let samples = Tensor::new(vec![6, 4], (0..24).map(|i| i as f64 / 10.0).collect()).unwrap();
        let data = Dataset::new(samples, vec![0; 6], Provenance::Synthetic).unwrap();
        let mut state = init_model(&tiny_spec(), 2).unwrap();
        let config = TrainConfig {
            stage1_epochs: 2,
            batch_size: 4,
            loss: ContrastiveKind::Cl,
            ..tiny_config()
        };
        let trace = train_stage1(&mut state, &data, &config).unwrap();
        assert!(trace.iter().all(|v| v.is_finite()));
    }
}
