//! Asymmetric contrastive losses for imbalanced binary classification,
//! built on a minimal reverse-mode differentiation engine, with a discrete
//! information-theory toolkit and a benchmark harness for imbalance
//! scenarios.
//!
//! The loss family centers on supervised contrastive learning: each anchor
//! in a mini-batch is pulled toward its same-class features and, in the
//! asymmetric variants, explicitly pushed away from its different-class
//! features through an `η`-weighted term — which is what keeps a lone
//! minority sample contributing to the loss at all. A focusing exponent `γ`
//! further shifts weight onto hard pairs. Training follows a two-stage
//! recipe: contrastive feature learning with an MLP encoder and projection
//! head, then classifier fine-tuning on the frozen encoder.
//!
//! # Modules
//!
//! - [`infotheory`] — exact entropy, joint/conditional entropy, mutual
//!   information, KL divergence, and cross-entropy over finite
//!   distributions, in bits.
//! - [`autodiff`] — dense `f64` tensors and a tape-based reverse-mode
//!   engine with a closed, finite-difference-audited op set.
//! - [`losses`] — CE, focal, and asymmetric multi-label losses; the
//!   contrastive family CL/FCL/ACL/AFCL, each as a plain value and as a
//!   differentiable graph node, plus naive reference implementations.
//! - [`model`] — MLP encoder + projection head, two-stage training with
//!   Adam, prediction, and bit-exact checkpoints.
//! - [`data`] — synthetic Gaussian tasks, IDX image loading, exact-count
//!   imbalance scenarios, stratified splits, flip augmentation.
//! - [`harness`] — accuracy/UWA metrics, the single-run pipeline, grid
//!   tables with seeded repeats, CSV/JSON emission, and self-checks.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example entropy_toolkit      # information-theory tour
//! cargo run --example gradient_check       # backward pass vs central differences
//! cargo run --example contrastive_losses   # the CL/FCL/ACL/AFCL family
//! cargo run --example imbalance_scenarios  # exact scenario counts and splits
//! cargo run --example idx_files            # IDX fixtures, loading, flips
//! cargo run --release --example two_stage_training  # the full pipeline
//! cargo run --release --example results_table       # a small averaged sweep
//! cargo run --example model_checkpoints    # save/restore round trip
//! ```
//!
//! The `asymcl` binary wraps the same machinery as `run`, `grid`, `check`,
//! and `info-theory` subcommands.
//!
//! # A taste
//!
//! ```
//! use asymcl::autodiff::Tensor;
//! use asymcl::losses::{acl, contrastive_loss, FeatureBatch};
//!
//! // Four features on the unit circle, one lone minority sample.
//! let features = Tensor::from_rows(&[
//!     vec![1.0, 0.0],
//!     vec![0.8, 0.6],
//!     vec![0.0, 1.0],
//!     vec![-0.6, 0.8],
//! ]).unwrap();
//! let batch = FeatureBatch::new(features, vec![0, 0, 0, 1]).unwrap();
//!
//! // The plain contrastive loss ignores the minority anchor (it has no
//! // positive pair); the asymmetric loss contrasts it with its negatives.
//! let cl = contrastive_loss(&batch, 0.07).unwrap();
//! let acl = acl(&batch, 0.07, 120.0).unwrap();
//! assert!(acl > cl);
//! ```

pub mod autodiff;
pub mod data;
pub mod harness;
pub mod infotheory;
pub mod losses;
pub mod model;
