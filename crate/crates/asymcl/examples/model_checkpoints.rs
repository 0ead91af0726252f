//! Saving and restoring trained models: train a small two-stage model,
//! write it to a checkpoint file, and verify the restored copy predicts
//! bit-identically.
//!
//! ```bash
//! cargo run --example model_checkpoints
//! ```

use asymcl::harness::{run_experiment_full, DataSource, EncoderShape, RunConfig};
use asymcl::losses::{ContrastiveKind, LossParams};
use asymcl::model::{load_checkpoint, save_checkpoint, TrainConfig};

fn main() -> anyhow::Result<()> {
    let config = RunConfig {
        data: DataSource::Synthetic {
            dim: 4,
            separation: 5.0,
        },
        scenario: "75:25".into(),
        total_size: 160,
        encoder: EncoderShape {
            hidden_dims: vec![16],
            feature_dim: 8,
            projection_dim: 4,
        },
        train: TrainConfig {
            stage1_epochs: 5,
            stage2_epochs: 5,
            batch_size: 32,
            loss: ContrastiveKind::Acl,
            loss_params: LossParams {
                eta: 120.0,
                ..LossParams::default()
            },
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    };
    let output = run_experiment_full(&config)?;
    println!(
        "trained: accuracy {:.4}, uwa {:.4}, encoder checksum {:#018x}",
        output.row.accuracy,
        output.row.uwa,
        output.state.frozen_group_checksum()
    );

    let dir = std::env::temp_dir().join("asymcl_ckpt_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    save_checkpoint(&output.state, &path)?;
    println!(
        "saved {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let restored = load_checkpoint(&path)?;
    println!(
        "restored: checksum {:#018x}, frozen {}, classifier trained {}",
        restored.frozen_group_checksum(),
        restored.is_frozen(),
        restored.classifier_trained()
    );

    let before = output.state.predict(output.test_set.samples())?;
    let after = restored.predict(output.test_set.samples())?;
    let identical = before
        .iter()
        .zip(&after)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("predictions bit-identical after round trip: {identical}");
    Ok(())
}
