//! A desk-sized η-sweep grid: four seeded repeats per cell over three
//! imbalance scenarios, averaged rows written to CSV and read back.
//!
//! The full eleven-scenario tables are produced by the `grid` subcommand of
//! the `asymcl` binary; this example keeps epochs and sizes small so it
//! finishes in seconds.
//!
//! ```bash
//! cargo run --release --example results_table
//! ```

use asymcl::harness::{
    emit_sweep, read_results_csv, run_sweep, DataSource, EncoderShape, LossCell, OutputFormat,
    RunConfig,
};
use asymcl::losses::ContrastiveKind;
use asymcl::model::TrainConfig;

fn main() -> anyhow::Result<()> {
    let base = RunConfig {
        data: DataSource::Synthetic {
            dim: 4,
            separation: 4.0,
        },
        total_size: 200,
        encoder: EncoderShape {
            hidden_dims: vec![16],
            feature_dim: 8,
            projection_dim: 4,
        },
        train: TrainConfig {
            stage1_epochs: 4,
            stage2_epochs: 4,
            batch_size: 32,
            loss: ContrastiveKind::Afcl,
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    };

    let cells: Vec<LossCell> = [0.0, 120.0, 300.0]
        .iter()
        .map(|&eta| LossCell {
            kind: ContrastiveKind::Afcl,
            eta,
            gamma: 0.0,
        })
        .collect();
    let scenarios: Vec<String> = ["70:30", "85:15", "95:5"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let sweep = run_sweep(&base, &cells, &scenarios, 4)?;
    println!(
        "{:>8} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "ratio", "eta", "accuracy", "(std)", "uwa", "(std)"
    );
    for cell in &sweep.cells {
        println!(
            "{:>8} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            cell.scenario,
            cell.eta,
            cell.mean_accuracy,
            cell.std_accuracy,
            cell.mean_uwa,
            cell.std_uwa
        );
    }

    let dir = std::env::temp_dir().join("asymcl_results_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("eta_sweep.csv");
    emit_sweep(&sweep, OutputFormat::Csv, &path)?;
    let rows = read_results_csv(&path)?;
    println!("\nwrote {} averaged rows to {}", rows.len(), path.display());
    Ok(())
}
