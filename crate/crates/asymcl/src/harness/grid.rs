//! Grid runner and result persistence.
//!
//! The grid mirrors the experiment tables: an η sweep at γ = 0, a γ sweep at
//! η = 0 (both over the eleven imbalance scenarios), and a loss-comparison
//! sweep over the five contrastive configurations. Each cell runs `repeats`
//! times with seeds `master + run_index` and is aggregated by the mean;
//! because class test counts are identical across repeats, the mean
//! accuracy/UWA equal the metrics recomputed from the summed confusion
//! counts, keeping averaged rows recomputable like ordinary rows.

use super::{accuracy, run_experiment, uwa, ConfusionCounts, HarnessError, ResultRow, RunConfig};
use crate::losses::ContrastiveKind;
use std::fs;
use std::path::Path;

/// η values of the η-sweep table.
pub const DEFAULT_ETA_GRID: [f64; 6] = [0.0, 60.0, 120.0, 180.0, 240.0, 300.0];
/// γ values of the γ-sweep table.
pub const DEFAULT_GAMMA_GRID: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 7.0, 10.0];
/// The eleven imbalance scenarios, from balanced to 98:2.
pub const DEFAULT_SCENARIOS: [&str; 11] = [
    "50:50", "55:45", "60:40", "65:35", "70:30", "75:25", "80:20", "85:15", "90:10", "95:5", "98:2",
];

/// One loss configuration of a sweep: the variant plus its (η, γ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCell {
    pub kind: ContrastiveKind,
    pub eta: f64,
    pub gamma: f64,
}

/// The five configurations of the loss-comparison table.
pub fn loss_comparison_cells() -> Vec<LossCell> {
    vec![
        LossCell {
            kind: ContrastiveKind::Cl,
            eta: 0.0,
            gamma: 0.0,
        },
        LossCell {
            kind: ContrastiveKind::Fcl,
            eta: 0.0,
            gamma: 1.0,
        },
        LossCell {
            kind: ContrastiveKind::Acl,
            eta: 300.0,
            gamma: 0.0,
        },
        LossCell {
            kind: ContrastiveKind::Afcl,
            eta: 300.0,
            gamma: 2.0,
        },
        LossCell {
            kind: ContrastiveKind::Afcl,
            eta: 300.0,
            gamma: 7.0,
        },
    ]
}

/// Per-cell mean and standard deviation (the mean is what the tables
/// report; the deviation is emitted as supplementary output only).
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub scenario: String,
    pub loss_name: String,
    pub eta: f64,
    pub gamma: f64,
    pub mean_accuracy: f64,
    pub mean_uwa: f64,
    pub std_accuracy: f64,
    pub std_uwa: f64,
    pub repeats: usize,
}

/// A cell run that errored; recorded, never fabricated into a metric.
#[derive(Debug, Clone)]
pub struct FailedCell {
    pub scenario: String,
    pub loss_name: String,
    pub eta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub seed: u64,
    pub message: String,
}

/// Outcome of one sweep: averaged rows (one per cell), per-cell statistics,
/// per-run rows, and any failures.
#[derive(Debug, Default)]
pub struct SweepResult {
    pub averaged: Vec<ResultRow>,
    pub cells: Vec<CellStats>,
    pub per_run: Vec<ResultRow>,
    pub failures: Vec<FailedCell>,
}

/// All three tables.
#[derive(Debug)]
pub struct GridTables {
    pub eta: SweepResult,
    pub gamma: SweepResult,
    pub loss_comparison: SweepResult,
}

/// Runs one sweep: every scenario × loss cell, `repeats` times each with
/// seeds `base.seed + run_index`. A failed run is recorded and the sweep
/// continues; a cell averages over its successful runs.
pub fn run_sweep(
    base: &RunConfig,
    cells: &[LossCell],
    scenarios: &[String],
    repeats: usize,
) -> Result<SweepResult, HarnessError> {
    if cells.is_empty() || scenarios.is_empty() || repeats == 0 {
        return Err(HarnessError::InvalidConfig(
            "grid needs at least one cell, one scenario, and one repeat".into(),
        ));
    }
    let mut result = SweepResult::default();
    for scenario in scenarios {
        for cell in cells {
            let mut rows = Vec::with_capacity(repeats);
            for run_index in 0..repeats {
                let mut config = base.clone();
                config.scenario = scenario.clone();
                config.train.loss = cell.kind;
                config.train.loss_params.eta = cell.eta;
                config.train.loss_params.gamma = cell.gamma;
                config.seed = base.seed.wrapping_add(run_index as u64);
                match run_experiment(&config) {
                    Ok(row) => rows.push(row),
                    Err(error) => result.failures.push(FailedCell {
                        scenario: scenario.clone(),
                        loss_name: cell.kind.name().to_string(),
                        eta: cell.eta,
                        gamma: cell.gamma,
                        tau: base.train.loss_params.tau,
                        seed: config.seed,
                        message: error.to_string(),
                    }),
                }
            }
            if rows.is_empty() {
                continue;
            }
            let (avg, stats) = aggregate(&rows, base.seed)?;
            result.averaged.push(avg);
            result.cells.push(stats);
            result.per_run.extend(rows);
        }
    }
    Ok(result)
}

/// Mean row over a cell's runs. Confusion counts are summed; since every
/// repeat of a scenario has identical per-class test sizes, the metrics of
/// the summed counts equal the arithmetic means of the per-run metrics.
fn aggregate(rows: &[ResultRow], master_seed: u64) -> Result<(ResultRow, CellStats), HarnessError> {
    let first = &rows[0];
    let mut counts = ConfusionCounts::default();
    let mut runtime = 0.0;
    for row in rows {
        counts.true_pos += row.counts.true_pos;
        counts.true_neg += row.counts.true_neg;
        counts.false_pos += row.counts.false_pos;
        counts.false_neg += row.counts.false_neg;
        runtime += row.runtime_seconds;
    }
    let n = rows.len() as f64;
    let mean = |extract: fn(&ResultRow) -> f64| rows.iter().map(extract).sum::<f64>() / n;
    let std = |extract: fn(&ResultRow) -> f64, mean: f64| {
        (rows
            .iter()
            .map(|r| (extract(r) - mean).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let mean_accuracy = mean(|r| r.accuracy);
    let mean_uwa = mean(|r| r.uwa);
    let averaged = ResultRow {
        scenario: first.scenario.clone(),
        loss_name: first.loss_name.clone(),
        eta: first.eta,
        gamma: first.gamma,
        tau: first.tau,
        seed: master_seed,
        accuracy: accuracy(&counts)?,
        uwa: uwa(&counts)?,
        counts,
        runtime_seconds: runtime,
    };
    let stats = CellStats {
        scenario: first.scenario.clone(),
        loss_name: first.loss_name.clone(),
        eta: first.eta,
        gamma: first.gamma,
        mean_accuracy,
        mean_uwa,
        std_accuracy: std(|r| r.accuracy, mean_accuracy),
        std_uwa: std(|r| r.uwa, mean_uwa),
        repeats: rows.len(),
    };
    Ok((averaged, stats))
}

/// Runs the full grid: η sweep at γ = 0, γ sweep at η = 0, and the
/// loss-comparison sweep on the base scenario.
pub fn run_grid(
    base: &RunConfig,
    eta_grid: &[f64],
    gamma_grid: &[f64],
    scenarios: &[String],
    repeats: usize,
) -> Result<GridTables, HarnessError> {
    let eta_cells: Vec<LossCell> = eta_grid
        .iter()
        .map(|&eta| LossCell {
            kind: ContrastiveKind::Afcl,
            eta,
            gamma: 0.0,
        })
        .collect();
    let gamma_cells: Vec<LossCell> = gamma_grid
        .iter()
        .map(|&gamma| LossCell {
            kind: ContrastiveKind::Afcl,
            eta: 0.0,
            gamma,
        })
        .collect();
    Ok(GridTables {
        eta: run_sweep(base, &eta_cells, scenarios, repeats)?,
        gamma: run_sweep(base, &gamma_cells, scenarios, repeats)?,
        loss_comparison: run_sweep(
            base,
            &loss_comparison_cells(),
            std::slice::from_ref(&base.scenario),
            repeats,
        )?,
    })
}

/// Output encoding for result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str =
    "scenario,loss,eta,gamma,tau,seed,accuracy,uwa,tp,tn,fp,fn,runtime_seconds";

fn csv_line(row: &ResultRow) -> String {
    format!(
        "{},{},{:.6},{:.6},{:.6},{},{:.6},{:.6},{},{},{},{},{:.6}",
        row.scenario,
        row.loss_name,
        row.eta,
        row.gamma,
        row.tau,
        row.seed,
        row.accuracy,
        row.uwa,
        row.counts.true_pos,
        row.counts.true_neg,
        row.counts.false_pos,
        row.counts.false_neg,
        row.runtime_seconds
    )
}

fn json_object(row: &ResultRow) -> String {
    format!(
        concat!(
            "{{\"scenario\":\"{}\",\"loss\":\"{}\",\"eta\":{:.6},\"gamma\":{:.6},",
            "\"tau\":{:.6},\"seed\":{},\"accuracy\":{:.6},\"uwa\":{:.6},",
            "\"tp\":{},\"tn\":{},\"fp\":{},\"fn\":{},\"runtime_seconds\":{:.6}}}"
        ),
        row.scenario,
        row.loss_name,
        row.eta,
        row.gamma,
        row.tau,
        row.seed,
        row.accuracy,
        row.uwa,
        row.counts.true_pos,
        row.counts.true_neg,
        row.counts.false_pos,
        row.counts.false_neg,
        row.runtime_seconds
    )
}

fn render(rows: &[ResultRow], failures: &[FailedCell], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in rows {
                out.push_str(&csv_line(row));
                out.push('\n');
            }
            for failed in failures {
                // Sentinel row: empty metric fields, never a fabricated number.
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{:.6},{},,,,,,,\n",
                    failed.scenario,
                    failed.loss_name,
                    failed.eta,
                    failed.gamma,
                    failed.tau,
                    failed.seed
                ));
            }
            out
        }
        OutputFormat::Json => {
            let mut items: Vec<String> = rows.iter().map(json_object).collect();
            items.extend(failures.iter().map(|failed| {
                format!(
                    concat!(
                        "{{\"scenario\":\"{}\",\"loss\":\"{}\",\"eta\":{:.6},\"gamma\":{:.6},",
                        "\"tau\":{:.6},\"seed\":{},\"accuracy\":null,\"uwa\":null,",
                        "\"tp\":null,\"tn\":null,\"fp\":null,\"fn\":null,",
                        "\"runtime_seconds\":null,\"error\":{}}}"
                    ),
                    failed.scenario,
                    failed.loss_name,
                    failed.eta,
                    failed.gamma,
                    failed.tau,
                    failed.seed,
                    serde_json::to_string(&failed.message).unwrap_or_else(|_| "\"\"".into())
                )
            }));
            format!("[\n{}\n]\n", items.join(",\n"))
        }
    }
}

/// Writes rows to `path` in the chosen format. CSV columns are exactly
/// `scenario,loss,eta,gamma,tau,seed,accuracy,uwa,tp,tn,fp,fn,
/// runtime_seconds`; floats carry six decimals.
pub fn emit_results<P: AsRef<Path>>(
    rows: &[ResultRow],
    format: OutputFormat,
    path: P,
) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyRows);
    }
    fs::write(path, render(rows, &[], format))?;
    Ok(())
}

/// Writes a sweep's averaged rows plus sentinel rows for failed cells.
pub fn emit_sweep<P: AsRef<Path>>(
    sweep: &SweepResult,
    format: OutputFormat,
    path: P,
) -> Result<(), HarnessError> {
    if sweep.averaged.is_empty() && sweep.failures.is_empty() {
        return Err(HarnessError::EmptyRows);
    }
    fs::write(path, render(&sweep.averaged, &sweep.failures, format))?;
    Ok(())
}

/// Parses a CSV written by [`emit_results`]. Sentinel rows (empty metric
/// fields) are skipped.
pub fn read_results_csv<P: AsRef<Path>>(path: P) -> Result<Vec<ResultRow>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(HarnessError::ResultFormat {
                line: 1,
                message: format!("unexpected header {header:?}"),
            })
        }
        None => {
            return Err(HarnessError::ResultFormat {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(HarnessError::ResultFormat {
                line: index + 1,
                message: format!("expected 13 fields, got {}", fields.len()),
            });
        }
        if fields[6].is_empty() {
            continue; // failed-cell sentinel
        }
        let parse_f64 = |i: usize| -> Result<f64, HarnessError> {
            fields[i].parse().map_err(|e| HarnessError::ResultFormat {
                line: index + 1,
                message: format!("field {i}: {e}"),
            })
        };
        let parse_usize = |i: usize| -> Result<usize, HarnessError> {
            fields[i].parse().map_err(|e| HarnessError::ResultFormat {
                line: index + 1,
                message: format!("field {i}: {e}"),
            })
        };
        rows.push(ResultRow {
            scenario: fields[0].to_string(),
            loss_name: fields[1].to_string(),
            eta: parse_f64(2)?,
            gamma: parse_f64(3)?,
            tau: parse_f64(4)?,
            seed: fields[5].parse().map_err(|e| HarnessError::ResultFormat {
                line: index + 1,
                message: format!("field 5: {e}"),
            })?,
            accuracy: parse_f64(6)?,
            uwa: parse_f64(7)?,
            counts: ConfusionCounts {
                true_pos: parse_usize(8)?,
                true_neg: parse_usize(9)?,
                false_pos: parse_usize(10)?,
                false_neg: parse_usize(11)?,
            },
            runtime_seconds: parse_f64(12)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            scenario: "90:10".into(),
            loss_name: "afcl".into(),
            eta: 300.0,
            gamma: 7.0,
            tau: 0.07,
            seed: 42,
            accuracy: 0.863_636_363_636,
            uwa: 0.7,
            counts: ConfusionCounts {
                true_pos: 90,
                true_neg: 5,
                false_pos: 5,
                false_neg: 10,
            },
            runtime_seconds: 1.25,
        }
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let rows = vec![sample_row()];
        let dir = std::env::temp_dir().join("asymcl_results_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        emit_results(&rows, OutputFormat::Csv, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2); // header + one row
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        let (a, b) = (&rows[0], &back[0]);
        assert_eq!(a.scenario, b.scenario);
        assert_eq!(a.loss_name, b.loss_name);
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.seed, b.seed);
        // Floats survive at the six decimals they were printed with.
        assert!((a.accuracy - b.accuracy).abs() <= 5e-7);
        assert!((a.uwa - b.uwa).abs() <= 5e-7);
    }

    #[test]
    fn emit_rejects_empty_rows() {
        let dir = std::env::temp_dir().join("asymcl_results_empty");
        fs::create_dir_all(&dir).unwrap();
        assert!(matches!(
            emit_results(&[], OutputFormat::Csv, dir.join("never.csv")),
            Err(HarnessError::EmptyRows)
        ));
    }

    #[test]
    fn json_output_is_valid_and_six_decimal() {
        let rows = vec![sample_row()];
        let dir = std::env::temp_dir().join("asymcl_results_json");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.json");
        emit_results(&rows, OutputFormat::Json, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let object = &parsed.as_array().unwrap()[0];
        assert_eq!(object["scenario"], "90:10");
        assert_eq!(object["tp"], 90);
        assert!((object["accuracy"].as_f64().unwrap() - 0.863636).abs() < 1e-9);
        assert!(text.contains("\"eta\":300.000000"));
    }

    #[test]
    fn failed_cells_render_as_empty_fields() {
        let sweep = SweepResult {
            averaged: vec![sample_row()],
            failures: vec![FailedCell {
                scenario: "98:2".into(),
                loss_name: "cl".into(),
                eta: 0.0,
                gamma: 0.0,
                tau: 0.07,
                seed: 43,
                message: "boom".into(),
            }],
            ..Default::default()
        };
        let dir = std::env::temp_dir().join("asymcl_results_failed");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sweep.csv");
        emit_sweep(&sweep, OutputFormat::Csv, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let sentinel = text.lines().last().unwrap();
        assert!(sentinel.starts_with("98:2,cl,"));
        assert!(sentinel.ends_with(",,,,,,,"));
        assert!(!text.contains("NaN"));
        // Reading skips the sentinel but keeps the real row.
        assert_eq!(read_results_csv(&path).unwrap().len(), 1);
    }
}
