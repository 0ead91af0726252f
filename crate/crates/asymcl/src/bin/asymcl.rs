//! Command-line front end: single experiments, table grids, self-checks,
//! and information-theory evaluation. All logic lives in the library; this
//! binary only parses arguments and prints.

use anyhow::{bail, Context, Result};
use asymcl::harness::{
    emit_results, emit_sweep, run_all_checks, run_experiment, run_grid, DataSource, OutputFormat,
    RunConfig, SweepResult, DEFAULT_ETA_GRID, DEFAULT_GAMMA_GRID, DEFAULT_SCENARIOS,
};
use asymcl::infotheory::{self, JointPmf, Pmf};
use asymcl::losses::ContrastiveKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "asymcl",
    about = "Asymmetric contrastive losses on imbalanced binary tasks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and print its result row.
    Run(RunArgs),
    /// Reproduce the η-sweep, γ-sweep, and loss-comparison tables.
    Grid(GridArgs),
    /// Run the invariant and oracle self-check suites.
    Check(CheckArgs),
    /// Evaluate entropy, KL divergence, and mutual information on
    /// distributions given as JSON.
    InfoTheory(InfoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DataArg {
    Synthetic,
    Idx,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Imbalance scenario, majority:minority (e.g. 90:10).
    #[arg(long)]
    scenario: Option<String>,
    /// Contrastive loss for stage 1.
    #[arg(long)]
    loss: Option<String>,
    /// Asymmetry weight η.
    #[arg(long)]
    eta: Option<f64>,
    /// Focusing parameter γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Softmax temperature τ.
    #[arg(long)]
    tau: Option<f64>,
    /// Stage-1 (feature learning) epochs.
    #[arg(long)]
    epochs1: Option<usize>,
    /// Stage-2 (classifier) epochs.
    #[arg(long)]
    epochs2: Option<usize>,
    /// Learning rate for both stages.
    #[arg(long)]
    lr: Option<f64>,
    /// Mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Data source.
    #[arg(long, value_enum)]
    data: Option<DataArg>,
    /// IDX image file (with --data idx).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (with --data idx).
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut config: RunConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(scenario) = &self.scenario {
            config.scenario = scenario.clone();
        }
        if let Some(loss) = &self.loss {
            config.train.loss = ContrastiveKind::parse(loss)?;
        }
        if let Some(eta) = self.eta {
            config.train.loss_params.eta = eta;
        }
        if let Some(gamma) = self.gamma {
            config.train.loss_params.gamma = gamma;
        }
        if let Some(tau) = self.tau {
            config.train.loss_params.tau = tau;
        }
        if let Some(epochs) = self.epochs1 {
            config.train.stage1_epochs = epochs;
        }
        if let Some(epochs) = self.epochs2 {
            config.train.stage2_epochs = epochs;
        }
        if let Some(lr) = self.lr {
            config.train.learning_rate = lr;
        }
        if let Some(batch) = self.batch_size {
            config.train.batch_size = batch;
        }
        match self.data {
            Some(DataArg::Idx) => {
                let images = self
                    .images
                    .clone()
                    .or(match &config.data {
                        DataSource::Idx { images, .. } => Some(PathBuf::from(images)),
                        _ => None,
                    })
                    .context("--data idx requires --images")?;
                let labels = self
                    .labels
                    .clone()
                    .or(match &config.data {
                        DataSource::Idx { labels, .. } => Some(PathBuf::from(labels)),
                        _ => None,
                    })
                    .context("--data idx requires --labels")?;
                let (class_a, class_b) = match &config.data {
                    DataSource::Idx {
                        class_a, class_b, ..
                    } => (*class_a, *class_b),
                    _ => (0, 6),
                };
                config.data = DataSource::Idx {
                    images: images.display().to_string(),
                    labels: labels.display().to_string(),
                    class_a,
                    class_b,
                };
            }
            Some(DataArg::Synthetic) if !matches!(config.data, DataSource::Synthetic { .. }) => {
                config.data = DataSource::Synthetic {
                    dim: 8,
                    separation: 6.0,
                };
            }
            Some(DataArg::Synthetic) => {}
            None => {}
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Write the result row to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output encoding for --out.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for table_eta, table_gamma, and table_loss files.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Output encoding for the table files.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Independent seeded runs per grid cell.
    #[arg(long, default_value_t = 4)]
    repeats: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct InfoArgs {
    /// JSON file with optional fields "p", "q" (arrays) and "joint"
    /// (matrix). Use "-" for stdin.
    #[arg(long)]
    config: PathBuf,
    /// Write the evaluation to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Check(args) => cmd_check(args),
        Command::InfoTheory(args) => cmd_info_theory(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = args.config.build()?;
    let row = run_experiment(&config)?;
    println!(
        "scenario {}  loss {} (eta {}, gamma {}, tau {})  seed {}",
        row.scenario, row.loss_name, row.eta, row.gamma, row.tau, row.seed
    );
    println!(
        "accuracy {:.4}  uwa {:.4}  tp {} tn {} fp {} fn {}  ({:.2}s)",
        row.accuracy,
        row.uwa,
        row.counts.true_pos,
        row.counts.true_neg,
        row.counts.false_pos,
        row.counts.false_neg,
        row.runtime_seconds
    );
    if let Some(path) = args.out {
        emit_results(std::slice::from_ref(&row), args.format.into(), &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_sweep(name: &str, sweep: &SweepResult) {
    println!(
        "{name}: {} cells, {} failures",
        sweep.cells.len(),
        sweep.failures.len()
    );
    for cell in &sweep.cells {
        println!(
            "  {} {} eta {:<5} gamma {:<4} accuracy {:.4} (std {:.4})  uwa {:.4} (std {:.4})",
            cell.scenario,
            cell.loss_name,
            cell.eta,
            cell.gamma,
            cell.mean_accuracy,
            cell.std_accuracy,
            cell.mean_uwa,
            cell.std_uwa
        );
    }
    for failed in &sweep.failures {
        println!(
            "  FAILED {} {} seed {}: {}",
            failed.scenario, failed.loss_name, failed.seed, failed.message
        );
    }
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let base = args.config.build()?;
    let scenarios: Vec<String> = DEFAULT_SCENARIOS.iter().map(|s| s.to_string()).collect();
    let tables = run_grid(
        &base,
        &DEFAULT_ETA_GRID,
        &DEFAULT_GAMMA_GRID,
        &scenarios,
        args.repeats,
    )?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let extension = match args.format {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    };
    for (name, sweep) in [
        ("table_eta", &tables.eta),
        ("table_gamma", &tables.gamma),
        ("table_loss", &tables.loss_comparison),
    ] {
        let path = args.out.join(format!("{name}.{extension}"));
        emit_sweep(sweep, args.format.into(), &path)?;
        println!("wrote {}", path.display());
    }
    print_sweep("eta sweep (gamma = 0)", &tables.eta);
    print_sweep("gamma sweep (eta = 0)", &tables.gamma);
    print_sweep("loss comparison", &tables.loss_comparison);
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let outcomes = run_all_checks(args.seed);
    let mut all_passed = true;
    for outcome in &outcomes {
        println!(
            "{} {} — {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.detail
        );
        all_passed &= outcome.passed;
    }
    if !all_passed {
        bail!("one or more checks failed");
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct InfoInput {
    p: Option<Vec<f64>>,
    q: Option<Vec<f64>>,
    joint: Option<Vec<Vec<f64>>>,
}

fn cmd_info_theory(args: InfoArgs) -> Result<()> {
    let text = if args.config.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        fs::read_to_string(&args.config)
            .with_context(|| format!("reading {}", args.config.display()))?
    };
    let input: InfoInput = serde_json::from_str(&text).context("parsing distribution JSON")?;
    let mut report = serde_json::Map::new();

    if let Some(p_raw) = &input.p {
        let p = Pmf::new(p_raw.clone())?;
        report.insert("entropy_bits".into(), infotheory::entropy(&p).into());
        if let Some(q_raw) = &input.q {
            let q = Pmf::new(q_raw.clone())?;
            report.insert(
                "kl_divergence_bits".into(),
                infotheory::kl_divergence(&p, &q)?.into(),
            );
            report.insert(
                "cross_entropy_bits".into(),
                infotheory::cross_entropy(&p, &q)?.into(),
            );
        }
    }
    if let Some(grid) = &input.joint {
        let joint = JointPmf::new(grid)?;
        report.insert(
            "joint_entropy_bits".into(),
            infotheory::joint_entropy(&joint).into(),
        );
        report.insert(
            "conditional_entropy_bits".into(),
            infotheory::conditional_entropy(&joint).into(),
        );
        report.insert(
            "mutual_information_bits".into(),
            infotheory::mutual_information(&joint).into(),
        );
        report.insert(
            "marginal_entropy_x_bits".into(),
            infotheory::entropy(&joint.row_marginal()).into(),
        );
        report.insert(
            "marginal_entropy_y_bits".into(),
            infotheory::entropy(&joint.col_marginal()).into(),
        );
    }
    if report.is_empty() {
        bail!("input JSON must provide \"p\" (with optional \"q\") and/or \"joint\"");
    }
    let rendered = serde_json::to_string_pretty(&serde_json::Value::Object(report))?;
    match args.out {
        Some(path) => {
            fs::write(&path, format!("{rendered}\n"))?;
            println!("wrote {}", path.display());
        }
        None => println!("{rendered}"),
    }
    Ok(())
}
