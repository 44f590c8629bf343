use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use domsum::experiment::{self, ExperimentConfig, RunManifest};

#[derive(Parser)]
#[command(
    name = "domsum",
    version,
    about = "Token-level decision summarization experiments"
)]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, summarize and score the full experiment matrix.
    Run(RunArgs),
    /// Check a config and print every problem found.
    Validate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Train the configured topic models and cache their posteriors.
    Train(RunArgs),
    /// Score an existing summaries file against decision abstracts.
    Score(ScoreArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScoreArgs {
    /// JSON lines with `decision_id` and `tokens`.
    #[arg(long)]
    summaries: PathBuf,
    /// Decisions sidecar holding the gold abstracts.
    #[arg(long)]
    decisions: PathBuf,
    /// Optional experiment config supplying ROUGE and preprocessing settings.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(short, long, default_value = "scores")]
    output_dir: PathBuf,
    /// Row label in the markdown table; defaults to the summaries file stem.
    #[arg(long)]
    label: Option<String>,
}

fn load(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report(manifest: &RunManifest, out: &Path) {
    for stage in &manifest.stages {
        log::debug!("{} {} {:.3}s", stage.name, stage.detail, stage.seconds);
    }
    println!(
        "{} artifacts written to {}",
        manifest.artifacts.len(),
        out.display()
    );
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args)?;
            let manifest = experiment::run(&cfg)?;
            report(&manifest, &cfg.output_dir);
            let md = cfg.output_dir.join("comparison.md");
            if let Ok(table) = std::fs::read_to_string(&md) {
                println!("\n{table}");
            }
        }
        Command::Train(args) => {
            let cfg = load(&args)?;
            let manifest = experiment::train_only(&cfg)?;
            report(&manifest, &cfg.output_dir);
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let diags = cfg.validate();
            if !diags.is_empty() {
                for d in &diags {
                    eprintln!("{d}");
                }
                bail!("{} problem(s) in {}", diags.len(), config.display());
            }
            println!("{} is valid", config.display());
        }
        Command::Score(args) => {
            let cfg = match &args.config {
                Some(p) => ExperimentConfig::load(p)
                    .with_context(|| format!("reading config {}", p.display()))?,
                None => ExperimentConfig::default(),
            };
            let report = experiment::score_files(
                &args.summaries,
                &args.decisions,
                &cfg.rouge,
                &cfg.preprocess,
            )?;
            let label = args.label.unwrap_or_else(|| {
                args.summaries
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "summaries".into())
            });
            experiment::write_score_report(&report, &args.output_dir, &label)?;
            for (variant, prf) in &report.macro_avg {
                println!(
                    "{variant}\tP {:.4}\tR {:.4}\tF1 {:.4}",
                    prf.precision, prf.recall, prf.f1
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
