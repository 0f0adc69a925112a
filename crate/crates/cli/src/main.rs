use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use regxplain::acceptance::{run_repro, ReproOptions};
use regxplain::config::{Overrides, RunConfig, RunConfigFile};
use regxplain::pipeline::{workers_from_env, Pipeline};

#[derive(Parser)]
#[command(name = "regxplain", version, about = "Explainers for graph regression models")]
struct Cli {
    /// TOML run configuration; built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Pins the dataset, regressor and explainer seeds to one value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root (default: `runs`, or `out` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute the requested stage even if its outputs exist.
    #[arg(long, global = true)]
    force: bool,
    /// Scaled-down defaults: 500 graphs, 300 regressor epochs, 5 seeds.
    #[arg(long, global = true)]
    desk_scale: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or load) the dataset and write its manifest.
    Generate,
    /// Train the GCN regressor.
    TrainGnn,
    /// Explain the explainer-test fold with the configured explainer.
    Explain,
    /// Explain and evaluate every configured explainer and seed.
    Evaluate,
    /// RegExplainer component ablations.
    Ablate,
    /// RegExplainer alpha or beta sweep.
    Sweep,
    /// Desk-scale acceptance run; prints one line per criterion.
    Repro {
        /// Skip the second pass that checks determinism.
        #[arg(long)]
        single_pass: bool,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let workers = workers_from_env();
    if let Command::Repro { single_pass } = cli.cmd {
        let opts = ReproOptions {
            out: cli.out.unwrap_or_else(|| PathBuf::from("runs")).join("repro"),
            seed: cli.seed.unwrap_or(0),
            workers,
            two_passes: !single_pass,
            verbose: true,
        };
        let outcomes = run_repro(&opts)?;
        println!();
        for o in &outcomes {
            println!("{}", o.line());
        }
        return Ok(outcomes.iter().all(|o| o.pass != Some(false)));
    }

    let file = match &cli.config {
        Some(p) => RunConfigFile::load(p)?,
        None => RunConfigFile::default(),
    };
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        desk_scale: cli.desk_scale,
    };
    let mut p = Pipeline::new(RunConfig::resolve(&file, &ov)?, cli.force, workers);
    p.source_config = cli.config.clone();
    match cli.cmd {
        Command::Generate => {
            p.cmd_generate()?;
        }
        Command::TrainGnn => {
            p.cmd_train_gnn()?;
        }
        Command::Explain => {
            p.cmd_explain()?;
        }
        Command::Evaluate => {
            p.cmd_evaluate()?;
        }
        Command::Ablate => {
            p.cmd_ablate()?;
        }
        Command::Sweep => {
            p.cmd_sweep()?;
        }
        Command::Repro { .. } => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
