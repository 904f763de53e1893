use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ibe_cli::{CliError, Outcome, Pipeline, PipelineConfig, RunOptions, Stage};
use ibe_core::Feature;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Generate,
    Formalize,
    Prove,
    Features,
    Fit,
    Evaluate,
    Report,
    /// Every stage in order.
    Run,
}

impl Command {
    fn stages(self) -> Vec<Stage> {
        match self {
            Command::Generate => vec![Stage::Generate],
            Command::Formalize => vec![Stage::Formalize],
            Command::Prove => vec![Stage::Prove],
            Command::Features => vec![Stage::Features],
            Command::Fit => vec![Stage::Fit],
            Command::Evaluate => vec![Stage::Evaluate],
            Command::Report => vec![Stage::Report],
            Command::Run => Stage::ALL.to_vec(),
        }
    }
}

/// Scores competing explanations and selects answers to causal questions.
#[derive(Debug, Parser)]
#[command(name = "ibe-eval", version)]
struct Args {
    command: Command,
    /// Pipeline configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Recompute stages whose manifest is up to date.
    #[arg(long)]
    force: bool,
    /// Restrict per-example stages to these example ids.
    #[arg(long, value_delimiter = ',')]
    examples: Vec<String>,
    /// Selection features, overriding `model.features`.
    #[arg(long, value_delimiter = ',')]
    features: Vec<Feature>,
}

fn run(args: Args) -> Result<(), CliError> {
    let config = PipelineConfig::load(&args.config)?;
    let options = RunOptions {
        force: args.force,
        examples: (!args.examples.is_empty())
            .then(|| args.examples.into_iter().collect::<BTreeSet<_>>()),
        features: (!args.features.is_empty()).then_some(args.features),
    };
    let pipeline = Pipeline::new(config, options)?;
    println!("run directory: {}", pipeline.run.root.display());
    for stage in args.command.stages() {
        let outcome = pipeline.run_stage(stage)?;
        let word = match outcome {
            Outcome::Ran => "done",
            Outcome::Cached => "up to date",
        };
        println!("{stage}: {word}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
