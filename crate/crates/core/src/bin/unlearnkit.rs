use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use unlearnkit::config::PipelineConfig;
use unlearnkit::pipeline::{self, PipelineError, GRAPH_FILE, PATHS_FILE};

/// Mine a model's memory of an entity and build scoped unlearning datasets.
#[derive(Parser)]
#[command(name = "unlearnkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    /// Entity to mine.
    #[arg(long)]
    target: String,
    /// Optional disambiguating description.
    #[arg(long)]
    description: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the memory graph for a target.
    Mine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Sample forget and neighbor paths from a graph.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Graph file; defaults to `graph.json` in the output directory.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Turn sampled paths into forget and neighbor datasets.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Path file; defaults to `paths.jsonl` in the output directory.
        #[arg(long)]
        paths: Option<PathBuf>,
    },
    /// Mine, sample and synthesize in one run.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Compare two graphs (top-50 Jaccard and frequency cosine).
    Compare { graph_a: PathBuf, graph_b: PathBuf },
}

fn load(common: &Common) -> Result<(PipelineConfig, PathBuf), PipelineError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn or_default(given: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| dir.join(name))
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Mine { common, target } => {
            let (cfg, out) = load(&common)?;
            print(&pipeline::run_mine(&cfg, &target.target, target.description.as_deref(), Some(&out))?);
        }
        Command::Sample { common, graph } => {
            let (cfg, out) = load(&common)?;
            let graph = or_default(&graph, &out, GRAPH_FILE);
            print(&pipeline::run_sample(&cfg, &graph, Some(&out))?);
        }
        Command::Synth { common, graph, paths } => {
            let (cfg, out) = load(&common)?;
            let graph = or_default(&graph, &out, GRAPH_FILE);
            let paths = or_default(&paths, &out, PATHS_FILE);
            print(&pipeline::run_synth(&cfg, &graph, &paths, Some(&out))?);
        }
        Command::Pipeline { common, target } => {
            let (cfg, out) = load(&common)?;
            print(&pipeline::run_pipeline(&cfg, &target.target, target.description.as_deref(), Some(&out))?);
        }
        Command::Compare { graph_a, graph_b } => print(&pipeline::run_compare(&graph_a, &graph_b)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
