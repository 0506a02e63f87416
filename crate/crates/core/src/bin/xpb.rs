use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xpb::attrib::Method;
use xpb::harness::{ExperimentConfig, ExplainJob, ModelKind, Pipeline, RunOptions};
use xpb::{Error, Result};

#[derive(Parser)]
#[command(name = "xpb", version, about = "Run the explainability benchmark pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults to the `paper` preset.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: paper or small.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rerun stages that the manifest marks as current.
    #[arg(long, global = true)]
    force: bool,
    /// Number of test observations to explain.
    #[arg(long, global = true)]
    limit: Option<usize>,
    /// Render SVG charts next to the report CSVs.
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/validation/test JSONL files.
    Generate,
    /// Fit models and write model files plus training histories.
    Train {
        /// Restrict to one or more of gbt, lstm-dot, lstm-self, lstm-plain.
        #[arg(long = "model")]
        models: Vec<ModelKind>,
    },
    /// Compute attributions on the test split.
    Explain {
        #[arg(long)]
        model: Option<ModelKind>,
        /// kernel-shap, exact-shapley, lrp, dot-attention or self-attention.
        #[arg(long, requires = "model")]
        method: Option<Method>,
    },
    /// Score attributions against the ground truth.
    Evaluate,
    /// Assemble summary tables and plot data.
    Report,
    /// Every stage in order.
    All,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("XPB_THREADS") else { return Ok(()) };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("XPB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let c = cli.common;
    let mut config = match (&c.config, &c.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::paper(),
    };
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(out) = c.out {
        config.output_dir = out;
    }
    let mut options = RunOptions { force: c.force, limit: c.limit, svg: c.svg, quiet: c.quiet, ..Default::default() };
    match &cli.command {
        Command::Train { models } if !models.is_empty() => options.models = Some(models.clone()),
        Command::Explain { model: Some(model), method } => {
            let jobs = match method {
                Some(m) => vec![ExplainJob::new(*model, *m)],
                None => config.attribution.jobs.iter().copied().filter(|j| j.model == *model).collect(),
            };
            for job in &jobs {
                job.check()?;
            }
            options.jobs = Some(jobs);
        }
        _ => {}
    }

    let mut pipeline = Pipeline::new(config, options)?;
    match cli.command {
        Command::Generate => pipeline.generate(),
        Command::Train { .. } => pipeline.train(),
        Command::Explain { .. } => pipeline.explain(),
        Command::Evaluate => pipeline.evaluate(),
        Command::Report => pipeline.report(),
        Command::All => pipeline.all(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
