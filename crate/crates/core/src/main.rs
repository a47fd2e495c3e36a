use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nl2fix::pipeline::{Pipeline, PipelineError, RunConfig, Threshold};
use nl2fix::prompt::Strategy;
use nl2fix::rank::Variant;

#[derive(Parser)]
#[command(name = "nl2fix", version, about = "Generate, validate and rank bug fixes from issue descriptions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample candidate patches and write the manifest
    Generate(Opts),
    /// Run the test commands on every unique candidate
    Validate(Opts),
    /// Write pass@k, summary, per-project, similarity and overlap reports
    Report(Opts),
    /// Rank candidates by embedding similarity and report r.pass@k
    Rank(Opts),
    /// generate, validate, report and rank in sequence
    Run(Opts),
}

#[derive(clap::Args)]
struct Opts {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated bug ids
    #[arg(long, value_delimiter = ',')]
    bugs: Option<Vec<String>>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// A number or "median"
    #[arg(long)]
    threshold: Option<Threshold>,
    #[arg(long)]
    variant: Option<Variant>,
}

impl Opts {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(b) = &self.bugs {
            cfg.bug_filter = Some(b.clone());
        }
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(t) = self.temperature {
            cfg.temperature = t;
        }
        if let Some(n) = self.samples {
            cfg.n_samples = n;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = Some(j);
        }
        if let Some(t) = self.threshold {
            cfg.ranking.threshold = t;
        }
        if let Some(v) = self.variant {
            cfg.ranking.variant = Some(v);
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let (opts, command) = match &cli.command {
        Command::Generate(o) => (o, "generate"),
        Command::Validate(o) => (o, "validate"),
        Command::Report(o) => (o, "report"),
        Command::Rank(o) => (o, "rank"),
        Command::Run(o) => (o, "run"),
    };
    let pipeline = Pipeline::new(opts.config()?)?;
    match command {
        "generate" => {
            let manifest = pipeline.generate()?;
            log::info!("{} candidates written", manifest.len());
        }
        "validate" => {
            pipeline.validate()?;
        }
        "report" => pipeline.report()?,
        "rank" => {
            pipeline.rank()?;
        }
        _ => pipeline.run()?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nl2fix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
