use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use polysub::experiment::{parse_spec_arg, run_experiment, ExperimentConfig, Subcommand};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    Simulate,
    Lyapunov,
    FlatnessRate,
    LimitPoint,
    ShapeDist,
    InvariantDensity,
    RateIdentity,
    Diagnostics,
}

impl From<Study> for Subcommand {
    fn from(s: Study) -> Self {
        match s {
            Study::Simulate => Subcommand::Simulate,
            Study::Lyapunov => Subcommand::Lyapunov,
            Study::FlatnessRate => Subcommand::FlatnessRate,
            Study::LimitPoint => Subcommand::LimitPoint,
            Study::ShapeDist => Subcommand::ShapeDist,
            Study::InvariantDensity => Subcommand::InvariantDensity,
            Study::RateIdentity => Subcommand::RateIdentity,
            Study::Diagnostics => Subcommand::Diagnostics,
        }
    }
}

/// Random polygon subdivision experiments.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    study: Study,
    /// TOML config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker count, or `auto`.
    #[arg(long, value_parser = parse_threads)]
    threads: Option<Threads>,
    /// Split law: a label like `beta(3,3)`, a TOML file, or inline TOML keys.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
    }
}

fn build_config(cli: &Cli) -> polysub::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?;
            cfg.subcommand = cli.study.into();
            cfg
        }
        None => ExperimentConfig::new(cli.study.into()),
    };
    if let Some(d) = cli.d {
        cfg.d = d;
    }
    if let Some(s) = &cli.spec {
        cfg.spec = parse_spec_arg(s)?;
    }
    cfg.n_steps = cli.steps.or(cfg.n_steps);
    cfg.replicas = cli.replicas.or(cfg.replicas);
    cfg.grid_size = cli.grid_size.or(cfg.grid_size);
    cfg.samples = cli.samples.or(cfg.samples);
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    match cli.threads {
        Some(Threads::Auto) => cfg.threads = None,
        Some(Threads::Fixed(n)) => cfg.threads = Some(n),
        None => {}
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match build_config(&cli).and_then(|cfg| run_experiment(&cfg)) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", summary.output_dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
