//! `perceptron-lab <experiment> --config <path.json> [--seed U64] [--out DIR] [--workers K]`
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 capability error (`n > 30`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perceptron_core::harness::{self, ExperimentConfig, ExperimentKind, MANIFEST_FILE};
use perceptron_core::Error;

#[derive(Debug, Parser)]
#[command(name = "perceptron-lab", version, about = "Symmetric binary perceptron experiments")]
struct Args {
    /// figure1, concentration, freezing, contiguity, capacity_scan or process_diagnostics
    experiment: String,
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `perceptron-lab-out/<experiment>`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Json(_) | Error::Domain(_) | Error::Precondition(_) => 2,
        Error::Capability(_) => 3,
        _ => 1,
    }
}

fn run(args: Args) -> Result<(), Error> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out = args
        .out
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("perceptron-lab-out").join(kind.name()));

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.workers {
        if k == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("cannot start workers: {e}")))?;

    let manifest = pool.install(|| harness::run(kind, config, &out))?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: wrote {} files, manifest {}",
        kind,
        manifest.files.len(),
        out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perceptron-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
