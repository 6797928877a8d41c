use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gammaclass::kde::{DEFAULT_BANDWIDTH, DEFAULT_KERNEL};
use gammaclass::sampler::DEFAULT_COUNTS_PER_SECOND;
use gammaclass::{ErrorClass, Kernel};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "gammaclass", version, about = "Classify short-time gamma spectra against reference materials")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Master seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Photons per simulated second of measurement
    #[arg(long, global = true, default_value_t = DEFAULT_COUNTS_PER_SECOND)]
    counts_per_second: u64,
    /// KDE bandwidth on the normalized energy axis
    #[arg(long, global = true, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// KDE kernel: cauchy or gaussian
    #[arg(long, global = true, default_value_t = DEFAULT_KERNEL)]
    kernel: Kernel,
    /// Directory for all written files (created if missing)
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one density model per train spectrum in a corpus manifest
    Fit(commands::FitArgs),
    /// Cross-validate kernel and bandwidth on one reference spectrum
    Cv(commands::CvArgs),
    /// Resample short-time spectra from a library class or a spectrum file
    Sample(commands::SampleArgs),
    /// Classify spectrum files against a library
    Classify(commands::ClassifyArgs),
    /// Confusion matrix and accuracy curve from resampled test spectra
    Evaluate(commands::EvaluateArgs),
    /// Log-likelihood difference D(t) between two classes over time
    Curve(commands::CurveArgs),
    /// Write a synthetic five-material reference corpus
    Synth(commands::SynthArgs),
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 3,
        ErrorClass::Numeric => 4,
        ErrorClass::Io => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = std::fs::create_dir_all(&g.output_dir)
        .map_err(|e| gammaclass::Error::Io { path: g.output_dir.clone(), source: e })
        .and_then(|_| match &cli.command {
            Command::Fit(a) => commands::fit(g, a),
            Command::Cv(a) => commands::cv(g, a),
            Command::Sample(a) => commands::sample(g, a),
            Command::Classify(a) => commands::classify(g, a),
            Command::Evaluate(a) => commands::evaluate(g, a),
            Command::Curve(a) => commands::curve(g, a),
            Command::Synth(a) => commands::synth(g, a),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
