//! Command-line interface for the photon-pair simulation toolkit.
//!
//! `run` executes a scenario config and writes histograms, scans and
//! reports; `analyze` recovers physical quantities from a CSV file;
//! `qpm` solves quasi-phase-matching designs.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use photonpair::Execution;
use runner::{AnalyzeOptions, AppError, QpmOptions};

#[derive(Parser)]
#[command(
    name = "photonpair",
    version,
    about = "Waveguide photon-pair experiment simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its outputs.
    Run {
        /// Scenario config file (`key = value` lines).
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Run Monte-Carlo chunks on a single thread.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Analyze a histogram or scan CSV and write a report.
    Analyze {
        /// Input CSV (histogram `bin_start_ns,counts` or scan
        /// `phase_rad,counts`).
        input: PathBuf,
        /// Report file to write.
        #[arg(long)]
        out: PathBuf,
        /// Expected peak spacing for histogram inputs, ns.
        #[arg(long, default_value_t = 12.5)]
        spacing_ns: f64,
        /// Singles rate on channel 1 for accidental subtraction, Hz.
        #[arg(long)]
        singles1_hz: Option<f64>,
        /// Singles rate on channel 2 for accidental subtraction, Hz.
        #[arg(long)]
        singles2_hz: Option<f64>,
        /// Coincidence window width for accidental subtraction, ns.
        #[arg(long)]
        window_ns: Option<f64>,
        /// Acquisition duration per scan point, s.
        #[arg(long)]
        duration_s: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve a quasi-phase-matching design and write its spectrum.
    Qpm {
        /// Dispersion model: lithium_niobate, toy or constant.
        #[arg(long, default_value = "lithium_niobate")]
        model: String,
        /// Pump wavelength, nm.
        #[arg(long)]
        pump_nm: f64,
        /// Signal wavelength, nm (defaults to degeneracy).
        #[arg(long)]
        signal_nm: Option<f64>,
        /// Operating temperature, Celsius.
        #[arg(long, default_value_t = 100.0)]
        temperature_c: f64,
        /// Waveguide length, cm.
        #[arg(long)]
        length_cm: f64,
        /// Spectrum grid points.
        #[arg(long, default_value_t = 2001)]
        grid_points: usize,
        /// Spectrum grid half-width around the signal wavelength, nm.
        #[arg(long, default_value_t = 100.0)]
        grid_halfwidth_nm: f64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            sequential,
            output: _,
        } => {
            let execution = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            runner::run_command(&config, &out, seed, execution)
        }
        Command::Analyze {
            input,
            out,
            spacing_ns,
            singles1_hz,
            singles2_hz,
            window_ns,
            duration_s,
            output: _,
        } => {
            let accidentals = match (singles1_hz, singles2_hz, window_ns, duration_s) {
                (None, None, None, None) => None,
                (Some(s1), Some(s2), Some(w), Some(d)) => Some((s1, s2, w * 1e-9, d)),
                _ => {
                    return Err(AppError::Config(
                        "accidental subtraction needs all of --singles1-hz, --singles2-hz, \
                         --window-ns and --duration-s"
                            .to_string(),
                    ))
                }
            };
            runner::analyze_command(
                &input,
                &out,
                &AnalyzeOptions {
                    spacing_s: spacing_ns * 1e-9,
                    accidentals,
                },
            )
        }
        Command::Qpm {
            model,
            pump_nm,
            signal_nm,
            temperature_c,
            length_cm,
            grid_points,
            grid_halfwidth_nm,
            out,
            output: _,
        } => runner::qpm_command(
            &QpmOptions {
                model,
                pump_nm,
                signal_nm,
                temperature_c,
                length_cm,
                grid_points,
                grid_halfwidth_nm,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photonpair: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
