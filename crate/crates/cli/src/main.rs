//! `thp`: SNR sweeps of THP rate bounds, full-chain simulation and the invariant suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thp_core::channel::InflationRule;
use thp_core::precoder::PrecoderKind;
use thp_core::rates::{ChainConfig, EstimatorConfig};
use thp_core::sweep::{cmd_bounds, cmd_simulate, RateCurve, SweepConfig};
use thp_core::verify::run_verify;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "thp",
    version,
    about = "Tomlinson-Harashima precoding rate bounds and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic rate curves: AWGN capacity, both lower bounds and their asymptote.
    Bounds(SweepArgs),
    /// Full multiuser THP chain with measured residual interference and Monte Carlo rates.
    Simulate(SweepArgs),
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecoderArg {
    Mmse,
    Zf,
}

#[derive(Clone, Copy, ValueEnum)]
enum InflationArg {
    Wiener,
    SqrtWiener,
    Unit,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    snr_stop: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    snr_step: f64,
    /// Users M (one receive antenna each).
    #[arg(long, default_value_t = 4)]
    users: usize,
    /// Transmit antennas N >= M.
    #[arg(long, default_value_t = 4)]
    tx_antennas: usize,
    /// Channel draws per SNR point.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Channel uses per draw for the rate estimate.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Histogram bins, a power of two in [16, 4096].
    #[arg(long, default_value_t = 256)]
    bins: usize,
    /// Input slices for the conditional-entropy estimate.
    #[arg(long, default_value_t = 64)]
    strata: usize,
    /// Apply the Miller-Madow bias correction to the histogram entropies.
    #[arg(long)]
    miller_madow: bool,
    #[arg(long, value_enum, default_value = "mmse")]
    precoder: PrecoderArg,
    /// Receiver scaling and matching encoder inflation.
    #[arg(long, value_enum, default_value = "wiener")]
    inflation: InflationArg,
    /// Noiseless uses for the residual-interference measurement.
    #[arg(long, default_value_t = 100_000)]
    residual_trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Clamp negative rates to zero in the output.
    #[arg(long)]
    clamp_zero: bool,
    /// Also draw the curves as a terminal chart (stderr when the CSV goes to stdout).
    #[arg(long)]
    ascii_plot: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl SweepArgs {
    fn config(&self) -> SweepConfig {
        SweepConfig {
            snr_start_db: self.snr_start,
            snr_stop_db: self.snr_stop,
            snr_step_db: self.snr_step,
            users: self.users,
            tx_antennas: self.tx_antennas,
            trials: self.trials,
            samples: self.samples,
            seed: self.seed,
            clamp_zero: self.clamp_zero,
            chain: ChainConfig {
                precoder: match self.precoder {
                    PrecoderArg::Mmse => PrecoderKind::Mmse,
                    PrecoderArg::Zf => PrecoderKind::ZeroForcing,
                },
                inflation: match self.inflation {
                    InflationArg::Wiener => InflationRule::Wiener,
                    InflationArg::SqrtWiener => InflationRule::SqrtWiener,
                    InflationArg::Unit => InflationRule::Unit,
                },
                estimator: EstimatorConfig {
                    bins: self.bins,
                    strata: self.strata,
                    miller_madow: self.miller_madow,
                },
                residual_trials: self.residual_trials,
            },
        }
    }
}

fn emit(curve: &RateCurve, args: &SweepArgs) -> Result<()> {
    let csv = curve.to_csv();
    let plot = args.ascii_plot.then(|| curve.ascii_plot(72, 20));
    match &args.output {
        Some(path) => {
            let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(csv.as_bytes())
                .with_context(|| format!("cannot write {}", path.display()))?;
            if let Some(p) = plot {
                io::stdout().write_all(p.as_bytes())?;
            }
        }
        None => {
            io::stdout().write_all(csv.as_bytes())?;
            if let Some(p) = plot {
                io::stderr().write_all(p.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Bounds(args) => {
            emit(&cmd_bounds(&args.config())?, &args)?;
            Ok(0)
        }
        Command::Simulate(args) => {
            emit(&cmd_simulate(&args.config())?, &args)?;
            Ok(0)
        }
        Command::Verify { seed } => {
            let report = run_verify(seed)?;
            io::stdout().write_all(report.render().as_bytes())?;
            Ok(if report.all_passed() { 0 } else { EXIT_VERIFY })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("thp: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
