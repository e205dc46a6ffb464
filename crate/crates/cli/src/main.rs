use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmt_core::ErrorClass;

mod output;
mod run;

#[derive(Parser)]
#[command(name = "cmt-lab", version, about = "Coupled-mode spectra, eigenmodes and regime maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// |S21| over the drive grid
    Spectrum(Common),
    /// |S21| over detuning x drive
    Dispersion(Common),
    /// Eigenfrequency branches over the eigen sweep
    Eigen(Common),
    /// Level repulsion / attraction label with crossings
    Classify(Common),
    /// Regime labels over damping and coupling axes
    PhaseDiagram(Common),
    /// Fit J and the dissipative coupling to branch data
    Fit(Common),
    /// Compare the closed form against time-domain integration
    OracleCheck(Common),
    /// Calibrate a geometry model and sweep it
    Geometry {
        #[arg(value_enum)]
        action: Option<GeometryAction>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryAction {
    Sweep,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Key-value config; overlays the preset when both are given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Built-in configuration (cit, cia, fig5-default, srr, elc)
    #[arg(long)]
    preset: Option<String>,
    /// Write magnitudes in dB
    #[arg(long)]
    db: bool,
    /// Force sequential evaluation
    #[arg(long)]
    sequential: bool,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::NonConvergence => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(c) => run::spectrum(&c),
        Command::Dispersion(c) => run::dispersion(&c),
        Command::Eigen(c) => run::eigen(&c),
        Command::Classify(c) => run::classify(&c),
        Command::PhaseDiagram(c) => run::phase_diagram(&c),
        Command::Fit(c) => run::fit(&c),
        Command::OracleCheck(c) => run::oracle_check(&c),
        Command::Geometry { common, .. } => run::geometry(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmt-lab: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
