//! `landau`: batch front-end for the band, splitting, random-field and
//! Hall-conductance computations.
//!
//! Exit status is 0 on success, 1 for invalid input (with the config line
//! when known) and 2 when a numerical procedure fails to converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "landau", version, about = "Landau-level bands, splitting and Hall conductance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing); overrides the config's `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Field strength.
    #[arg(long = "B", global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,

    /// Number of bands.
    #[arg(long = "J", global = true)]
    pub bands: Option<usize>,

    /// Coupling, or a comma-separated grid.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub lambda: Option<Vec<f64>>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<f64>,

    /// Box side.
    #[arg(long = "L", global = true, allow_hyphen_values = true)]
    pub l: Option<f64>,

    /// Grid spacing.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub h: Option<f64>,

    /// Relative distance within which a field is snapped to an excluded field.
    #[arg(long, global = true)]
    pub field_rtol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Band functions E_j(k; λ) on a uniform k grid (bands.csv).
    Bands,
    /// Splitting estimate for every admissible band (split.json).
    Split,
    /// Admissibility of each band and the excluded fields (admissible.json).
    Admissible,
    /// Disordered spectra and the cluster report (spectrum_r*.csv, cluster_report.json).
    RandomSpectrum,
    /// Windowed Hall conductance at the gap centres (chern.json, plateau.csv).
    Chern,
    /// Oracle-equivalence checks (selftest.json).
    Selftest,
}

fn main() -> ExitCode {
    // Usage errors exit with 1 like any other invalid input; 2 is reserved
    // for convergence failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
