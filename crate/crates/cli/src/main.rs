//! torspec: spectra and analytic torsion of holomorphic line bundles on flat
//! complex tori, from Appell-Humbert data files.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod json;

/// A `re,im` pair on the command line.
#[derive(Debug, Clone, Copy)]
struct Pair(f64, f64);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im, got {s:?}"))?;
        let re = re.trim().parse::<f64>().map_err(|e| format!("bad real part {re:?}: {e}"))?;
        let im = im.trim().parse::<f64>().map_err(|e| format!("bad second part {im:?}: {e}"))?;
        Ok(Pair(re, im))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Parser)]
#[command(
    name = "torspec",
    version,
    about = "Dolbeault spectra and Ray-Singer torsion of line bundles on flat complex tori",
    after_help = "Environment:\n  TORSPEC_TOL  override the tolerance field of the bundle file"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a bundle file and report its basic invariants.
    Validate { bundle: PathBuf },
    /// Enumerate the Laplacian spectrum with per-degree multiplicities.
    Spectrum {
        bundle: PathBuf,
        /// Largest eigenvalue to enumerate.
        #[arg(long, default_value_t = 60.0)]
        cutoff: f64,
        /// Scale multiplicities from (0,k)- to (q,k)-forms.
        #[arg(long)]
        pq: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Analytic torsion through every route the bundle type admits.
    Torsion {
        bundle: PathBuf,
        /// Cutoff for the identity-check table; grown automatically if absent.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Kernel decomposition and flat-factor spectrum of a degenerate bundle.
    Flat {
        bundle: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        cutoff: f64,
        /// Also compute the degenerate torsion.
        #[arg(long)]
        torsion: bool,
    },
    /// Dimension-one special values from (tau, z-hat) or semicharacter phases.
    Elliptic {
        /// Modulus of the curve, as re,im with positive imaginary part.
        #[arg(long)]
        tau: Pair,
        /// Dual-torus point, as re,im.
        #[arg(long, conflicts_with = "alpha")]
        zhat: Option<Pair>,
        /// Semicharacter phases a1,a2 on the generators 1 and tau.
        #[arg(long)]
        alpha: Option<Pair>,
        /// Also evaluate the regularized lattice-sum determinant.
        #[arg(long)]
        oracle: bool,
    },
    /// Finite-difference cross-check of the degree-zero spectrum (n = 1).
    Oracle {
        bundle: PathBuf,
        /// Comma-separated mesh sizes, coarse to fine.
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 48, 64])]
        grid: Vec<usize>,
        /// Number of spectrum lines to extrapolate.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the full cross-check suite and print a pass/fail summary.
    Verify {
        bundle: PathBuf,
        /// Cutoff for the identity-check table; grown automatically if absent.
        #[arg(long)]
        cutoff: Option<f64>,
        /// Mesh sizes for the discretization check.
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 24, 32])]
        grid: Vec<usize>,
    },
}

fn run(cli: Cli) -> torspec_core::Result<(String, i32)> {
    match cli.command {
        Command::Validate { bundle } => Ok((commands::validate(&bundle)?, 0)),
        Command::Spectrum { bundle, cutoff, pq, format } => {
            let tsv = matches!(format, Format::Tsv);
            Ok((commands::spectrum_cmd(&bundle, cutoff, pq, tsv)?, 0))
        }
        Command::Torsion { bundle, cutoff } => Ok((commands::torsion_cmd(&bundle, cutoff)?, 0)),
        Command::Flat { bundle, cutoff, torsion } => {
            Ok((commands::flat_cmd(&bundle, cutoff, torsion)?, 0))
        }
        Command::Elliptic { tau, zhat, alpha, oracle } => {
            let zhat = zhat.map(|p| (p.0, p.1));
            let alpha = alpha.map(|p| (p.0, p.1));
            Ok((commands::elliptic_cmd((tau.0, tau.1), zhat, alpha, oracle)?, 0))
        }
        Command::Oracle { bundle, grid, levels } => {
            Ok((commands::oracle_cmd(&bundle, &grid, levels)?, 0))
        }
        Command::Verify { bundle, cutoff, grid } => commands::verify_cmd(&bundle, cutoff, &grid),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((output, code)) => {
            print!("{output}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
