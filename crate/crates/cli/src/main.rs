//! `copula`: command-line front end for the Markov-product copula library.
//!
//! Exit codes: 0 when the property holds or the command succeeded, 1 when the
//! property fails, 2 on input errors, 3 when an iteration does not converge.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use markov_copula::algebra::{DEFAULT_GRID_CAP, DEFAULT_RESOLUTION, GRID_CAP_ENV};
use markov_copula::metrics::Metric;
use markov_copula::{AlgebraConfig, CellSide, CopulaError};

#[derive(Debug, Parser)]
#[command(
    name = "copula",
    version,
    about = "Markov-product algebra of bivariate copulas"
)]
struct Cli {
    /// Resolution used to discretize closed-form copulas before multiplying them.
    #[arg(long, global = true, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,

    /// Largest checkerboard resolution the algebra may create.
    #[arg(long, global = true, env = GRID_CAP_ENV, default_value_t = DEFAULT_GRID_CAP)]
    grid_cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    /// Stochastically increasing in the first component.
    Si1,
    /// Stochastically increasing in the second component.
    Si2,
    /// Stochastically decreasing in the first component.
    Sd1,
    /// Stochastically decreasing in the second component.
    Sd2,
    /// C * C = C.
    Idempotent,
    /// C ≥ Π.
    Pqd,
    /// C ≤ Π.
    Nqd,
    /// Cᵀ * C = C⁺.
    CompleteDependence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Right,
    Left,
}

impl From<Side> for CellSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Right => CellSide::Right,
            Side::Left => CellSide::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Dinf,
    D1,
    SobolevDiag,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Dinf => Metric::Dinf,
            MetricArg::D1 => Metric::D1,
            MetricArg::SobolevDiag => Metric::SobolevDiag,
        }
    }
}

/// Accepts decimals or fractions such as `1/3`.
fn parse_unit(s: &str) -> Result<f64, String> {
    let x = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{s} is not in [0, 1]"))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a property; prints a JSON verdict and exits 0 (holds) or 1 (fails).
    Check {
        spec: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        /// Tolerance of the test.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Markov product A * B, written as a spec (`.csv` for a bare matrix).
    Product {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cross-check against midpoint quadrature of the defining integral.
        #[arg(long)]
        oracle: bool,
        /// Quadrature panels for --oracle; defaults to four times the result resolution.
        #[arg(long)]
        panels: Option<usize>,
    },
    /// Iterate C * C^k to its idempotent limit; writes report.json and steps.csv.
    Iterate {
        spec: PathBuf,
        /// Stop when consecutive iterates are this close in sup distance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Tabulate a partial derivative along a section as CSV.
    DerivativeTrace {
        spec: PathBuf,
        /// 1 traces ∂₁C(·, at); 2 traces ∂₂C(at, ·).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        component: u8,
        /// Position of the section; fractions like 1/3 are accepted.
        #[arg(long, value_parser = parse_unit)]
        at: f64,
        /// Number of equally spaced points on [0, 1].
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// One-sided derivative convention.
        #[arg(long, value_enum, default_value_t = Side::Right)]
        side: Side,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the interval family of an idempotent SI copula.
    Decompose {
        spec: PathBuf,
        /// Tolerance for fixed points of the diagonal.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Tolerance of the preliminary idempotency check.
        #[arg(long, default_value_t = 1e-9)]
        idempotent_tol: f64,
    },
    /// Distance between two copulas, or the diagonal functional of one.
    Metric {
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MetricArg::Dinf)]
        metric: MetricArg,
    },
    /// Draw a reproducible sample as CSV with columns u,v.
    Sample {
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Checkerboard approximation at resolution n.
    Discretize {
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Outcome of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
    NotConverged,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CopulaError>() {
        Some(CopulaError::NotConverged { .. }) => 3,
        Some(
            CopulaError::NotStochasticallyIncreasing { .. }
            | CopulaError::NotIdempotent { .. }
            | CopulaError::VerificationFailed { .. },
        ) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = AlgebraConfig {
        resolution: cli.resolution.max(1),
        grid_cap: cli.grid_cap,
    };
    match commands::run(cli.command, &cfg) {
        Ok(Status::Holds) => ExitCode::SUCCESS,
        Ok(Status::Fails) => ExitCode::from(1),
        Ok(Status::NotConverged) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn unit_values_accept_fractions() {
        assert_eq!(parse_unit("1/3"), Ok(1.0 / 3.0));
        assert_eq!(parse_unit("0.25"), Ok(0.25));
        assert!(parse_unit("4/3").is_err());
        assert!(parse_unit("x").is_err());
    }

    #[test]
    fn errors_map_to_the_exit_contract() {
        let code = |e: CopulaError| exit_code_for(&anyhow::Error::new(e));
        assert_eq!(code(CopulaError::NotConverged { steps: 3, gap: 0.1 }), 3);
        assert_eq!(code(CopulaError::NotIdempotent { gap: 0.1 }), 1);
        assert_eq!(code(CopulaError::InvalidSpec("x".into())), 2);
        assert_eq!(exit_code_for(&anyhow::anyhow!("io")), 2);
    }

    #[test]
    fn arguments_parse() {
        Cli::command().debug_assert();
    }
}
