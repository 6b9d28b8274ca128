//! Command-line front end.
//!
//! Exit codes: `0` success, `1` verification failure, `2` bad measure or
//! option, `3` solver failure budget exceeded, `4` the computation does not
//! apply to the given inputs (for example the series oracle on a measure
//! with zero first moment).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::convolution::{
    confirm_atoms, convolve, AtomCheck, ConvolutionConfig, ConvolutionError, ConvolutionResult,
};
use crate::herglotz::RadialSchedule;
use crate::input::{parse_measure, InputError};
use crate::measure::{is_point_mass, Atom, CircleMeasure};
use crate::output::{density_csv, to_json, DensityDocument, ResultDocument, RunSettings};
use crate::regularity::{classify, predicted_atoms, RegularityError};
use crate::series::{boxtimes_moments, compare_moments, SeriesError};
use crate::subordination::{SolverConfig, SubordinationError};
use crate::verify::{run_all, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "freemul",
    version,
    about = "Free multiplicative convolution of probability measures on the unit circle"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Number of equally spaced angles in the density grid (even, at least 16).
    #[arg(long, global = true, default_value_t = 1024)]
    pub grid: usize,
    /// Deepest radius of the schedule is 1 - 2^-K.
    #[arg(long = "rmax-k", global = true, default_value_t = 24,
          value_parser = clap::value_parser!(u32).range(8..=48))]
    pub rmax_k: u32,
    /// Residual tolerance of the subordination solver.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks; also recorded in result files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density grid, atoms and diagnostics of m1 ⊠ m2.
    Convolve { m1: String, m2: String },
    /// Critical pairs, predicted atoms and the regularity verdict.
    Classify { m1: String, m2: String },
    /// Predicted atoms and their radial confirmation.
    Atoms { m1: String, m2: String },
    /// Density on the grid as CSV (theta,density,flag).
    Density { m1: String, m2: String },
    /// Series-oracle moments against quadrature moments of the result.
    Moments {
        m1: String,
        m2: String,
        /// Number of moments compared.
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// Run the acceptance suite.
    Verify,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(#[from] InputError),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Convolution(ConvolutionError),
    #[error("{0}")]
    Regularity(RegularityError),
    #[error("{0}")]
    Series(#[from] SeriesError),
    #[error("{0} acceptance criteria failed")]
    Verification(usize),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ConvolutionError> for CliError {
    fn from(e: ConvolutionError) -> Self {
        match e {
            ConvolutionError::BadGrid(_) => CliError::Config(e.to_string()),
            ConvolutionError::Regularity(r) => CliError::Regularity(r),
            other => CliError::Convolution(other),
        }
    }
}

impl From<RegularityError> for CliError {
    fn from(e: RegularityError) -> Self {
        CliError::Regularity(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) | CliError::Config(_) => 2,
            CliError::Convolution(
                ConvolutionError::TooManyFailures { .. }
                | ConvolutionError::Subordination(SubordinationError::MaxIterations { .. }),
            )
            | CliError::Regularity(RegularityError::Solver(SubordinationError::MaxIterations {
                ..
            })) => 3,
            _ => 4,
        }
    }
}

impl RunArgs {
    pub fn config(&self) -> Result<ConvolutionConfig, CliError> {
        if self.grid < 16 || self.grid % 2 != 0 {
            return Err(CliError::Config(format!(
                "--grid {} must be even and at least 16",
                self.grid
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("--tol {} must be positive", self.tol)));
        }
        let k = self.rmax_k;
        let k_min = if k >= 13 { 10 } else { k - 3 };
        let schedule = |k_max| {
            RadialSchedule::dyadic(k_min, k_max).map_err(|e| CliError::Config(e.to_string()))
        };
        Ok(ConvolutionConfig {
            grid_size: self.grid,
            schedule: schedule(k)?,
            fallback_schedule: Some(schedule(k.max(crate::convolution::FALLBACK_MAX_K))?),
            solver: SolverConfig {
                tol: self.tol,
                ..SolverConfig::default()
            },
        })
    }

    fn settings(&self) -> RunSettings {
        RunSettings {
            grid_size: self.grid,
            schedule_max_k: self.rmax_k,
            tol: self.tol,
            seed: self.seed,
        }
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct AtomsDocument {
    predicted: Vec<Atom>,
    checks: Vec<AtomCheck>,
    confirmed: Vec<Atom>,
}

#[derive(Debug, Serialize)]
struct MomentsDocument {
    order: usize,
    /// `[re, im]` pairs for `m₁..m_N`.
    oracle: Vec<Complex64>,
    quadrature: Vec<Complex64>,
    deviation: f64,
    settings: RunSettings,
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    seed: u64,
    passed: bool,
    criteria: &'a [crate::verify::Criterion],
}

fn measures(m1: &str, m2: &str) -> Result<(CircleMeasure, CircleMeasure), CliError> {
    Ok((parse_measure(m1)?, parse_measure(m2)?))
}

fn atoms_document(
    m1: &CircleMeasure,
    m2: &CircleMeasure,
    config: &ConvolutionConfig,
) -> Result<AtomsDocument, CliError> {
    if is_point_mass(m1) || is_point_mass(m2) {
        // A rotation: the atoms are those of the other factor, moved.
        let r = convolve(m1, m2, config)?;
        return Ok(AtomsDocument {
            predicted: r.atoms.clone(),
            checks: Vec::new(),
            confirmed: r.atoms,
        });
    }
    let predicted = predicted_atoms(m1, m2)?;
    let checks = confirm_atoms(m1, m2, &config.schedule, &config.solver)?;
    let confirmed = checks
        .iter()
        .filter(|c| c.confirmed)
        .map(|c| Atom::new(c.angle, c.predicted_mass))
        .collect();
    Ok(AtomsDocument {
        predicted,
        checks,
        confirmed,
    })
}

fn result_text(
    result: &ConvolutionResult,
    run: &RunArgs,
    default: Format,
) -> Result<String, CliError> {
    Ok(match run.format.unwrap_or(default) {
        Format::Json => to_json(&ResultDocument::new(result, run.settings()))?,
        Format::Csv => density_csv(result),
    })
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let run = &cli.run;
    let config = run.config()?;
    let csv_unsupported = |what: &str| {
        if run.format == Some(Format::Csv) {
            Err(CliError::Config(format!("{what} has no CSV form")))
        } else {
            Ok(())
        }
    };
    match &cli.command {
        Command::Convolve { m1, m2 } => {
            let (m1, m2) = measures(m1, m2)?;
            let r = convolve(&m1, &m2, &config)?;
            run.emit(&result_text(&r, run, Format::Json)?)
        }
        Command::Density { m1, m2 } => {
            let (m1, m2) = measures(m1, m2)?;
            let r = convolve(&m1, &m2, &config)?;
            let text = match run.format.unwrap_or(Format::Csv) {
                Format::Csv => density_csv(&r),
                Format::Json => {
                    let doc = ResultDocument::new(&r, run.settings());
                    to_json::<DensityDocument>(&doc.density)?
                }
            };
            run.emit(&text)
        }
        Command::Classify { m1, m2 } => {
            csv_unsupported("classify")?;
            let (m1, m2) = measures(m1, m2)?;
            run.emit(&to_json(&classify(&m1, &m2)?)?)
        }
        Command::Atoms { m1, m2 } => {
            csv_unsupported("atoms")?;
            let (m1, m2) = measures(m1, m2)?;
            run.emit(&to_json(&atoms_document(&m1, &m2, &config)?)?)
        }
        Command::Moments { m1, m2, order } => {
            csv_unsupported("moments")?;
            let (m1, m2) = measures(m1, m2)?;
            let oracle = boxtimes_moments(&m1, &m2, *order)?;
            let r = convolve(&m1, &m2, &config)?;
            let doc = MomentsDocument {
                order: *order,
                quadrature: (1..=*order as u32).map(|k| r.moment(k)).collect(),
                deviation: compare_moments(&r, &oracle),
                oracle: oracle.moments,
                settings: run.settings(),
            };
            run.emit(&to_json(&doc)?)
        }
        Command::Verify => {
            let seed = run.seed.unwrap_or(DEFAULT_SEED);
            let criteria = run_all(seed);
            let failed = criteria.iter().filter(|c| !c.passed).count();
            let text = match run.format {
                Some(Format::Json) => to_json(&VerifyDocument {
                    seed,
                    passed: failed == 0,
                    criteria: &criteria,
                })?,
                Some(Format::Csv) => return Err(CliError::Config("verify has no CSV form".into())),
                None => criteria.iter().map(|c| format!("{c}\n")).collect(),
            };
            run.emit(&text)?;
            if failed > 0 {
                return Err(CliError::Verification(failed));
            }
            Ok(())
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("freemul").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let cli = parse(&["convolve", "haar", "haar"]);
        assert_eq!(cli.run.grid, 1024);
        assert_eq!(cli.run.rmax_k, 24);
        assert_eq!(cli.run.tol, 1e-12);
        let config = cli.run.config().unwrap();
        assert_eq!(config.schedule, RadialSchedule::default());
    }

    #[test]
    fn flags_after_subcommand() {
        let cli = parse(&["density", "haar", "haar", "--grid", "64", "--rmax-k", "8"]);
        assert_eq!(cli.run.grid, 64);
        let config = cli.run.config().unwrap();
        assert_eq!(config.schedule.radii().len(), 4);
    }

    #[test]
    fn rejects_bad_options() {
        assert!(Cli::try_parse_from(["freemul", "verify", "--rmax-k", "49"]).is_err());
        assert!(Cli::try_parse_from(["freemul", "verify", "--rmax-k", "7"]).is_err());
        let odd = parse(&["convolve", "haar", "haar", "--grid", "17"]);
        assert_eq!(odd.run.config().unwrap_err().exit_code(), 2);
        let tol = parse(&["convolve", "haar", "haar", "--tol", "0"]);
        assert_eq!(tol.run.config().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["freemul", "convolve", "bernoulli:2", "haar"]), 2);
        assert_eq!(main_with_args(["freemul", "frobnicate"]), 2);
        let too_many = CliError::from(ConvolutionError::TooManyFailures {
            failed: 20,
            total: 64,
        });
        assert_eq!(too_many.exit_code(), 3);
        assert_eq!(CliError::Verification(1).exit_code(), 1);
        let zero = CliError::from(SeriesError::ZeroFirstMoment {
            which: 1,
            modulus: 0.0,
        });
        assert_eq!(zero.exit_code(), 4);
    }
}
