//! Command-line front end: load curvature files, classify them, split
//! Thorpe powers, generate examples and run the residual solver.

pub mod file;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use doubleform::classify::{classify_all, DEFAULT_TOL};
use doubleform::curvature::{constant_curvature, non_einstein_3d, random_curvature, ricci_flat_4d};
use doubleform::decomposition::DIVISIBILITY_TOL;
use doubleform::solver::{minimize_residual, perturb, Condition, GradientMethod, SearchSpace, SolveOptions};
use doubleform::AlgebraicCurvature;
use thiserror::Error;

pub use file::{CurvatureFile, Entry};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error(transparent)]
    Library(#[from] doubleform::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invariant(_) | Self::Library(doubleform::Error::Bianchi(_) | doubleform::Error::NotSymmetric(_)) => 2,
            _ => 1,
        }
    }
}

/// Exit code for a solve that stopped above its tolerance.
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "doubleform",
    version,
    about = "Generalized Einstein conditions for algebraic curvature tensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    /// Skip the first Bianchi identity check on the input.
    #[arg(long)]
    pub no_bianchi_check: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every generalized Einstein verdict and the Gauss-Bonnet curvatures.
    Classify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Print an example curvature file.
    Generate {
        #[arg(value_enum)]
        kind: Kind,
        /// Dimension for `constant` and `random` (default 4).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        kappa: f64,
        /// Plane curvatures of `ricci-flat-4d`.
        #[arg(long, num_args = 3, value_names = ["C1", "C2", "C3"], allow_negative_numbers = true)]
        c: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add Bianchi-projected noise of this size.
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Split `R^q` into trace-free components and test divisibility by powers of `g`.
    Decompose {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = DIVISIBILITY_TOL)]
        tol: f64,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Minimize the residual of a condition over algebraic curvature tensors.
    Solve {
        input: PathBuf,
        #[arg(long, value_enum)]
        condition: ConditionKind,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Space::Bianchi)]
        space: Space,
        #[arg(long, value_enum, default_value_t = Gradient::FiniteDifference)]
        gradient: Gradient,
        /// Where to write the best iterate.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Constant,
    #[value(name = "ricci-flat-4d")]
    RicciFlat4d,
    #[value(name = "non-einstein-3d")]
    NonEinstein3d,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionKind {
    PqEinstein,
    Thorpe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Bianchi,
    ConformallyFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Gradient {
    FiniteDifference,
    Analytic,
}

/// Text for standard output and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

pub fn read_curvature(path: &Path, load: &LoadArgs) -> Result<AlgebraicCurvature, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    CurvatureFile::parse(&text)?.load(!load.no_bianchi_check)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must be positive, got {tol}")))
    }
}

pub fn generate(
    kind: Kind,
    n: Option<usize>,
    kappa: f64,
    c: Option<&[f64]>,
    seed: u64,
) -> Result<AlgebraicCurvature, CliError> {
    let fixed = |dim: usize| match n {
        Some(m) if m != dim => Err(CliError::Usage(format!("this kind is only defined for --n {dim}"))),
        _ => Ok(()),
    };
    let n = n.unwrap_or(4);
    if matches!(kind, Kind::Constant | Kind::Random) && n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(match kind {
        Kind::Constant => constant_curvature(n, kappa),
        Kind::Random => random_curvature(n, seed),
        Kind::RicciFlat4d => {
            fixed(4)?;
            let c = c.unwrap_or(&[1.0, 1.0, -2.0]);
            ricci_flat_4d(c[0], c[1], c[2]).map_err(|e| CliError::Usage(e.to_string()))?
        }
        Kind::NonEinstein3d => {
            fixed(3)?;
            non_einstein_3d()
        }
    })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Classify { input, tol, load } => {
            check_tol(*tol)?;
            let r = read_curvature(input, load)?;
            Ok(Outcome::ok(report::classification(&classify_all(&r, *tol))))
        }
        Command::Generate {
            kind,
            n,
            kappa,
            c,
            seed,
            perturb: size,
            output,
        } => {
            let mut r = generate(*kind, *n, *kappa, c.as_deref(), *seed)?;
            if let Some(size) = size {
                r = perturb(&r, *size, *seed, SearchSpace::Bianchi);
            }
            let text = CurvatureFile::from_curvature(&r).render();
            match output {
                Some(path) => {
                    write(path, &text)?;
                    Ok(Outcome::ok(String::new()))
                }
                None => Ok(Outcome::ok(text)),
            }
        }
        Command::Decompose { input, q, tol, load } => {
            check_tol(*tol)?;
            if *q == 0 {
                return Err(CliError::Usage("--q must be at least 1".into()));
            }
            let r = read_curvature(input, load)?;
            Ok(Outcome::ok(report::decomposition(&r, *q, *tol)?))
        }
        Command::Solve {
            input,
            condition,
            p,
            q,
            max_iterations,
            step,
            tol,
            seed,
            space,
            gradient,
            output,
            load,
        } => {
            let condition = match (condition, p) {
                (ConditionKind::PqEinstein, Some(p)) if *p > 0 && *p < 2 * q => Condition::PqEinstein { p: *p, q: *q },
                (ConditionKind::PqEinstein, Some(p)) => {
                    return Err(CliError::Usage(format!(
                        "pq-einstein needs 0 < p < 2q, got --p {p} --q {q}"
                    )))
                }
                (ConditionKind::PqEinstein, None) => return Err(CliError::Usage("pq-einstein needs --p".into())),
                (ConditionKind::Thorpe, None) => Condition::Thorpe { q: *q },
                (ConditionKind::Thorpe, Some(_)) => return Err(CliError::Usage("thorpe takes no --p".into())),
            };
            let opts = SolveOptions {
                max_iterations: *max_iterations,
                step: *step,
                tol: *tol,
                seed: *seed,
                space: match space {
                    Space::Bianchi => SearchSpace::Bianchi,
                    Space::ConformallyFlat => SearchSpace::ConformallyFlat,
                },
                gradient: match gradient {
                    Gradient::FiniteDifference => GradientMethod::FiniteDifference,
                    Gradient::Analytic => GradientMethod::Analytic,
                },
            };
            let r = read_curvature(input, load)?;
            let result = minimize_residual(&r, condition, &opts).map_err(|e| match e {
                doubleform::Error::Domain { .. } | doubleform::Error::InvalidParameter(_) => {
                    CliError::Usage(e.to_string())
                }
                other => other.into(),
            })?;
            write(output, &CurvatureFile::from_curvature(&result.curvature).render())?;
            Ok(Outcome {
                stdout: report::solve(condition, &result, output),
                code: if result.converged { 0 } else { EXIT_NOT_CONVERGED },
            })
        }
    }
}
