//! `fowler`: construct Fowler-type profiles, run Floquet and Pohozaev
//! diagnostics, and fit asymptotic models of perturbed radial runs, with
//! deterministic CSV/JSON artifacts.

mod commands;
mod output;
mod scenario;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    /// exit 2, machine-readable JSON on stderr
    Validation { code: String, message: String },
    /// exit 66
    MissingInput { message: String },
    /// exit 1
    Io { message: String },
}

impl CliError {
    pub fn from_core(e: fowler_core::Error) -> Self {
        CliError::Validation {
            code: Self::core_code(&e).to_string(),
            message: e.to_string(),
        }
    }

    pub fn core_code(e: &fowler_core::Error) -> &'static str {
        use fowler_core::Error::*;
        match e {
            BadDimension(_) => "BAD_DIMENSION",
            NonpositiveRadius(_) => "BAD_RADIUS",
            DirectionOutsideQuadrant(..) | ZeroDirection => "BAD_DIRECTION",
            BadConfig(_) => "BAD_CONFIG",
            DegenerateSpan(..) => "BAD_SPAN",
            StepCountExhausted { .. } => "STEP_COUNT_EXHAUSTED",
            StepSizeUnderflow { .. } => "STEP_SIZE_UNDERFLOW",
            OutOfSpan { .. } => "OUT_OF_SPAN",
            NecksizeOutOfRange { .. } => "EPS_OUT_OF_RANGE",
            EnergyOutOfRange { .. } => "ENERGY_OUT_OF_RANGE",
            PeriodDetection(_) => "PERIOD_DETECTION",
            ZeroNorm { .. } => "ZERO_NORM",
            DifferencingDiverged(_) => "DIFFERENCING_DIVERGED",
            InsufficientTail { .. } => "INSUFFICIENT_TAIL",
            RangeViolation { .. } => "RANGE_VIOLATION",
            InvalidPotential(msg) => {
                // the joined message starts with the first violation code
                if msg.starts_with("H1_VIOLATION") {
                    "H1_VIOLATION"
                } else if msg.starts_with("H2_VIOLATION") {
                    "H2_VIOLATION"
                } else if msg.starts_with("SYMMETRY_VIOLATION") {
                    "SYMMETRY_VIOLATION"
                } else {
                    "INVALID_POTENTIAL"
                }
            }
            RunTooShort { .. } => "RUN_TOO_SHORT",
            NoConvergence => "NO_CONVERGENCE",
            BadParameter(_) => "BAD_PARAM",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::MissingInput { .. } => 66,
            CliError::Io { .. } => 1,
        }
    }

    fn report(&self) {
        match self {
            CliError::Validation { code, message } => {
                let doc = serde_json::json!({"error": code, "message": message});
                eprintln!("{doc}");
            }
            CliError::MissingInput { message } | CliError::Io { message } => {
                eprintln!("{message}");
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fowler",
    version,
    about = "Fowler-type singular profiles of coupled critical elliptic systems: construction, Floquet analysis, Pohozaev invariants, asymptotic fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a periodic profile and emit t,v,w,H_scalar samples
    Profile {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        /// how many periods of samples to emit
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Floquet monodromy reports for all modes up to jmax (JSON)
    Floquet {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 4)]
        jmax: u32,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Pohozaev series r,P along an unperturbed ray run
    Pohozaev {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda2: f64,
        #[arg(long, default_value_t = 30.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Integrate the limit system from a state and report ray diagnostics (JSON)
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_negative_numbers = true)]
        v1: f64,
        #[arg(long, allow_negative_numbers = true)]
        v2: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        w1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        w2: f64,
        #[arg(long, default_value_t = 40.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run a perturbed scenario file; CSV series plus a fit summary JSON
    Perturbed {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// where to write the fit summary JSON (stdout when omitted)
        #[arg(long)]
        fit_out: Option<PathBuf>,
    },
    /// Run a parameter sweep scenario; one CSV row per grid point
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// worker threads (defaults to available parallelism)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 64;
        }
    };
    let result = match cli.command {
        Command::Profile {
            n,
            eps,
            periods,
            rel_tol,
            abs_tol,
            out,
            format,
        } => commands::profile(commands::ProfileParams {
            n,
            eps,
            periods,
            rel_tol,
            abs_tol,
            out,
            format,
        }),
        Command::Floquet {
            n,
            eps,
            jmax,
            rel_tol,
            abs_tol,
            out,
            format,
        } => commands::floquet(commands::FloquetParams {
            n,
            eps,
            jmax,
            rel_tol,
            abs_tol,
            out,
            format,
        }),
        Command::Pohozaev {
            n,
            eps,
            lambda1,
            lambda2,
            t_end,
            rel_tol,
            abs_tol,
            out,
            format,
        } => commands::pohozaev(commands::PohozaevParams {
            n,
            eps,
            lambda: [lambda1, lambda2],
            t_end,
            rel_tol,
            abs_tol,
            out,
            format,
        }),
        Command::Classify {
            n,
            v1,
            v2,
            w1,
            w2,
            t_end,
            rel_tol,
            abs_tol,
            out,
            format,
        } => commands::classify(commands::ClassifyParams {
            n,
            v: [v1, v2],
            w: [w1, w2],
            t_end,
            rel_tol,
            abs_tol,
            out,
            format,
        }),
        Command::Perturbed {
            scenario,
            rel_tol,
            abs_tol,
            out,
            fit_out,
        } => commands::perturbed(commands::PerturbedParams {
            scenario,
            rel_tol,
            abs_tol,
            out,
            fit_out,
        }),
        Command::Sweep {
            scenario,
            jobs,
            rel_tol,
            abs_tol,
            out,
            format,
        } => commands::sweep(commands::SweepParams {
            scenario,
            jobs,
            rel_tol,
            abs_tol,
            out,
            format,
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}
