mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use impulsive_core::{Error, DEFAULT_H_MAX};

#[derive(Parser, Debug)]
#[command(name = "impulsive", version, about = "Linear impulsive differential equations: simulation, evolution operators, stability certificates")]
pub struct Cli {
    /// Seed for randomized probe trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Largest integrator step.
    #[arg(long, global = true, default_value_t = DEFAULT_H_MAX)]
    pub h_max: f64,

    /// Override the horizon from the config.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,

    /// Directory for output files when no explicit --out is given.
    #[arg(long, global = true, env = "IMPULSIVE_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the initial value problem and write the trajectory CSV.
    Simulate(OutputArgs),
    /// Write ||X(t)|| samples of the fundamental solution.
    Fundamental(OutputArgs),
    /// Print C(t, s) from both constructions and their disagreement.
    Evolution(EvolutionArgs),
    /// Derive stability certificates and check their dominance.
    Certify(CertifyArgs),
    /// Run the sign probe and estimate the uniform-boundedness constant.
    Probe(ProbeArgs),
    /// Reproduce the two reference systems and compare with their bounds.
    Examples,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Scenario config (JSON).
    pub config: PathBuf,
    /// Output file; defaults to the output directory or stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvolutionArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub s: f64,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    pub config: PathBuf,
    /// Uniform-boundedness constant; estimated by probing when omitted.
    #[arg(long)]
    pub k: Option<f64>,
    /// Random probe trials used to estimate k.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    /// Grid spacing for the evolution-operator dominance check.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Re-validate the certificates in this file instead of deriving new ones.
    #[arg(long)]
    pub check: Option<PathBuf>,
    /// Homogeneous trajectory CSV to check against the fundamental certificate.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Where to write the certificate record.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    pub config: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    /// Write the sign-probe trajectory CSV here (scalar systems).
    #[arg(long)]
    pub trajectory_out: Option<PathBuf>,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A produced or supplied certificate failed its dominance check.
    Dominance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Dominance(_) => 3,
            Failure::Core(e) => match e.root() {
                Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => 1,
                Error::HypothesisViolated(_) => 3,
                _ => 2,
            },
        }
    }

    fn code(&self) -> &'static str {
        match self {
            Failure::Dominance(_) => "dominance-fail",
            Failure::Core(e) => e.code(),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Dominance(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.exit_code();
            eprintln!(
                "error code={} exit={} message={}",
                f.code(),
                code,
                serde_json::to_string(&f.message()).expect("string serialises")
            );
            ExitCode::from(code)
        }
    }
}
