//! Argument definitions and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbf_core::lp::{assemble, predicted_constraint_count};
use sbf_core::verify::{grid_falsify, sound_check, CheckConfig, VerificationReport, SOUND_TOLERANCE};
use sbf_core::DegreeForm;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{read_certificate, write_certificate, write_json};
use crate::lp_format::to_lp_string;
use crate::montecarlo::{monte_carlo_safety, SafetyEstimate};
use crate::problem_file::ProblemFile;
use crate::run::{run_synthesis, RunOptions};
use crate::solver::ClarabelSolver;
use crate::sweep::{sweep, write_csv, Knob};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY_FAIL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sbf", version, about = "Stochastic barrier synthesis with Bernstein relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a certificate and write it with its run record.
    Synth(SynthArgs),
    /// Check a certificate against a problem.
    Verify(VerifyArgs),
    /// Run a grid of configurations and emit CSV.
    Sweep(SweepArgs),
    /// Write the assembled LP in CPLEX LP format.
    ExportLp(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Maximal,
    Cumulative,
}

impl From<FormArg> for DegreeForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Maximal => DegreeForm::Maximal,
            FormArg::Cumulative => DegreeForm::Cumulative,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LpArgs {
    /// Barrier degree per variable.
    #[arg(short, long, default_value_t = 4)]
    pub m: usize,
    /// Bernstein degree for the barrier relaxations (default m).
    #[arg(long)]
    pub m_plus: Option<usize>,
    /// Bernstein degree for the martingale relaxations (default m times the
    /// summed dynamics degrees).
    #[arg(long)]
    pub p_plus: Option<usize>,
    /// Uniform subdivisions per dimension.
    #[arg(short, long, default_value_t = 1)]
    pub kappa: usize,
    /// Horizon K (default from the problem file).
    #[arg(short = 'K', long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormArg::Maximal)]
    pub degree_form: FormArg,
    /// Refuse to assemble more constraints than this.
    #[arg(long)]
    pub max_constraints: Option<usize>,
}

impl LpArgs {
    pub fn options(&self) -> RunOptions {
        let mut o = RunOptions::new(self.m);
        o.m_plus = self.m_plus;
        o.p_plus = self.p_plus;
        o.kappa = self.kappa;
        o.horizon = self.horizon;
        o.degree_form = self.degree_form.into();
        o.max_constraints = self.max_constraints;
        o
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub problem: PathBuf,
    #[command(flatten)]
    pub lp: LpArgs,
    /// Alternate synthesis with adaptive subdivision.
    #[arg(long)]
    pub adaptive: bool,
    /// Constraint budget for the adaptive search (default twice the root count).
    #[arg(long)]
    pub c_max: Option<usize>,
    /// LP solves in the adaptive loop.
    #[arg(long, default_value_t = 2)]
    pub rounds: usize,
    #[arg(short, long, default_value = "certificate.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "run_record.json")]
    pub record: PathBuf,
    /// Where the final region families go when `--adaptive` is set.
    #[arg(long, default_value = "regions.json")]
    pub regions: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sound,
    Grid,
    Both,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub problem: PathBuf,
    pub certificate: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    /// Degree added to the certificate's m⁺ and p⁺ for the sound check.
    #[arg(long, default_value_t = 2)]
    pub extra_degree: usize,
    /// Factor applied to the certificate's subdivision for the sound check.
    #[arg(long, default_value_t = 2)]
    pub kappa_factor: usize,
    /// Grid points per dimension and region.
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long, default_value_t = SOUND_TOLERANCE)]
    pub tolerance: f64,
    /// Monte-Carlo trajectories per initial state (0 disables).
    #[arg(long, default_value_t = 0)]
    pub mc_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub problem: PathBuf,
    #[command(flatten)]
    pub lp: LpArgs,
    /// Barrier degrees to run.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ms: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Knob::Kappa)]
    pub knob: Knob,
    /// Knob values to run for every m.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV destination (default stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub problem: PathBuf,
    #[command(flatten)]
    pub lp: LpArgs,
    /// Destination (default stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutput {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sound: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<SafetyEstimate>,
    pub delta_s: f64,
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<i32> {
    let pf = ProblemFile::load(&args.problem)?;
    let mut opts = args.lp.options();
    opts.adaptive = args.adaptive;
    opts.c_max = args.c_max;
    opts.rounds = args.rounds;
    let out = match run_synthesis(&pf, &opts, &ClarabelSolver::default()) {
        Err(CliError::Core(sbf_core::Error::Infeasible)) => {
            eprintln!("sbf: LP infeasible");
            return Ok(EXIT_INFEASIBLE);
        }
        other => other?,
    };
    write_certificate(&args.out, &out.certificate)?;
    write_json(&args.record, &out.record)?;
    if let Some(regions) = &out.regions {
        write_json(&args.regions, regions)?;
    }
    print_json(&out.record);
    Ok(EXIT_OK)
}

pub fn verify_certificate(pf: &ProblemFile, cert: &sbf_core::Certificate, args: &VerifyArgs) -> CliResult<VerifyOutput> {
    let problem = pf.to_problem(cert.barrier.max_degree())?;
    let sound = match args.method {
        MethodArg::Sound | MethodArg::Both => {
            let check = CheckConfig::tighter_than(cert, args.extra_degree, args.kappa_factor);
            Some(sound_check(cert, &problem, &check, args.tolerance)?)
        }
        MethodArg::Grid => None,
    };
    let grid = match args.method {
        MethodArg::Grid | MethodArg::Both => Some(grid_falsify(cert, &problem, args.grid.max(2))?),
        MethodArg::Sound => None,
    };
    let monte_carlo = if args.mc_trials > 0 {
        let sigma = pf
            .gaussian_sigma()
            .ok_or_else(|| CliError::Usage("Monte-Carlo runs need a Gaussian noise block".into()))?;
        Some(monte_carlo_safety(&problem, sigma, cert.horizon, args.mc_trials, args.seed)?)
    } else {
        None
    };
    let mc_ok = monte_carlo.as_ref().is_none_or(|mc| mc.probability + mc.half_width >= cert.delta_s);
    let pass = sound.as_ref().is_none_or(|r| r.pass) && grid.as_ref().is_none_or(|r| r.pass) && mc_ok;
    Ok(VerifyOutput { pass, sound, grid, monte_carlo, delta_s: cert.delta_s })
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<i32> {
    let pf = ProblemFile::load(&args.problem)?;
    let cert = read_certificate(&args.certificate)?;
    let out = verify_certificate(&pf, &cert, args)?;
    if let Some(path) = &args.report {
        write_json(path, &out)?;
    }
    print_json(&out);
    Ok(if out.pass { EXIT_OK } else { EXIT_VERIFY_FAIL })
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<i32> {
    let pf = ProblemFile::load(&args.problem)?;
    let rows = sweep(&pf, &args.lp.options(), args.knob, &args.ms, &args.values, args.jobs, &ClarabelSolver::default());
    match &args.out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            write_csv(f, &rows)?;
        }
        None => write_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_export_lp(args: &ExportArgs) -> CliResult<i32> {
    let pf = ProblemFile::load(&args.problem)?;
    let opts = args.lp.options();
    let problem = pf.to_problem(opts.m)?;
    let cfg = opts.config(&pf);
    if let Some(limit) = opts.max_constraints {
        let predicted = predicted_constraint_count(&problem, &cfg);
        if predicted > limit {
            return Err(CliError::TooLarge { predicted, limit });
        }
    }
    let text = to_lp_string(&assemble(&problem, &cfg)?);
    match &args.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

pub fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ExportLp(a) => cmd_export_lp(a),
    }
}
