mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Identifiability analysis and estimation for linear ODE systems.
#[derive(Debug, Parser)]
#[command(name = "ident", version)]
pub struct Cli {
    /// Worker threads for replicate loops.
    #[arg(long, global = true, env = "IDENT_THREADS", value_parser = positive_usize)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identifiability verdict, ICIS and class structure for (A, x0).
    Analyze(AnalyzeArgs),
    /// Random members of the unidentifiable class of (A, x0), one CSV each.
    ClassSample(ClassSampleArgs),
    /// Solve x' = Ax from x0 on a uniform grid and add Gaussian noise.
    Simulate(SimulateArgs),
    /// Two-stage estimate of A from observed trajectories.
    Estimate(EstimateArgs),
    /// ICIS, SCN, PIS and Stanhope's kappa for a dataset.
    Scores(ScoresArgs),
    /// Draw a random matrix or unit vector.
    Gen(GenArgs),
    /// Three-dimensional rotation study: ICIS against estimation error.
    Sim1(Sim1Args),
    /// Four-dimensional two-system study: ROC of each score.
    Sim2(Sim2Args),
    /// ICIS samples for random systems of increasing dimension.
    Dimscale(DimscaleArgs),
    /// Run every module's property checks and print a table.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// System matrix, headerless CSV.
    #[arg(long)]
    pub system: PathBuf,
    /// Initial condition, one row or one column.
    #[arg(long)]
    pub x0: PathBuf,
    #[arg(long, default_value_t = ident_core::identcore::DEFAULT_ICIS_TOL, value_parser = nonneg_f64)]
    pub icis_tol: f64,
    #[arg(long, default_value_t = ident_core::realjordan::DEFAULT_EIG_TOL, value_parser = nonneg_f64)]
    pub eig_tol: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
}

#[derive(Debug, Args)]
pub struct ClassSampleArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Number of members.
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Directory for member_<k>.csv files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Standard deviation of the free parameter entries.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub x0: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    /// Number of grid points.
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, value_parser = nonneg_f64)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Spline,
    Simple,
}

#[derive(Debug, Args)]
pub struct SmootherArgs {
    /// Long-format CSV with header time,dim,value.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Spline)]
    pub method: Method,
    #[arg(long, default_value_t = 0.001, value_parser = nonneg_f64)]
    pub lambda: f64,
    #[arg(long, default_value_t = ident_core::twostage::DEFAULT_ORDER, value_parser = positive_usize)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub smoother: SmootherArgs,
    /// True system matrix; adds the relative estimation error to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the estimate as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    #[command(flatten)]
    pub smoother: SmootherArgs,
    #[arg(long, requires = "x0")]
    pub system: Option<PathBuf>,
    #[arg(long, requires = "system")]
    pub x0: Option<PathBuf>,
    /// Noise level recorded in the report metadata.
    #[arg(long, value_parser = nonneg_f64)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Ginoe,
    Goe,
    Haar,
    Sphere,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub ensemble: GenKind,
    #[arg(long, value_parser = positive_usize)]
    pub d: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, value_parser = positive_usize)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 6.0, value_parser = positive_f64)]
    pub t_end: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 61, value_parser = positive_usize)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05, value_parser = nonneg_f64)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.001, value_parser = nonneg_f64)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct Sim1Args {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Per-replicate CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Sim2Args {
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long)]
    pub out_records: Option<PathBuf>,
    #[arg(long)]
    pub out_auc: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimEnsemble {
    Ginoe,
    Goe,
}

#[derive(Debug, Args)]
pub struct DimscaleArgs {
    #[arg(long, value_delimiter = ',', required = true, value_parser = positive_usize)]
    pub dims: Vec<usize>,
    #[arg(long, value_parser = positive_usize)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = DimEnsemble::Ginoe)]
    pub ensemble: DimEnsemble,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Print the results as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn nonneg_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a non-negative number, got {s:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ident: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            println!("{}", commands::error_json(&e));
            ExitCode::from(2)
        }
    }
}
