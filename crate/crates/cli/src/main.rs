mod config;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssvdd::model_selection::Method;
use ssvdd::subspace::{Mode, PsiMode};
use ssvdd::{Error, Result};

use config::{
    BenchmarkConfig, Format, ParamsConfig, PredictConfig, ProjectConfig, RunConfig, TrainConfig,
};

const ENV_HELP: &str = "Environment:
  SSVDD_SEED  default seed when --seed is absent (otherwise 7)
  SSVDD_JOBS  default worker count when --jobs is absent (otherwise all cores)";

#[derive(Parser)]
#[command(
    name = "ssvdd",
    version,
    about = "One-class classification with support vector data description in learned subspaces",
    after_help = ENV_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a subspace model on the target class of a labeled CSV
    Train(TrainArgs),
    /// Score query rows against a trained model
    Predict(PredictArgs),
    /// Grid-search methods over stratified partitions and report F1
    Benchmark(BenchmarkArgs),
    /// Export 2-D subspace coordinates for plotting
    Project(ProjectArgs),
    /// Re-execute the config embedded in a previous output file
    Rerun(RerunArgs),
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long, default_value = "linear")]
    mode: Mode,
    /// Regularizer variant: psi1..psi4 (bare digits accepted)
    #[arg(long, default_value = "psi1")]
    psi: PsiMode,
    /// Box constraint in (0, 1]
    #[arg(long = "C")]
    c: f64,
    /// Regularizer weight
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Gradient step size
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Iteration budget for the subspace updates
    #[arg(long, default_value_t = 50)]
    kmax: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel bandwidth, absolute
    #[arg(long, conflicts_with = "sigma_scale")]
    sigma: Option<f64>,
    /// Kernel bandwidth as a multiple of the mean pairwise training distance
    #[arg(long)]
    sigma_scale: Option<f64>,
    /// Skip z-scoring the features before training
    #[arg(long)]
    no_standardize: bool,
}

impl HyperArgs {
    fn to_params(&self, d: usize) -> Result<ParamsConfig> {
        Ok(ParamsConfig {
            mode: self.mode,
            psi: self.psi,
            d,
            c: self.c,
            beta: self.beta,
            eta: self.eta,
            k_max: self.kmax,
            seed: resolve_seed(self.seed)?,
            sigma: self.sigma,
            sigma_scale: self.sigma_scale,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled CSV of training data
    #[arg(long)]
    input: String,
    /// Label column, by name or zero-based index
    #[arg(long)]
    label: String,
    /// Target class; defaults to the majority class
    #[arg(long)]
    target: Option<String>,
    /// Subspace dimensionality
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Where to write the model JSON
    #[arg(long)]
    output: String,
    /// Where to write the training report (default: <output>.report.json)
    #[arg(long)]
    report: Option<String>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: String,
    /// CSV of query rows
    #[arg(long)]
    input: String,
    /// Label column to drop from the queries, if present
    #[arg(long)]
    label: Option<String>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    input: String,
    #[arg(long)]
    label: String,
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated method names, or "all"
    #[arg(long, value_delimiter = ',', default_value = "all")]
    methods: Vec<String>,
    /// Override the C grid
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Override the β exponents (β = 10^l)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta_exponents: Option<Vec<i32>>,
    /// Override the σ exponents (σ = 10^l × mean pairwise distance)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sigma_exponents: Option<Vec<i32>>,
    /// Override the subspace dimensionalities searched
    #[arg(long, value_delimiter = ',')]
    d_grid: Option<Vec<usize>>,
    /// Restrict the ψ variants searched
    #[arg(long, value_delimiter = ',')]
    psi_modes: Option<Vec<PsiMode>>,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 50)]
    kmax: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Number of random train/test partitions
    #[arg(long, default_value_t = 5)]
    partitions: usize,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for candidate evaluation; results do not depend on it
    #[arg(long)]
    jobs: Option<usize>,
    /// Report with the sample (n − 1) standard deviation
    #[arg(long)]
    sample_std: bool,
    #[arg(long)]
    no_standardize: bool,
    /// Dataset name in the report (default: input file stem)
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, default_value = "json")]
    format: Format,
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    input: String,
    #[arg(long)]
    label: String,
    #[arg(long)]
    target: Option<String>,
    /// Load a trained d = 2 model instead of training one
    #[arg(long, conflicts_with_all = ["c", "mode", "psi", "d", "beta", "eta", "kmax", "seed", "sigma", "sigma_scale"])]
    model: Option<String>,
    #[arg(long, default_value = "linear")]
    mode: Mode,
    #[arg(long, default_value = "psi1")]
    psi: PsiMode,
    /// Subspace dimensionality; the export requires 2
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 50)]
    kmax: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "sigma_scale")]
    sigma: Option<f64>,
    #[arg(long)]
    sigma_scale: Option<f64>,
    #[arg(long)]
    no_standardize: bool,
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct RerunArgs {
    /// Any output file of this tool; its embedded config is re-executed
    #[arg(long)]
    config: String,
    /// Redirect the artifact (the embedded config is kept verbatim)
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("SSVDD_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::config(format!("SSVDD_SEED must be an unsigned integer, got \"{v}\""))
        }),
        Err(_) => Ok(7),
    }
}

fn resolve_jobs(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SSVDD_JOBS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::config(format!("SSVDD_JOBS must be a thread count, got \"{v}\""))),
        Err(_) => Ok(None),
    }
}

fn parse_methods(items: &[String]) -> Result<Vec<Method>> {
    if items.iter().any(|s| s == "all") {
        if items.len() > 1 {
            return Err(Error::config(
                "\"all\" cannot be combined with explicit method names".to_string(),
            ));
        }
        return Ok(Method::ALL.to_vec());
    }
    items.iter().map(|s| s.parse()).collect()
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let standardize = !a.hyper.no_standardize;
            let config = RunConfig::Train(TrainConfig {
                input: a.input,
                label: a.label,
                target: a.target,
                params: a.hyper.to_params(a.d)?,
                standardize,
                output: a.output,
                report: a.report,
            });
            run::execute(&config, None, None)
        }
        Command::Predict(a) => {
            let config = RunConfig::Predict(PredictConfig {
                model: a.model,
                input: a.input,
                label: a.label,
                output: a.output,
            });
            run::execute(&config, None, None)
        }
        Command::Benchmark(a) => {
            let jobs = resolve_jobs(a.jobs)?;
            let config = RunConfig::Benchmark(BenchmarkConfig {
                input: a.input,
                label: a.label,
                target: a.target,
                methods: parse_methods(&a.methods)?,
                c_grid: a.c_grid,
                beta_exponents: a.beta_exponents,
                sigma_exponents: a.sigma_exponents,
                d_grid: a.d_grid,
                psi_modes: a.psi_modes,
                eta: a.eta,
                k_max: a.kmax,
                folds: a.folds,
                partitions: a.partitions,
                train_fraction: a.train_fraction,
                seed: resolve_seed(a.seed)?,
                standardize: !a.no_standardize,
                sample_std: a.sample_std,
                dataset_name: a.dataset_name,
                format: a.format,
                output: a.output,
            });
            run::execute(&config, jobs, None)
        }
        Command::Project(a) => {
            let params = match (&a.model, a.c) {
                (Some(_), _) => None,
                (None, Some(c)) => Some(ParamsConfig {
                    mode: a.mode,
                    psi: a.psi,
                    d: a.d,
                    c,
                    beta: a.beta,
                    eta: a.eta,
                    k_max: a.kmax,
                    seed: resolve_seed(a.seed)?,
                    sigma: a.sigma,
                    sigma_scale: a.sigma_scale,
                }),
                (None, None) => {
                    return Err(Error::config(
                        "project needs --model or a training recipe (--C at minimum)".to_string(),
                    ))
                }
            };
            let config = RunConfig::Project(ProjectConfig {
                input: a.input,
                label: a.label,
                target: a.target,
                model: a.model,
                params,
                standardize: !a.no_standardize,
                output: a.output,
            });
            run::execute(&config, None, None)
        }
        Command::Rerun(a) => {
            let jobs = resolve_jobs(a.jobs)?;
            let text = std::fs::read_to_string(&a.config)?;
            let config = config::extract_config(&text)?;
            run::execute(&config, jobs, a.output.as_deref())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Configuration { .. } | Error::Infeasible { .. } => 2,
        Error::Convergence { .. } | Error::Internal { .. } | Error::DegenerateProjection { .. } => {
            4
        }
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
