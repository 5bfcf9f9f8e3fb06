use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use faslab_core::sweep::{self, Experiment, OutputFormat, SweepSpec};
use faslab_core::FasError;

const EXIT_CONFIG: u8 = 1;
const EXIT_NONCONVERGENCE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "faslab", version, about = "Finite-blocklength BLER bounds for fluid antenna systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic vs empirical CDF/PDF of the best-port amplitude.
    Dist(Common),
    /// BLER curves (FAS bound and conventional benchmark).
    Bler(Common),
    /// Check the analytic law against Monte Carlo; exits 3 on failure.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SincArg {
    Unnormalized,
    Normalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Paper,
    Exact,
}

#[derive(Args)]
struct Common {
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a config field, e.g. `--set axis.values=[-10,-5]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    sinc: Option<SincArg>,
    #[arg(long = "union-weight", value_enum)]
    union_weight: Option<WeightArg>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut all = self.set.clone();
        if let Some(seed) = self.seed {
            all.push(format!("seed={seed}"));
        }
        if let Some(s) = self.sinc {
            let name = match s {
                SincArg::Unnormalized => "unnormalized",
                SincArg::Normalized => "normalized",
            };
            all.push(format!("sinc=\"{name}\""));
        }
        if let Some(w) = self.union_weight {
            let name = match w {
                WeightArg::Paper => "paper_sum",
                WeightArg::Exact => "exact_log_binomial",
            };
            all.push(format!("union_weight=\"{name}\""));
        }
        if let Some(f) = self.format {
            let name = match f {
                FormatArg::Csv => "csv",
                FormatArg::Json => "json",
            };
            all.push(format!("format=\"{name}\""));
        }
        all
    }
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<FasError> for Failure {
    fn from(e: FasError) -> Self {
        let code = match e {
            FasError::Convergence { .. } | FasError::NumericalInconsistency(_) => EXIT_NONCONVERGENCE,
            _ => EXIT_CONFIG,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: EXIT_CONFIG, error }
    }
}

fn load(common: &Common) -> Result<SweepSpec, Failure> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    Ok(SweepSpec::from_json_with_overrides(&text, &common.overrides())?)
}

fn emit(common: &Common, spec: &SweepSpec, body: &str) -> Result<(), Failure> {
    let target = common.out.clone().or_else(|| spec.output.as_ref().map(PathBuf::from));
    match target {
        Some(path) => {
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).context("writing to stdout")?;
            out.flush().context("writing to stdout")?;
        }
    }
    Ok(())
}

fn run(command: &Command) -> Result<(), Failure> {
    let common = match command {
        Command::Dist(c) | Command::Bler(c) | Command::Validate(c) => c,
    };
    let spec = load(common)?;
    let format: OutputFormat = spec.format;
    match command {
        Command::Dist(_) => {
            if spec.experiment != Experiment::DistCurves {
                return Err(FasError::Config("`dist` needs a dist_curves experiment".into()).into());
            }
            eprintln!("sampling {} draws", spec.mc_samples);
            let table = sweep::run_dist(&spec)?;
            emit(common, &spec, &sweep::render_dist(&table, format)?)
        }
        Command::Bler(_) => {
            if matches!(spec.experiment, Experiment::DistCurves | Experiment::Validate) {
                return Err(FasError::Config("`bler` needs a BLER sweep experiment".into()).into());
            }
            eprintln!("running {:?}", spec.experiment);
            let curves = sweep::run_sweep(&spec)?;
            emit(common, &spec, &sweep::render_curves(&curves, format)?)
        }
        Command::Validate(_) => {
            let report = sweep::validate(&spec)?;
            eprintln!(
                "ks {:.3e} (< {}), pdf mass residual {:.3e} (< {}), BLER deviation {:.3} (<= {})",
                report.ks_distance,
                report.ks_threshold,
                report.pdf_mass_residual,
                report.pdf_mass_threshold,
                report.bler_deviation,
                report.bler_deviation_threshold
            );
            emit(common, &spec, &sweep::render_report(&report, format)?)?;
            if report.passed {
                eprintln!("validation passed");
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_VALIDATION,
                    error: anyhow::anyhow!("validation failed"),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Dist(c) | Command::Bler(c) | Command::Validate(c) => c,
    };
    let result = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => Err(Failure {
                code: EXIT_CONFIG,
                error: anyhow::anyhow!("thread pool: {e}"),
            }),
        },
        None => run(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
