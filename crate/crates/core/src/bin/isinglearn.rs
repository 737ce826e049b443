use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use isinglearn::conditions::{fisher_blocks, Scope};
use isinglearn::error::{Error, Result};
use isinglearn::estimators::{estimate, MethodId};
use isinglearn::experiment::{
    generate_mixed_coupling, read_records, run_experiment, summarize, write_records, write_summary,
    ExperimentConfig,
};
use isinglearn::metrics::{evaluate, DEFAULT_SUPPORT_EPS};
use isinglearn::model::{Dataset, IsingModel};
use isinglearn::sampling::{sample, GibbsConfig, SamplerKind};

#[derive(Parser)]
#[command(name = "isinglearn", version, about = "Learn sparse Ising models from ±1 samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Auto,
    Exact,
    Gibbs,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Auto => SamplerKind::Auto,
            SamplerArg::Exact => SamplerKind::Exact,
            SamplerArg::Gibbs => SamplerKind::Gibbs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mixed-coupling ground-truth model (JSON).
    Generate {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0.5)]
        magnitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a dataset (CSV) from a model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        sampler: SamplerArg,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thinning: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a model from a dataset.
    Fit {
        /// One of nlm, nlM, gl.
        #[arg(long)]
        method: MethodId,
        #[arg(long)]
        data: PathBuf,
        /// Penalty weight; defaults to the size-dependent rate.
        #[arg(long)]
        lambda: Option<f64>,
        /// Couplings with magnitude at or below this are written as zero.
        #[arg(long, default_value_t = DEFAULT_SUPPORT_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an estimate with the truth (metrics JSON).
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SUPPORT_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a synthetic experiment from a JSON config (records CSV).
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-(method, n) statistics of a records CSV.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact Fisher blocks and sufficient conditions for a small model.
    CheckConditions {
        #[arg(long)]
        model: PathBuf,
        /// 1-based node; the global problem when omitted.
        #[arg(long)]
        node: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut w = output(path)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("eps must be finite and nonnegative, got {eps}")))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { p, density, magnitude, seed, out } => {
            if p < 2 {
                return Err(Error::Config(format!("p must be at least 2, got {p}")));
            }
            let model = generate_mixed_coupling(p, density, magnitude, seed)?;
            write_text(out.as_deref(), &model.to_json())
        }
        Command::Sample { model, n, seed, sampler, burn_in, thinning, out } => {
            let model = IsingModel::read_json(open(&model)?)?;
            let gibbs = GibbsConfig { burn_in, thinning, seed };
            let data = sample(&model, n, sampler.into(), &gibbs, seed)?;
            let mut w = output(out.as_deref())?;
            data.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Fit { method, data, lambda, eps, out } => {
            check_eps(eps)?;
            let data = Dataset::read_csv(open(&data)?)?;
            let mut est = estimate(&data, method, lambda)?;
            est.threshold(eps);
            if !est.diagnostics.converged {
                eprintln!(
                    "warning: solver did not reach the KKT tolerance (max residual {:e})",
                    est.diagnostics.max_kkt_residual
                );
            }
            write_text(out.as_deref(), &est.to_json())
        }
        Command::Evaluate { truth, estimate, eps, out } => {
            check_eps(eps)?;
            let truth = IsingModel::read_json(open(&truth)?)?;
            let est = IsingModel::read_json(open(&estimate)?)?;
            let metrics = evaluate(&truth, &est, eps)?;
            write_text(out.as_deref(), &serde_json::to_string_pretty(&metrics)?)
        }
        Command::Experiment { config, out } => {
            let config = ExperimentConfig::read_json(open(&config)?)?;
            let records = run_experiment(&config)?;
            let mut w = output(out.as_deref())?;
            write_records(&mut w, &records)?;
            w.flush()?;
            Ok(())
        }
        Command::Summarize { input, out } => {
            let records = read_records(open(&input)?)?;
            let rows = summarize(&records)?;
            let mut w = output(out.as_deref())?;
            write_summary(&mut w, &rows)?;
            w.flush()?;
            Ok(())
        }
        Command::CheckConditions { model, node, lambda, out } => {
            let model = IsingModel::read_json(open(&model)?)?;
            let scope = match node {
                None => Scope::Global,
                Some(0) => return Err(Error::Config("nodes are numbered from 1".into())),
                Some(r) => Scope::Node(r - 1),
            };
            let report = fisher_blocks(&model, scope, lambda)?;
            write_text(out.as_deref(), &report.to_json())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
