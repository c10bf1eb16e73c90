use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fusion_spectra::app::{self, MatrixSelection, Overrides, PredictArgs};
use fusion_spectra::regime::BandwidthKind;
use fusion_spectra::{Error, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "fusion-spectra", version, about = "Spectra of kernel sensor-fusion matrices under high-dimensional noise")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Matrix {
    Ncca,
    Ad,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bandwidth {
    Classic,
    Percentile,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    bandwidth: Option<Bandwidth>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    omega1: Option<f64>,
    #[arg(long)]
    omega2: Option<f64>,
    #[arg(long, value_enum, default_value = "ncca")]
    matrix: Matrix,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            seed: self.seed,
            trials: self.trials,
            bandwidth: self.bandwidth.map(|b| match b {
                Bandwidth::Classic => BandwidthKind::Classic,
                Bandwidth::Percentile => BandwidthKind::Percentile,
            }),
            omega: self.omega,
            omega1: self.omega1,
            omega2: self.omega2,
        };
        app::load_config(&self.config, &overrides)
    }

    fn matrices(&self) -> MatrixSelection {
        match self.matrix {
            Matrix::Ncca => MatrixSelection::Ncca,
            Matrix::Ad => MatrixSelection::Ad,
            Matrix::Both => MatrixSelection::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw one pair of point clouds and dump it as raw matrices.
    Generate(ExperimentArgs),
    /// Predicted pure-noise bulk quantiles and density of n²N.
    Predict {
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long, default_value_t = 1.0)]
        upsilon: f64,
        #[arg(long)]
        n: usize,
    },
    /// Empirical versus predicted spectra over several trials.
    Simulate(ExperimentArgs),
    /// Analytic free convolution versus Haar Monte-Carlo.
    Compare(ExperimentArgs),
    /// Repeat an experiment over several sample sizes and fit error rates.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let out = &cli.out;
    match &cli.command {
        Command::Generate(a) => app::run_generate(&a.load()?, out).map(drop),
        Command::Predict { c1, c2, upsilon, n } => app::run_predict(&PredictArgs::new(*c1, *c2, *upsilon, *n), out).map(drop),
        Command::Simulate(a) => app::run_simulate(&a.load()?, a.matrices(), out).map(drop),
        Command::Compare(a) => app::run_compare(&a.load()?, out).map(drop),
        Command::Sweep { exp, ns } => app::run_sweep(&exp.load()?, ns, exp.matrices(), out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FUSION_SPECTRA_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {}", Error::Config(e.to_string()));
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(app::exit_code(&e) as u8)
        }
    }
}
