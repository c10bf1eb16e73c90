//! Workflows behind the `fusion-spectra` binary.
//!
//! Every command writes its outputs into one directory together with a
//! `run_manifest.json` listing the config, seeds, stage timings and a SHA-256
//! for each output file.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::median;
use crate::model::{self, derive_seed, generate};
use crate::regime::{
    run_experiment, sweep, BandwidthKind, ExperimentConfig, MatrixKind, RegimeReport,
};
use crate::rmt::{
    free_multiplicative_convolution, mc_free_conv, Measure, ModelScalars, MpConvention, SolverOptions,
};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub root_seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, root_seed: Option<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            root_seed,
            seeds: vec![],
            timings: vec![],
            outputs: vec![],
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        let seconds = start.elapsed().as_secs_f64();
        info!("{stage}: {seconds:.2}s");
        self.timings.push(StageTiming { stage: stage.into(), seconds });
        Ok(out)
    }

    fn record(&mut self, out: &Path, file: &Path) -> Result<()> {
        let bytes = fs::read(file)?;
        let rel = file.strip_prefix(out).unwrap_or(file);
        self.outputs.push(OutputFile { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    fn finish(mut self, out: &Path) -> Result<Self> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&self)?)?;
        Ok(self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Which fused matrices a command should analyse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixSelection {
    #[default]
    Ncca,
    Ad,
    Both,
}

impl MatrixSelection {
    pub fn kinds(self) -> Vec<MatrixKind> {
        match self {
            MatrixSelection::Ncca => vec![MatrixKind::Ncca],
            MatrixSelection::Ad => vec![MatrixKind::Ad],
            MatrixSelection::Both => vec![MatrixKind::Ncca, MatrixKind::Ad],
        }
    }
}

fn suffix(kind: MatrixKind) -> &'static str {
    match kind {
        MatrixKind::Ncca => "",
        MatrixKind::Ad => "_ad",
    }
}

/// Command-line values that replace fields of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub bandwidth: Option<BandwidthKind>,
    pub omega: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(k) = self.bandwidth {
            cfg.bandwidth.kind = k;
        }
        if let Some(o) = self.omega {
            cfg.bandwidth.omega = o;
        }
        if self.omega1.is_some() {
            cfg.bandwidth.omega1 = self.omega1;
        }
        if self.omega2.is_some() {
            cfg.bandwidth.omega2 = self.omega2;
        }
    }
}

/// Read an experiment config from JSON and apply overrides.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn trial_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.trials as u64).map(|t| derive_seed(cfg.seed, t)).collect()
}

/// Generate the point clouds of trial 0 and dump them as raw matrices.
pub fn run_generate(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("generate", serde_json::to_value(cfg)?, Some(cfg.seed));
    let mut model = cfg.model.clone();
    model.seed = derive_seed(cfg.seed, 0);
    manifest.seeds.push(model.seed);
    let pair = manifest.time("generate", || generate(&model))?;
    let files = manifest.time("dump", || model::dump(&pair, &model, out))?;
    for f in files {
        manifest.record(out, &f)?;
    }
    manifest.finish(out)
}

/// Inputs of the `predict` command: pure-noise geometry with `h = p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictArgs {
    /// `n/p₁`.
    pub c1: f64,
    /// `n/p₂`.
    pub c2: f64,
    pub upsilon: f64,
    pub n: usize,
    pub convention: MpConvention,
    pub solver: SolverOptions,
}

impl PredictArgs {
    pub fn new(c1: f64, c2: f64, upsilon: f64, n: usize) -> Self {
        PredictArgs { c1, c2, upsilon, n, convention: MpConvention::Gram, solver: SolverOptions::default() }
    }

    pub fn scalars(&self) -> Result<ModelScalars> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.upsilon > 0.0 && self.n > 0) {
            return Err(Error::Config("c1, c2, upsilon and n must be positive".into()));
        }
        let n = self.n as f64;
        let (p1, p2) = (n / self.c1, n / self.c2);
        Ok(ModelScalars::from_parts(self.upsilon, [n, p1, p2], [0.0, 0.0], [p1, p2]))
    }
}

/// Predicted bulk of `n²N` under pure noise: `quantiles.csv` (j, gamma) for
/// `j = 1..n` and `density.csv` (x, density) of the scaled limit.
pub fn run_predict(args: &PredictArgs, out: &Path) -> Result<RunManifest> {
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("predict", serde_json::to_value(args)?, None);
    let scalars = args.scalars()?;
    let mu1 = scalars.nu_tilde(1, args.convention)?;
    let mu2 = scalars.nu_tilde(2, args.convention)?;
    let conv = manifest.time("free_convolution", || free_multiplicative_convolution(&mu1, &mu2, args.n, &args.solver))?;
    let s = scalars.both_low_scale();

    let mut q = String::from("j,gamma\n");
    for (j, g) in conv.quantiles.iter().enumerate() {
        q.push_str(&format!("{},{:e}\n", j + 1, s * g));
    }
    let qpath = out.join("quantiles.csv");
    fs::write(&qpath, q)?;
    manifest.record(out, &qpath)?;

    let mut d = String::from("x,density\n");
    if let Measure::Grid(g) = &conv.density {
        for (x, rho) in g.x.iter().zip(&g.density) {
            d.push_str(&format!("{:e},{:e}\n", s * x, rho / s));
        }
    }
    let dpath = out.join("density.csv");
    fs::write(&dpath, d)?;
    manifest.record(out, &dpath)?;

    let diag = out.join("diagnostics.json");
    write_json(&diag, &conv.diagnostics)?;
    manifest.record(out, &diag)?;
    manifest.finish(out)
}

fn write_report(report: &RegimeReport, out: &Path, stem: &str, manifest: &mut RunManifest) -> Result<()> {
    let sfx = suffix(report.matrix);
    let json = out.join(format!("report{stem}{sfx}.json"));
    write_json(&json, report)?;
    manifest.record(out, &json)?;
    let csv = out.join(format!("spectra{stem}{sfx}.csv"));
    report.write_spectra_csv(BufWriter::new(fs::File::create(&csv)?))?;
    manifest.record(out, &csv)?;
    Ok(())
}

/// Run an experiment: `report.json` and `spectra.csv` (suffix `_ad` for AD).
pub fn run_simulate(cfg: &ExperimentConfig, matrices: MatrixSelection, out: &Path) -> Result<(Vec<RegimeReport>, RunManifest)> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("simulate", serde_json::to_value(cfg)?, Some(cfg.seed));
    manifest.seeds = trial_seeds(cfg);
    let mut reports = vec![];
    for kind in matrices.kinds() {
        let r = manifest.time(&format!("simulate_{kind:?}").to_lowercase(), || run_experiment(cfg, kind))?;
        write_report(&r, out, "", &mut manifest)?;
        reports.push(r);
    }
    Ok((reports, manifest.finish(out)?))
}

/// Analytic free-convolution quantiles against a Haar Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub n: usize,
    pub trials: usize,
    pub median_rel_err: f64,
    pub max_rel_err: f64,
    /// Compared 1-based indices `lo..=hi`.
    pub lo: usize,
    pub hi: usize,
}

/// Compare the analytic limit `ν̃₁⊠ν̃₂` (bandwidth `h = p`) with a Monte-Carlo
/// estimate at the config's `n`. Writes `compare.csv` and `compare.json`.
pub fn run_compare(cfg: &ExperimentConfig, out: &Path) -> Result<(CompareSummary, RunManifest)> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("compare", serde_json::to_value(cfg)?, Some(cfg.seed));
    manifest.seeds.push(cfg.seed);
    let m = &cfg.model;
    let scalars = ModelScalars::new(m, m.p1 as f64, m.p2 as f64)?;
    let mu1 = scalars.nu_tilde(1, cfg.mp_convention)?;
    let mu2 = scalars.nu_tilde(2, cfg.mp_convention)?;
    let n = m.n;
    let analytic = manifest.time("free_convolution", || free_multiplicative_convolution(&mu1, &mu2, n, &cfg.solver))?;
    let mc = manifest.time("monte_carlo", || mc_free_conv(&mu1, &mu2, n, cfg.trials, cfg.seed))?;

    let lo = ((0.05 * n as f64).ceil() as usize).max(1);
    let hi = (0.95 * n as f64).floor() as usize;
    let mut csv = String::from("index,analytic,monte_carlo,abs_err,rel_err\n");
    let mut rel = vec![];
    for i in 1..=n {
        let (a, b) = (analytic.quantiles[i - 1], mc[i - 1]);
        let e = (a - b).abs();
        csv.push_str(&format!("{i},{a:e},{b:e},{e:e},{:e}\n", e / a.abs()));
        if (lo..=hi).contains(&i) {
            rel.push(e / a.abs());
        }
    }
    let summary = CompareSummary {
        n,
        trials: cfg.trials,
        median_rel_err: median(&rel).unwrap_or(f64::NAN),
        max_rel_err: rel.iter().copied().fold(0.0, f64::max),
        lo,
        hi,
    };
    let cpath = out.join("compare.csv");
    fs::write(&cpath, csv)?;
    manifest.record(out, &cpath)?;
    let jpath = out.join("compare.json");
    write_json(&jpath, &summary)?;
    manifest.record(out, &jpath)?;
    Ok((summary, manifest.finish(out)?))
}

/// Run the experiment at each `n` with fixed aspect ratios; one report per `n`
/// plus `rates.csv` (suffix `_ad` for AD).
pub fn run_sweep(cfg: &ExperimentConfig, ns: &[usize], matrices: MatrixSelection, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("sweep", serde_json::to_value(cfg)?, Some(cfg.seed));
    manifest.seeds = trial_seeds(cfg);
    for kind in matrices.kinds() {
        let result = manifest.time(&format!("sweep_{kind:?}").to_lowercase(), || sweep(cfg, ns, kind))?;
        for r in &result.reports {
            write_report(r, out, &format!("_n{}", r.n), &mut manifest)?;
        }
        let path: PathBuf = out.join(format!("rates{}.csv", suffix(kind)));
        result.write_rates_csv(BufWriter::new(fs::File::create(&path)?))?;
        manifest.record(out, &path)?;
    }
    manifest.finish(out)
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical { .. } | Error::Solver { .. } => 3,
        _ => 2,
    }
}
