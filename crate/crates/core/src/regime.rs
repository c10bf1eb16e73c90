//! SNR regime classification and predicted-versus-empirical reports.

use std::io::Write;

use faer::{Mat, MatRef};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::BandwidthPolicy;
use crate::error::{Error, Result};
use crate::kernel::{affinity, fuse, pairwise_sq_dists, spectrum, Scale, SpectrumResult};
use crate::linalg::{self, fit_loglog_slope, median};
use crate::model::{derive_seed, generate, ModelConfig};
use crate::reference::{n_tilde, sensor_reference, MixedBranch, SensorReference};
use crate::rmt::{free_multiplicative_convolution, ModelScalars, MpConvention, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `0 ≤ ζ₂ ≤ ζ₁ < 1`.
    BothLow,
    /// `0 ≤ ζ₂ < 1 ≤ ζ₁`.
    Mixed,
    /// `1 ≤ ζ₂ ≤ ζ₁ < 2`, bandwidth `h = p`.
    #[serde(rename = "BothHigh_1")]
    BothHigh1,
    /// `1 ≤ ζ₂ < 2 ≤ ζ₁`, bandwidth `h = p`.
    #[serde(rename = "BothHigh_2")]
    BothHigh2,
    /// `2 ≤ ζ₂ ≤ ζ₁`, bandwidth `h = p`.
    #[serde(rename = "BothHigh_3")]
    BothHigh3,
    /// `ζ₂ ≥ 1` with percentile bandwidths.
    BothHighAdaptive,
    /// `ζ₂` beyond `2/δ + 1` with `h = p`: the kernels collapse to the identity.
    ExtremeIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// `N = A₁A₂ᵀ`.
    #[default]
    Ncca,
    /// `A = A₁A₂`.
    Ad,
}

/// Constants the thresholds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeParams {
    /// Constant `C` in `R = C log n` and `R = C n^{ζ₂−1}`.
    pub c: f64,
    pub s1: usize,
    pub s2: usize,
    /// Explicit `δ ∈ (0,1)`; by default `2.1/(ζ − 1)`.
    pub delta: Option<f64>,
}

impl Default for RegimeParams {
    fn default() -> Self {
        RegimeParams { c: 2.0, s1: 4, s2: 4, delta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub regime: Regime,
    /// Exponents after ordering so that `zeta1 ≥ zeta2`.
    pub zeta1: f64,
    pub zeta2: f64,
    pub swapped: bool,
    pub t: Option<usize>,
    pub s: Option<usize>,
    pub r: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub d1_frak: Option<usize>,
    pub d2_frak: Option<usize>,
    /// Predicted error exponent: errors scale like `n^rate`.
    pub rate: Option<f64>,
    pub delta: Option<f64>,
    /// Whether the large-`ζ₁` condition `ζ₁ > 2/δ + 1` holds.
    pub extreme: bool,
}

fn depth(zeta: f64) -> Option<usize> {
    (zeta < 1.0).then(|| (1.0 / (1.0 - zeta)).ceil() as usize + 1)
}

fn e_exponent(zeta: f64) -> Option<f64> {
    depth(zeta).map(|d| (zeta - 1.0) * d as f64 + 1.0)
}

/// `(δ, ζ > 2/δ + 1)` for an exponent `ζ`.
fn extreme_condition(zeta: f64, delta: Option<f64>) -> (Option<f64>, bool) {
    if zeta <= 1.0 {
        return (delta, false);
    }
    let d = delta.unwrap_or(2.1 / (zeta - 1.0));
    (Some(d), d > 0.0 && d < 1.0 && zeta > 2.0 / d + 1.0)
}

/// Regime label and thresholds for a pair of exponents.
pub fn classify(zeta1: f64, zeta2: f64, n: usize, classic: bool, params: &RegimeParams) -> RegimeThresholds {
    let swapped = zeta2 > zeta1;
    let (z1, z2, s1, s2) = if swapped {
        (zeta2, zeta1, params.s2, params.s1)
    } else {
        (zeta1, zeta2, params.s1, params.s2)
    };
    let nf = n as f64;
    let mut th = RegimeThresholds {
        regime: Regime::BothLow,
        zeta1: z1,
        zeta2: z2,
        swapped,
        t: None,
        s: None,
        r: None,
        e1: e_exponent(z1),
        e2: e_exponent(z2),
        d1_frak: depth(z1),
        d2_frak: depth(z2),
        rate: None,
        delta: None,
        extreme: false,
    };
    if z1 < 1.0 {
        th.regime = Regime::BothLow;
        th.t = Some(if z1 < 0.5 {
            8
        } else if z2 < 0.5 {
            s1 + 8
        } else {
            s1 + s2 + 8
        });
        th.rate = Some(((z1 - 1.0) / 2.0).max(th.e1.unwrap()));
    } else if z2 < 1.0 {
        th.regime = Regime::Mixed;
        th.s = Some(if z2 < 0.5 { 4 } else { s2 + 4 });
        th.rate = Some(th.e2.unwrap().max((z2 - 1.0) / 2.0));
        (th.delta, th.extreme) = extreme_condition(z1, params.delta);
    } else if !classic {
        th.regime = Regime::BothHighAdaptive;
        th.r = Some(params.c * nf.ln());
        th.rate = Some(if z2 > 1.0 { (-0.5f64).max(1.0 - z2) } else { -0.5 });
    } else {
        let r = if z2 == 1.0 { params.c * nf.ln() } else { params.c * nf.powf(z2 - 1.0) };
        if z1 < 2.0 {
            th.regime = Regime::BothHigh1;
            th.r = Some(r);
            th.rate = Some(-0.5);
        } else if z2 < 2.0 {
            th.regime = Regime::BothHigh2;
            th.r = Some(r);
            th.rate = Some(-0.5);
            (th.delta, th.extreme) = extreme_condition(z1, params.delta);
        } else {
            (th.delta, th.extreme) = extreme_condition(z2, params.delta);
            if th.extreme {
                th.regime = Regime::ExtremeIdentity;
            } else {
                th.regime = Regime::BothHigh3;
                th.rate = Some((-1.5f64).max(-z2 / 2.0));
            }
        }
    }
    th
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthKind {
    #[default]
    Classic,
    Percentile,
}

fn default_omega() -> f64 {
    0.5
}

/// Bandwidth section of an experiment: one kind, per-sensor `ω` overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthConfig {
    #[serde(default)]
    pub kind: BandwidthKind,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub omega1: Option<f64>,
    #[serde(default)]
    pub omega2: Option<f64>,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig { kind: BandwidthKind::Classic, omega: 0.5, omega1: None, omega2: None }
    }
}

impl BandwidthConfig {
    pub fn percentile(omega: f64) -> Self {
        BandwidthConfig { kind: BandwidthKind::Percentile, omega, ..Default::default() }
    }

    pub fn policy(&self, sensor: usize) -> BandwidthPolicy {
        match self.kind {
            BandwidthKind::Classic => BandwidthPolicy::Classic,
            BandwidthKind::Percentile => {
                let o = if sensor == 1 { self.omega1 } else { self.omega2 };
                BandwidthPolicy::Percentile { omega: o.unwrap_or(self.omega) }
            }
        }
    }

    fn swapped(self) -> Self {
        BandwidthConfig { omega1: self.omega2, omega2: self.omega1, ..self }
    }
}

fn default_trials() -> usize {
    1
}

/// Everything needed to run one experiment.
///
/// `seed` is the root seed: trial `t` generates data with
/// `derive_seed(seed, t)`, so `model.seed` is ignored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub bandwidth: BandwidthConfig,
    #[serde(default)]
    pub regime: RegimeParams,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mp_convention: MpConvention,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn new(model: ModelConfig, bandwidth: BandwidthConfig, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            model,
            bandwidth,
            regime: RegimeParams::default(),
            trials,
            seed,
            mp_convention: MpConvention::Gram,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        for k in [1, 2] {
            self.bandwidth.policy(k).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(d) = self.regime.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("delta must lie in (0,1), got {d}")));
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        classify(
            self.model.zeta_max(1),
            self.model.zeta_max(2),
            self.model.n,
            self.bandwidth.kind == BandwidthKind::Classic,
            &self.regime,
        )
    }

    /// Copy with sensor labels exchanged.
    pub fn swapped(&self) -> Self {
        let m = &self.model;
        let model = ModelConfig {
            p1: m.p2,
            p2: m.p1,
            d1: m.d2,
            d2: m.d1,
            zeta1: m.zeta2.clone(),
            zeta2: m.zeta1.clone(),
            ..m.clone()
        };
        let regime = RegimeParams { s1: self.regime.s2, s2: self.regime.s1, ..self.regime };
        ExperimentConfig { model, bandwidth: self.bandwidth.swapped(), regime, ..self.clone() }
    }

    /// Same experiment at another sample size, keeping `p_k/n` fixed.
    pub fn with_n(&self, n: usize) -> Self {
        let mut c = self.clone();
        let scale = n as f64 / self.model.n as f64;
        c.model.n = n;
        c.model.p1 = ((self.model.p1 as f64) * scale).round().max(2.0) as usize;
        c.model.p2 = ((self.model.p2 as f64) * scale).round().max(2.0) as usize;
        c
    }
}

/// Predicted-versus-empirical eigenvalues over a set of indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    /// 1-based eigenvalue indices compared.
    pub indices: Vec<usize>,
    pub empirical: Vec<f64>,
    pub predicted: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub median_abs: f64,
    pub median_rel: f64,
    pub max_abs: f64,
    pub max_rel: f64,
}

impl Comparison {
    /// Compare `empirical[i−1]` with `predicted[i−1]` for `i` in `lo..=hi`.
    pub fn new(name: &str, empirical: &[f64], predicted: &[f64], lo: usize, hi: usize) -> Self {
        let hi = hi.min(empirical.len()).min(predicted.len());
        let indices: Vec<usize> = (lo.max(1)..=hi).collect();
        let emp: Vec<f64> = indices.iter().map(|&i| empirical[i - 1]).collect();
        let pred: Vec<f64> = indices.iter().map(|&i| predicted[i - 1]).collect();
        let abs_err: Vec<f64> = emp.iter().zip(&pred).map(|(e, p)| (e - p).abs()).collect();
        let rel_err: Vec<f64> = abs_err.iter().zip(&pred).map(|(a, p)| a / p.abs()).collect();
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Comparison {
            name: name.into(),
            median_abs: median(&abs_err).unwrap_or(f64::NAN),
            median_rel: median(&rel_err).unwrap_or(f64::NAN),
            max_abs: max(&abs_err),
            max_rel: max(&rel_err),
            indices,
            empirical: emp,
            predicted: pred,
            abs_err,
            rel_err,
        }
    }
}

/// Largest eigenvalue (by real part) of a reference product past an index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub name: String,
    /// First 1-based index included.
    pub from_index: usize,
    pub max_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormError {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub h1: f64,
    pub h2: f64,
    pub empirical_spectrum: SpectrumResult,
    pub comparisons: Vec<Comparison>,
    pub norm_errors: Vec<NormError>,
    pub tails: Vec<TailCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub name: String,
    /// Mean over trials.
    pub mean: f64,
    pub max: f64,
    pub values: Vec<f64>,
}

impl SummaryStat {
    fn new(name: String, values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SummaryStat { name, mean, max, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub matrix: MatrixKind,
    pub n: usize,
    pub thresholds: RegimeThresholds,
    pub bandwidth: BandwidthConfig,
    pub mp_convention: MpConvention,
    pub trials: Vec<TrialReport>,
    /// Per comparison: median relative and absolute errors over the compared bulk.
    pub summary: Vec<SummaryStat>,
    pub norm_errors: Vec<SummaryStat>,
    pub tails: Vec<SummaryStat>,
}

impl RegimeReport {
    pub fn summary_stat(&self, name: &str) -> Option<&SummaryStat> {
        self.summary.iter().chain(&self.norm_errors).chain(&self.tails).find(|s| s.name == name)
    }

    /// Write `trial,index,empirical,predicted,abs_err,rel_err` for the primary comparison.
    pub fn write_spectra_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "trial,index,empirical,predicted,abs_err,rel_err")?;
        for t in &self.trials {
            if let Some(c) = t.comparisons.first() {
                for k in 0..c.indices.len() {
                    writeln!(
                        w,
                        "{},{},{:e},{:e},{:e},{:e}",
                        t.trial, c.indices[k], c.empirical[k], c.predicted[k], c.abs_err[k], c.rel_err[k]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Quantile targets shared by all trials when bandwidths do not depend on the data.
enum Prediction {
    None,
    Quantiles(Vec<f64>),
}

fn product(kind: MatrixKind, a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    match kind {
        MatrixKind::Ncca => a * b.transpose(),
        MatrixKind::Ad => a * b,
    }
}

fn bulk_hi(n: usize) -> usize {
    (0.95 * n as f64).floor() as usize
}


/// Quantiles `scale·γ_{ν̃₁⊠ν̃₂}(i)`, `i = 1..n`.
pub fn both_low_targets(scalars: &ModelScalars, n: usize, conv: MpConvention, opts: &SolverOptions) -> Result<Vec<f64>> {
    let mu1 = scalars.nu_tilde(1, conv)?;
    let mu2 = scalars.nu_tilde(2, conv)?;
    let r = free_multiplicative_convolution(&mu1, &mu2, n, opts)?;
    let s = scalars.both_low_scale();
    Ok(r.quantiles.into_iter().map(|q| s * q).collect())
}

/// Quantiles `e^{2υp₂/h₂}·γ_{ν̃₂}(i)`, `i = 1..n`.
pub fn extreme_mixed_targets(scalars: &ModelScalars, n: usize, conv: MpConvention) -> Result<Vec<f64>> {
    let s = scalars.mixed_scale();
    Ok(scalars.nu_tilde(2, conv)?.quantiles(n)?.into_iter().map(|q| s * q).collect())
}

fn run_trial(
    cfg: &ExperimentConfig,
    th: &RegimeThresholds,
    kind: MatrixKind,
    trial: usize,
    shared: &Prediction,
) -> Result<TrialReport> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let mut model = cfg.model.clone();
    model.seed = seed;
    let mut pair = generate(&model)?;
    // Work in the orientation ζ₁ ≥ ζ₂.
    let cfg = if th.swapped {
        pair = pair.swapped();
        cfg.swapped()
    } else {
        cfg.clone()
    };
    let model = &cfg.model;
    let n = model.n;
    let ups = model.upsilon;

    let sq1 = pairwise_sq_dists(pair.x.as_ref())?;
    let sq2 = pairwise_sq_dists(pair.y.as_ref())?;
    let h1 = cfg.bandwidth.policy(1).select(model.p1, sq1.as_ref())?;
    let h2 = cfg.bandwidth.policy(2).select(model.p2, sq2.as_ref())?;
    let w1 = affinity(sq1.as_ref(), h1, ups)?;
    drop(sq1);
    let w2 = affinity(sq2.as_ref(), h2, ups)?;
    drop(sq2);
    let stack = fuse(w1, w2, h1, h2)?;
    let m = match kind {
        MatrixKind::Ncca => stack.n,
        MatrixKind::Ad => stack.a_fused,
    };
    let scalars = ModelScalars::new(model, h1, h2)?;
    let hi = bulk_hi(n);

    let mut comparisons = vec![];
    let mut norm_errors = vec![];
    let mut tails = vec![];
    let scale = match th.regime {
        Regime::BothLow => Scale::NSquared,
        Regime::Mixed => Scale::N,
        _ => Scale::One,
    };
    let empirical = spectrum(m.as_ref(), scale)?;

    match th.regime {
        Regime::BothLow => {
            let targets = match shared {
                Prediction::Quantiles(q) => q.clone(),
                Prediction::None => both_low_targets(&scalars, n, cfg.mp_convention, &cfg.solver)?,
            };
            let t = th.t.unwrap_or(8);
            comparisons.push(Comparison::new("free_convolution", &empirical.eigen_real, &targets, t + 1, hi));
        }
        Regime::Mixed => {
            let s = th.s.unwrap_or(4);
            let r1 = sensor_reference(&pair, &scalars, 1, h1)?;
            let t2 = crate::reference::noise_gram_surrogate(pair.noise(2).as_ref(), &scalars, 2, h2);
            let a1 = match MixedBranch::for_zeta(th.zeta1) {
                MixedBranch::Signal => &r1.a_tilde_s,
                MixedBranch::Cross => &r1.a_tilde_c,
            };
            let nt = n_tilde(a1.as_ref(), t2.as_ref(), &scalars);
            let nt_spec = spectrum(nt.as_ref(), Scale::One)?;
            let c = Comparison::new("n_tilde", &empirical.eigen_real, &nt_spec.eigen_real, s + 1, hi);
            if th.extreme {
                let targets = match shared {
                    Prediction::Quantiles(q) => q.clone(),
                    Prediction::None => extreme_mixed_targets(&scalars, n, cfg.mp_convention)?,
                };
                comparisons.push(Comparison::new("nu2_quantiles", &empirical.eigen_real, &targets, s + 1, hi));
            }
            comparisons.push(c);
        }
        _ => {
            let refs = [
                sensor_reference(&pair, &scalars, 1, h1)?,
                sensor_reference(&pair, &scalars, 2, h2)?,
            ];
            high_snr_checks(kind, th, &m, &refs, &empirical, &mut comparisons, &mut norm_errors, &mut tails)?;
        }
    }
    Ok(TrialReport { trial, seed, h1, h2, empirical_spectrum: empirical, comparisons, norm_errors, tails })
}

#[allow(clippy::too_many_arguments)]
fn high_snr_checks(
    kind: MatrixKind,
    th: &RegimeThresholds,
    m: &Mat<f64>,
    refs: &[SensorReference; 2],
    empirical: &SpectrumResult,
    comparisons: &mut Vec<Comparison>,
    norms: &mut Vec<NormError>,
    tails: &mut Vec<TailCheck>,
) -> Result<()> {
    let n = m.nrows();
    let [r1, r2] = refs;
    let mut push_norm = |name: &str, reference: &Mat<f64>| {
        norms.push(NormError { name: name.into(), value: linalg::spectral_norm_diff(m.as_ref(), reference.as_ref()) });
    };
    let tilde_ss = product(kind, r1.a_tilde_s.as_ref(), r2.a_tilde_s.as_ref());
    let (primary_name, primary) = match th.regime {
        Regime::BothHigh1 | Regime::BothHighAdaptive => {
            push_norm("tilde_s_tilde_s", &tilde_ss);
            if th.regime == Regime::BothHighAdaptive {
                let ss = product(kind, r1.a_s.as_ref(), r2.a_s.as_ref());
                push_norm("s_s", &ss);
            }
            ("tilde_s_tilde_s", tilde_ss.clone())
        }
        Regime::BothHigh2 => {
            let cs = product(kind, r1.a_tilde_c.as_ref(), r2.a_tilde_s.as_ref());
            push_norm("tilde_c_tilde_s", &cs);
            if th.extreme {
                push_norm("tilde_s_sensor2", &r2.a_tilde_s);
            }
            ("tilde_c_tilde_s", cs)
        }
        Regime::BothHigh3 | Regime::ExtremeIdentity => {
            let cc = product(kind, r1.a_tilde_c.as_ref(), r2.a_tilde_c.as_ref());
            push_norm("tilde_c_tilde_c", &cc);
            if th.regime == Regime::ExtremeIdentity {
                let eye = Mat::<f64>::identity(n, n);
                push_norm("identity", &eye);
                ("identity", eye)
            } else {
                ("tilde_c_tilde_c", cc)
            }
        }
        _ => return Err(Error::Regime(format!("{:?} has no norm statement", th.regime))),
    };
    let ref_spec = spectrum(primary.as_ref(), Scale::One)?;
    comparisons.push(Comparison::new(primary_name, &empirical.eigen_real, &ref_spec.eigen_real, 1, n));
    if let Some(r) = th.r {
        // Tail statements concern the lazy clean product.
        let tail_spec = if primary_name == "tilde_s_tilde_s" { ref_spec } else { spectrum(tilde_ss.as_ref(), Scale::One)? };
        let from = (r.floor() as usize + 1).min(n);
        let max_tail = tail_spec.eigen_real[from - 1..].iter().map(|v| v.abs()).fold(0.0, f64::max);
        tails.push(TailCheck { name: "tilde_s_tilde_s".into(), from_index: from, max_tail });
    }
    Ok(())
}

/// Run all trials of an experiment for one fused matrix.
pub fn run_experiment(cfg: &ExperimentConfig, kind: MatrixKind) -> Result<RegimeReport> {
    cfg.validate()?;
    let th = cfg.thresholds();
    let n = cfg.model.n;
    info!("{:?} regime for ζ = ({}, {}), n = {n}, {} trials", th.regime, th.zeta1, th.zeta2, cfg.trials);

    let oriented = if th.swapped { cfg.swapped() } else { cfg.clone() };
    let shared = if oriented.bandwidth.kind == BandwidthKind::Classic {
        let m = &oriented.model;
        let scalars = ModelScalars::new(m, m.p1 as f64, m.p2 as f64)?;
        match th.regime {
            Regime::BothLow => Prediction::Quantiles(both_low_targets(&scalars, n, cfg.mp_convention, &cfg.solver)?),
            Regime::Mixed if th.extreme => Prediction::Quantiles(extreme_mixed_targets(&scalars, n, cfg.mp_convention)?),
            _ => Prediction::None,
        }
    } else {
        Prediction::None
    };

    let trials: Vec<TrialReport> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &th, kind, t, &shared))
        .collect::<Result<_>>()?;

    let mut summary = vec![];
    if let Some(first) = trials.first() {
        for (k, c) in first.comparisons.iter().enumerate() {
            let rel = trials.iter().map(|t| t.comparisons[k].median_rel).collect();
            let abs = trials.iter().map(|t| t.comparisons[k].median_abs).collect();
            summary.push(SummaryStat::new(format!("{}:median_rel", c.name), rel));
            summary.push(SummaryStat::new(format!("{}:median_abs", c.name), abs));
        }
    }
    let collect = |f: &dyn Fn(&TrialReport) -> Vec<(String, f64)>| -> Vec<SummaryStat> {
        let Some(first) = trials.first() else { return vec![] };
        f(first)
            .into_iter()
            .enumerate()
            .map(|(k, (name, _))| SummaryStat::new(name, trials.iter().map(|t| f(t)[k].1).collect()))
            .collect()
    };
    let norm_errors = collect(&|t| t.norm_errors.iter().map(|e| (e.name.clone(), e.value)).collect());
    let tails = collect(&|t| t.tails.iter().map(|e| (format!("{}:tail", e.name), e.max_tail)).collect());
    Ok(RegimeReport {
        matrix: kind,
        n,
        thresholds: th,
        bandwidth: cfg.bandwidth,
        mp_convention: cfg.mp_convention,
        trials,
        summary,
        norm_errors,
        tails,
    })
}

/// Least-squares log-log slope of a statistic against `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub metric: String,
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<RegimeReport>,
    pub rates: Vec<RateFit>,
}

impl SweepResult {
    pub fn rate(&self, metric: &str) -> Option<&RateFit> {
        self.rates.iter().find(|r| r.metric == metric)
    }

    pub fn write_rates_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric,slope,intercept,ns,values")?;
        for r in &self.rates {
            let ns: Vec<String> = r.ns.iter().map(|v| v.to_string()).collect();
            let vs: Vec<String> = r.values.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{:e},{:e},{},{}", r.metric, r.slope, r.intercept, ns.join(";"), vs.join(";"))?;
        }
        Ok(())
    }
}

/// Run the experiment at each `n` (aspect ratios fixed) and fit rates for
/// every mean statistic in the reports.
pub fn sweep(cfg: &ExperimentConfig, ns: &[usize], kind: MatrixKind) -> Result<SweepResult> {
    if ns.len() < 2 {
        return Err(Error::Config("a sweep needs at least two sample sizes".into()));
    }
    let reports: Vec<RegimeReport> = ns.iter().map(|&n| run_experiment(&cfg.with_n(n), kind)).collect::<Result<_>>()?;
    let names: Vec<String> = reports[0]
        .summary
        .iter()
        .chain(&reports[0].norm_errors)
        .chain(&reports[0].tails)
        .map(|s| s.name.clone())
        .collect();
    let mut rates = vec![];
    for name in names {
        let values: Vec<f64> = reports
            .iter()
            .map(|r| r.summary_stat(&name).map(|s| s.mean).unwrap_or(f64::NAN))
            .collect();
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        if let Some((slope, intercept)) = fit_loglog_slope(&x, &values) {
            rates.push(RateFit { metric: name, ns: ns.to_vec(), values, slope, intercept });
        }
    }
    Ok(SweepResult { reports, rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify_classic(z1: f64, z2: f64, n: usize) -> RegimeThresholds {
        classify(z1, z2, n, true, &RegimeParams::default())
    }

    #[test]
    fn both_low_thresholds() {
        let th = classify_classic(0.0, 0.0, 300);
        assert_eq!(th.regime, Regime::BothLow);
        assert_eq!(th.t, Some(8));
        assert_eq!(classify_classic(0.6, 0.2, 300).t, Some(12));
        assert_eq!(classify_classic(0.6, 0.7, 300).t, Some(16));
    }

    #[test]
    fn mixed_thresholds() {
        let th = classify_classic(1.5, 0.0, 300);
        assert_eq!(th.regime, Regime::Mixed);
        assert_eq!(th.s, Some(4));
        assert!(!th.extreme);
        assert_eq!(classify_classic(1.5, 0.6, 300).s, Some(8));
        let th = classify_classic(6.0, 0.0, 300);
        assert!(th.extreme);
        assert!((th.delta.unwrap() - 0.42).abs() < 1e-12);
    }

    #[test]
    fn both_high_thresholds() {
        let th = classify_classic(1.5, 1.5, 400);
        assert_eq!(th.regime, Regime::BothHigh1);
        assert!((th.r.unwrap() - 2.0 * 20.0).abs() < 1e-9);
        let th = classify_classic(1.0, 1.0, 400);
        assert!((th.r.unwrap() - 2.0 * 400f64.ln()).abs() < 1e-12);
        assert_eq!(classify_classic(2.5, 1.5, 400).regime, Regime::BothHigh2);
        assert_eq!(classify_classic(2.5, 2.5, 400).regime, Regime::BothHigh3);
        assert_eq!(classify_classic(4.0, 4.0, 400).regime, Regime::ExtremeIdentity);
        let th = classify(2.5, 2.5, 400, false, &RegimeParams::default());
        assert_eq!(th.regime, Regime::BothHighAdaptive);
        assert!((th.r.unwrap() - 2.0 * 400f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn labels_invariant_under_swap() {
        for &(a, b) in &[(0.2, 0.7), (1.5, 0.3), (2.5, 1.2), (0.0, 4.0)] {
            let x = classify_classic(a, b, 200);
            let y = classify_classic(b, a, 200);
            assert_eq!(x.regime, y.regime);
            assert_eq!((x.zeta1, x.zeta2), (y.zeta1, y.zeta2));
            assert_ne!(x.swapped, y.swapped);
        }
    }

    #[test]
    fn error_exponents() {
        let th = classify_classic(0.6, 0.0, 100);
        // e = (ζ−1)(⌈1/(1−ζ)⌉+1)+1 = −0.4·4 + 1
        assert!((th.e1.unwrap() + 0.6).abs() < 1e-12);
        assert_eq!(th.d1_frak, Some(4));
        assert!(th.e2.unwrap() < 0.0);
    }

    #[test]
    fn comparison_index_bookkeeping() {
        let emp: Vec<f64> = (0..100).map(|i| 100.0 - i as f64).collect();
        let pred: Vec<f64> = emp.iter().map(|v| v * 1.01).collect();
        let c = Comparison::new("x", &emp, &pred, 9, 95);
        assert_eq!(c.indices.first(), Some(&9));
        assert_eq!(c.indices.last(), Some(&95));
        assert_eq!(c.indices.len(), 95 - 8);
        assert!((c.median_rel - 0.01 / 1.01).abs() < 1e-12);
    }

    #[test]
    fn pure_noise_report_bookkeeping() {
        let model = ModelConfig::pure_noise(60, 120, 180, 0);
        let cfg = ExperimentConfig::new(model, BandwidthConfig::default(), 1, 5);
        let r = run_experiment(&cfg, MatrixKind::Ncca).unwrap();
        assert_eq!(r.thresholds.regime, Regime::BothLow);
        let c = &r.trials[0].comparisons[0];
        assert_eq!(c.indices.len(), 57 - 9 + 1);
        assert_eq!(c.indices[0], 9);
        let mut buf = vec![];
        r.write_spectra_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + c.indices.len());
    }

    #[test]
    fn with_n_keeps_ratios() {
        let cfg = ExperimentConfig::new(ModelConfig::pure_noise(250, 500, 750, 0), BandwidthConfig::default(), 1, 0);
        let c = cfg.with_n(1000);
        assert_eq!((c.model.n, c.model.p1, c.model.p2), (1000, 2000, 3000));
    }

    #[test]
    fn sweep_needs_two_sizes() {
        let cfg = ExperimentConfig::new(ModelConfig::pure_noise(20, 40, 60, 0), BandwidthConfig::default(), 1, 0);
        assert!(matches!(sweep(&cfg, &[20], MatrixKind::Ncca), Err(Error::Config(_))));
    }
}
