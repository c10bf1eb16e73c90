//! Clean-signal reference matrices and Taylor surrogates of the noisy kernel.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{affinity, pairwise_sq_dists, transition};
use crate::linalg;
use crate::model::{ModelConfig, PointCloudPair};
use crate::rmt::ModelScalars;

/// Rows of `u` that carry any nonzero entry (the signal subspace).
fn active_rows(u: MatRef<'_, f64>) -> Vec<usize> {
    (0..u.nrows()).filter(|&r| (0..u.ncols()).any(|j| u[(r, j)] != 0.0)).collect()
}

fn restrict_rows(m: MatRef<'_, f64>, rows: &[usize]) -> Mat<f64> {
    Mat::from_fn(rows.len().max(1), m.ncols(), |i, j| if rows.is_empty() { 0.0 } else { m[(rows[i], j)] })
}

/// Affinity `W_s` of the clean signal at bandwidth `h`.
pub fn clean_affinity(u: MatRef<'_, f64>, h: f64, upsilon: f64) -> Result<Mat<f64>> {
    let sub = restrict_rows(u, &active_rows(u));
    affinity(pairwise_sq_dists(sub.as_ref())?.as_ref(), h, upsilon)
}

/// `W̃_s = e^{−2υp/h}·W_s + (1 − e^{−2υp/h})·I`.
pub fn lazy_affinity(w_s: MatRef<'_, f64>, p_over_h: f64, upsilon: f64) -> Mat<f64> {
    let e = (-2.0 * upsilon * p_over_h).exp();
    Mat::from_fn(w_s.nrows(), w_s.ncols(), |i, j| e * w_s[(i, j)] + if i == j { 1.0 - e } else { 0.0 })
}

/// Exponents `−2υ(uᵢ − uⱼ)ᵀ(zᵢ − zⱼ)/h` of the cross term.
fn cross_exponent(u: MatRef<'_, f64>, z: MatRef<'_, f64>, h: f64, upsilon: f64) -> Mat<f64> {
    let rows = active_rows(u);
    let n = u.ncols();
    Mat::from_fn(n, n, |i, j| {
        let dot: f64 = rows.iter().map(|&r| (u[(r, i)] - u[(r, j)]) * (z[(r, i)] - z[(r, j)])).sum();
        -2.0 * upsilon * dot / h
    })
}

/// Cross term `W_c(i,j) = exp(−2υ(uᵢ − uⱼ)ᵀ(zᵢ − zⱼ)/h)`.
pub fn cross_affinity(u: MatRef<'_, f64>, z: MatRef<'_, f64>, h: f64, upsilon: f64) -> Mat<f64> {
    let e = cross_exponent(u, z, h, upsilon);
    Mat::from_fn(e.nrows(), e.ncols(), |i, j| e[(i, j)].exp())
}

/// `W̃_c = W̃_s ∘ W_c`, evaluated in log space so that an overflowing cross
/// term meets its vanishing clean factor before exponentiation.
pub fn lazy_cross_affinity(u: MatRef<'_, f64>, z: MatRef<'_, f64>, h: f64, p_over_h: f64, upsilon: f64) -> Result<Mat<f64>> {
    let sub = restrict_rows(u, &active_rows(u));
    let sq = pairwise_sq_dists(sub.as_ref())?;
    let cross = cross_exponent(u, z, h, upsilon);
    let n = u.ncols();
    Ok(Mat::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (-2.0 * upsilon * p_over_h - upsilon * sq[(i, j)] / h + cross[(i, j)]).exp()
        }
    }))
}

/// `T_k = ς_{k,h}·I + (2υ e^{−υτ_k p_k/h_k}/h_k)·NᵀN` for the noise `N` of sensor `k`.
pub fn noise_gram_surrogate(noise: MatRef<'_, f64>, scalars: &ModelScalars, sensor: usize, h: f64) -> Mat<f64> {
    let (vs, tau, r) = if sensor == 1 {
        (scalars.varsigma1_h, scalars.tau1, scalars.r1)
    } else {
        (scalars.varsigma2_h, scalars.tau2, scalars.r2)
    };
    let u = scalars.upsilon;
    let coef = 2.0 * u * (-u * tau * r).exp() / h;
    let mut t = noise.transpose() * noise;
    let n = t.nrows();
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] *= coef;
        }
        t[(i, i)] += vs;
    }
    t
}

/// Which first factor the mixed-regime surrogate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedBranch {
    /// `1 ≤ ζ₁ < 2`: the lazy clean walk `Ã₁,ₛ`.
    Signal,
    /// `ζ₁ ≥ 2`: the cross-term walk `Ã₁,c`.
    Cross,
}

impl MixedBranch {
    pub fn for_zeta(zeta1: f64) -> Self {
        if zeta1 >= 2.0 {
            MixedBranch::Cross
        } else {
            MixedBranch::Signal
        }
    }
}

/// `Ñ = e^{2υp₂/h₂} · Ã₁ · T₂`.
pub fn n_tilde(a1: MatRef<'_, f64>, t2: MatRef<'_, f64>, scalars: &ModelScalars) -> Mat<f64> {
    let mut m = a1 * t2;
    let s = scalars.mixed_scale();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] *= s;
        }
    }
    m
}

/// Reference matrices for one sensor.
#[derive(Debug, Clone)]
pub struct SensorReference {
    pub w_s: Mat<f64>,
    pub w_tilde_s: Mat<f64>,
    pub a_tilde_s: Mat<f64>,
    pub a_s: Mat<f64>,
    pub w_tilde_c: Mat<f64>,
    pub a_tilde_c: Mat<f64>,
    pub t: Mat<f64>,
}

/// All reference matrices for a pair, plus the mixed surrogate `Ñ`.
#[derive(Debug, Clone)]
pub struct ReferenceStack {
    pub sensors: [SensorReference; 2],
    pub n_tilde: Mat<f64>,
    pub branch: MixedBranch,
}

/// Reference matrices for sensor `k` of the pair.
pub fn sensor_reference(
    pair: &PointCloudPair,
    scalars: &ModelScalars,
    sensor: usize,
    h: f64,
) -> Result<SensorReference> {
    let u = pair.signal(sensor);
    let z = pair.noise(sensor);
    if u.ncols() != pair.n() || z.ncols() != pair.n() || u.nrows() != z.nrows() {
        return Err(Error::Input("clean and noise parts do not match the observations".into()));
    }
    let ups = scalars.upsilon;
    let r = if sensor == 1 { scalars.r1 } else { scalars.r2 };
    let w_s = clean_affinity(u.as_ref(), h, ups)?;
    let w_tilde_s = lazy_affinity(w_s.as_ref(), r, ups);
    let (_, a_tilde_s) = transition(w_tilde_s.as_ref())?;
    let (_, a_s) = transition(w_s.as_ref())?;
    let w_tilde_c = lazy_cross_affinity(u.as_ref(), z.as_ref(), h, r, ups)?;
    let (_, a_tilde_c) = transition(w_tilde_c.as_ref())?;
    let t = noise_gram_surrogate(z.as_ref(), scalars, sensor, h);
    Ok(SensorReference { w_s, w_tilde_s, a_tilde_s, a_s, w_tilde_c, a_tilde_c, t })
}

/// Build every reference matrix with the bandwidths of the noisy run.
pub fn build_reference(pair: &PointCloudPair, config: &ModelConfig, h1: f64, h2: f64) -> Result<ReferenceStack> {
    let scalars = ModelScalars::new(config, h1, h2)?;
    let s1 = sensor_reference(pair, &scalars, 1, h1)?;
    let s2 = sensor_reference(pair, &scalars, 2, h2)?;
    let branch = MixedBranch::for_zeta(config.zeta_max(1));
    let a1 = match branch {
        MixedBranch::Signal => &s1.a_tilde_s,
        MixedBranch::Cross => &s1.a_tilde_c,
    };
    let n_tilde = n_tilde(a1.as_ref(), s2.t.as_ref(), &scalars);
    Ok(ReferenceStack { sensors: [s1, s2], n_tilde, branch })
}

/// Taylor-expansion surrogate of one sensor's affinity (bandwidth `h = p`).
#[derive(Debug, Clone)]
pub struct ShMatrices {
    pub phi: Vec<f64>,
    pub sh0: Mat<f64>,
    pub sh1: Mat<f64>,
    pub sh2: Mat<f64>,
    /// Orders `3..𝔡` of the expansion; present when `ζ ≥ 0.5`.
    pub sh_d: Option<Mat<f64>>,
    pub k1: Mat<f64>,
    /// Expansion depth `𝔡 = ⌈1/(1−ζ)⌉ + 1`.
    pub depth: usize,
    pub tau: f64,
    pub varsigma: f64,
}

/// `f^{(k)}(τ)` for `f(x) = e^{−υx}`.
pub fn kernel_derivative(upsilon: f64, tau: f64, k: u32) -> f64 {
    (-upsilon).powi(k as i32) * (-upsilon * tau).exp()
}

/// `⌈1/(1−ζ)⌉ + 1` for `ζ < 1`.
pub fn expansion_depth(zeta: f64) -> usize {
    (1.0 / (1.0 - zeta)).ceil() as usize + 1
}

/// Shift matrices and the surrogate `K₁` for sensor `k`.
pub fn build_sh(pair: &PointCloudPair, config: &ModelConfig, sensor: usize) -> Result<ShMatrices> {
    let zeta = config.zeta_max(sensor);
    if zeta >= 1.0 {
        return Err(Error::Regime(format!("Taylor surrogate needs ζ < 1, sensor {sensor} has ζ = {zeta}")));
    }
    let x = pair.data(sensor);
    let p = config.p(sensor) as f64;
    let n = x.ncols();
    let sigma2 = config.signal_energy(sensor);
    let ups = config.upsilon;
    let tau = crate::rmt::scalars::tau(sigma2, p);
    let f = |k: u32| kernel_derivative(ups, tau, k);
    let varsigma = crate::rmt::scalars::varsigma(ups, tau, 1.0);

    let phi: Vec<f64> = (0..n)
        .map(|i| x.col(i).iter().map(|v| v * v).sum::<f64>() / p - (1.0 + sigma2 / p))
        .collect();
    let sh0 = Mat::from_fn(n, n, |_, _| f(0));
    let sh1 = Mat::from_fn(n, n, |i, j| f(1) * (phi[i] + phi[j]));
    let konst = 4.0 * ((sigma2 + 1.0).powi(2) + p) / (p * p);
    let sh2 = Mat::from_fn(n, n, |i, j| {
        0.5 * f(2) * (phi[j] * phi[j] + phi[i] * phi[i] + 2.0 * phi[i] * phi[j] + konst)
    });
    let depth = expansion_depth(zeta);
    let sh_d = (zeta >= 0.5).then(|| {
        Mat::from_fn(n, n, |i, j| {
            let o = phi[i] + phi[j];
            (3..depth as u32).map(|k| f(k) / factorial(k) * o.powi(k as i32)).sum()
        })
    });

    let gram = x.transpose() * x;
    let coef = -2.0 * f(1) / p;
    let mut k1 = Mat::from_fn(n, n, |i, j| {
        coef * gram[(i, j)] + sh0[(i, j)] + sh1[(i, j)] + sh2[(i, j)] + if i == j { varsigma } else { 0.0 }
    });
    if let Some(d) = &sh_d {
        k1 += d;
    }
    Ok(ShMatrices { phi, sh0, sh1, sh2, sh_d, k1, depth, tau, varsigma })
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `‖W − K₁‖`.
pub fn surrogate_error(w: MatRef<'_, f64>, sh: &ShMatrices) -> f64 {
    linalg::spectral_norm_diff(w, sh.k1.as_ref())
}
