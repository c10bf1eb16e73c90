//! Spiked common-signal generator.
//!
//! Both sensors observe the same latent draw through their own spike
//! strengths: `X = U_x + Z` (p₁×n) and `Y = U_y + W` (p₂×n), with signal
//! variance `σ² = n^ζ` per spike and unit-covariance noise.

use std::fs;
use std::path::Path;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Independent ±1 entries.
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// `d` independent Gaussian spikes shared by both sensors.
    #[default]
    GaussianSpike,
    /// A circle `σ(cos θ, sin θ)` embedded in the first two coordinates.
    Circle,
}

fn default_gamma() -> f64 {
    0.05
}

fn default_upsilon() -> f64 {
    1.0
}

/// Full description of one synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    #[serde(default)]
    pub d1: usize,
    #[serde(default)]
    pub d2: usize,
    /// One SNR exponent per spike of sensor 1 (a single entry for circles).
    #[serde(default)]
    pub zeta1: Vec<f64>,
    #[serde(default)]
    pub zeta2: Vec<f64>,
    #[serde(default = "default_upsilon")]
    pub upsilon: f64,
    #[serde(default)]
    pub noise_kind: NoiseKind,
    #[serde(default)]
    pub signal_kind: SignalKind,
    /// Admissible aspect-ratio band: `n/p_k ∈ [γ, 1/γ]`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Amplitude `a` of the reparametrisation `θ ↦ θ + a·sin θ` applied to
    /// the second sensor's circle. Zero means the identity bijection.
    #[serde(default)]
    pub phi_warp: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    /// Single-spike configuration with equal exponents list lengths of one.
    pub fn single_spike(n: usize, p1: usize, p2: usize, zeta1: f64, zeta2: f64, seed: u64) -> Self {
        ModelConfig {
            n,
            p1,
            p2,
            d1: 1,
            d2: 1,
            zeta1: vec![zeta1],
            zeta2: vec![zeta2],
            upsilon: 1.0,
            noise_kind: NoiseKind::Gaussian,
            signal_kind: SignalKind::GaussianSpike,
            gamma: default_gamma(),
            phi_warp: 0.0,
            seed,
        }
    }

    /// Pure-noise configuration (no spikes).
    pub fn pure_noise(n: usize, p1: usize, p2: usize, seed: u64) -> Self {
        ModelConfig {
            d1: 0,
            d2: 0,
            zeta1: vec![],
            zeta2: vec![],
            ..Self::single_spike(n, p1, p2, 0.0, 0.0, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n < 2 || self.p1 < 2 || self.p2 < 2 {
            return cfg(format!("n, p1, p2 must be ≥ 2 (got {}, {}, {})", self.n, self.p1, self.p2));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return cfg(format!("gamma must lie in (0,1), got {}", self.gamma));
        }
        for (k, p) in [(1, self.p1), (2, self.p2)] {
            let c = self.n as f64 / p as f64;
            if c < self.gamma || c > 1.0 / self.gamma {
                return cfg(format!(
                    "n/p{k} = {c:.4} outside [{:.4}, {:.4}]",
                    self.gamma,
                    1.0 / self.gamma
                ));
            }
        }
        if !(self.upsilon > 0.0 && self.upsilon.is_finite()) {
            return cfg(format!("upsilon must be positive, got {}", self.upsilon));
        }
        if !self.phi_warp.is_finite() {
            return cfg("phi_warp must be finite".into());
        }
        for (k, zetas, d, p) in [(1, &self.zeta1, self.d1, self.p1), (2, &self.zeta2, self.d2, self.p2)] {
            if zetas.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
                return cfg(format!("zeta{k} entries must be finite and ≥ 0"));
            }
            match self.signal_kind {
                SignalKind::GaussianSpike => {
                    if zetas.len() != d {
                        return cfg(format!("zeta{k} has {} entries but d{k} = {d}", zetas.len()));
                    }
                    if d > p {
                        return cfg(format!("d{k} = {d} exceeds p{k} = {p}"));
                    }
                }
                SignalKind::Circle => {
                    if zetas.len() != 1 {
                        return cfg(format!("circle signal needs exactly one zeta{k} entry"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Signal dimension actually populated for sensor `k` (circles use two rows).
    pub fn effective_d(&self, sensor: usize) -> usize {
        match self.signal_kind {
            SignalKind::Circle => 2,
            SignalKind::GaussianSpike => {
                if sensor == 1 {
                    self.d1
                } else {
                    self.d2
                }
            }
        }
    }

    /// Largest SNR exponent of a sensor (0 without spikes).
    pub fn zeta_max(&self, sensor: usize) -> f64 {
        let z = if sensor == 1 { &self.zeta1 } else { &self.zeta2 };
        z.iter().copied().fold(0.0, f64::max)
    }

    /// Total signal energy `Σ n^ζ` of a sensor, i.e. `‖u_i‖²` in expectation.
    pub fn signal_energy(&self, sensor: usize) -> f64 {
        let z = if sensor == 1 { &self.zeta1 } else { &self.zeta2 };
        z.iter().map(|&zeta| snr_sigma(self.n, zeta)).sum()
    }

    pub fn p(&self, sensor: usize) -> usize {
        if sensor == 1 {
            self.p1
        } else {
            self.p2
        }
    }

    /// Aspect ratio `c_k = n / p_k`.
    pub fn c(&self, sensor: usize) -> f64 {
        self.n as f64 / self.p(sensor) as f64
    }
}

/// Signal variance `n^ζ`.
pub fn snr_sigma(n: usize, zeta: f64) -> f64 {
    (n as f64).powf(zeta)
}

/// Per-trial seed derived from a root seed with a splitmix64 step.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two aligned noisy point clouds with their clean and noise parts.
#[derive(Debug, Clone)]
pub struct PointCloudPair {
    pub x: Mat<f64>,
    pub y: Mat<f64>,
    pub u_x: Mat<f64>,
    pub u_y: Mat<f64>,
    pub z: Mat<f64>,
    pub w_noise: Mat<f64>,
}

impl PointCloudPair {
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// Noisy data of sensor `k` (1 or 2).
    pub fn data(&self, sensor: usize) -> &Mat<f64> {
        if sensor == 1 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn signal(&self, sensor: usize) -> &Mat<f64> {
        if sensor == 1 {
            &self.u_x
        } else {
            &self.u_y
        }
    }

    pub fn noise(&self, sensor: usize) -> &Mat<f64> {
        if sensor == 1 {
            &self.z
        } else {
            &self.w_noise
        }
    }

    /// Exchange the roles of the two sensors.
    pub fn swapped(self) -> Self {
        PointCloudPair {
            x: self.y,
            y: self.x,
            u_x: self.u_y,
            u_y: self.u_x,
            z: self.w_noise,
            w_noise: self.z,
        }
    }
}

/// Draw a point-cloud pair. Deterministic for a fixed `config.seed`.
///
/// Draw order: latent signal, then `Z` column by column, then `W`.
pub fn generate(config: &ModelConfig) -> Result<PointCloudPair> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut u_x = Mat::<f64>::zeros(config.p1, n);
    let mut u_y = Mat::<f64>::zeros(config.p2, n);
    match config.signal_kind {
        SignalKind::GaussianSpike => {
            let d = config.d1.max(config.d2);
            let latent = Mat::<f64>::from_fn(d, n, |_, _| rng.sample(StandardNormal));
            for (r, &zeta) in config.zeta1.iter().enumerate() {
                let s = snr_sigma(n, zeta).sqrt();
                for i in 0..n {
                    u_x[(r, i)] = s * latent[(r, i)];
                }
            }
            for (r, &zeta) in config.zeta2.iter().enumerate() {
                let s = snr_sigma(n, zeta).sqrt();
                for i in 0..n {
                    u_y[(r, i)] = s * latent[(r, i)];
                }
            }
        }
        SignalKind::Circle => {
            let s1 = snr_sigma(n, config.zeta1[0]).sqrt();
            let s2 = snr_sigma(n, config.zeta2[0]).sqrt();
            let a = config.phi_warp;
            for i in 0..n {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let phi = theta + a * theta.sin();
                u_x[(0, i)] = s1 * theta.cos();
                u_x[(1, i)] = s1 * theta.sin();
                u_y[(0, i)] = s2 * phi.cos();
                u_y[(1, i)] = s2 * phi.sin();
            }
        }
    }

    let z = draw_noise(&mut rng, config.p1, n, config.noise_kind);
    let w_noise = draw_noise(&mut rng, config.p2, n, config.noise_kind);
    let x = &u_x + &z;
    let y = &u_y + &w_noise;
    Ok(PointCloudPair { x, y, u_x, u_y, z, w_noise })
}

fn draw_noise(rng: &mut ChaCha8Rng, p: usize, n: usize, kind: NoiseKind) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(p, n);
    for j in 0..n {
        for i in 0..p {
            m[(i, j)] = match kind {
                NoiseKind::Gaussian => rng.sample(StandardNormal),
                NoiseKind::Rademacher => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
        }
    }
    m
}

/// Standard normal sample helper for other modules.
pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpManifest {
    format: String,
    seed: u64,
    config: ModelConfig,
    matrices: Vec<DumpEntry>,
}

const DUMP_NAMES: [&str; 6] = ["X", "Y", "U_x", "U_y", "Z", "W_noise"];

/// Write the pair as raw little-endian f64 column-major files plus `manifest.json`.
/// Returns the paths written.
pub fn dump(pair: &PointCloudPair, config: &ModelConfig, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir)?;
    let mats = [&pair.x, &pair.y, &pair.u_x, &pair.u_y, &pair.z, &pair.w_noise];
    let mut entries = Vec::new();
    let mut written = Vec::new();
    for (name, m) in DUMP_NAMES.iter().zip(mats) {
        let file = format!("{name}.f64");
        let mut bytes = Vec::with_capacity(m.nrows() * m.ncols() * 8);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        let path = dir.join(&file);
        fs::write(&path, bytes)?;
        written.push(path);
        entries.push(DumpEntry { name: name.to_string(), file, rows: m.nrows(), cols: m.ncols() });
    }
    let manifest = DumpManifest {
        format: "f64-le-colmajor".into(),
        seed: config.seed,
        config: config.clone(),
        matrices: entries,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    written.push(path);
    Ok(written)
}

/// Read a pair written by [`dump`].
pub fn load(dir: &Path) -> Result<(PointCloudPair, ModelConfig)> {
    let manifest: DumpManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut mats = Vec::new();
    for name in DUMP_NAMES {
        let e = manifest
            .matrices
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Input(format!("manifest lacks matrix {name}")))?;
        let bytes = fs::read(dir.join(&e.file))?;
        if bytes.len() != e.rows * e.cols * 8 {
            return Err(Error::Input(format!(
                "{}: expected {} bytes, found {}",
                e.file,
                e.rows * e.cols * 8,
                bytes.len()
            )));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        mats.push(Mat::from_fn(e.rows, e.cols, |i, j| vals[j * e.rows + i]));
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().expect("six matrices");
    let pair = PointCloudPair {
        x: next(),
        y: next(),
        u_x: next(),
        u_y: next(),
        z: next(),
        w_noise: next(),
    };
    Ok((pair, manifest.config))
}
