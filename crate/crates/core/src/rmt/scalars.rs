//! Scalar constants entering the limiting laws.

use serde::{Deserialize, Serialize};

use super::measure::{Measure, MpConvention};
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Kernel centres, isotropic shifts and MP scales for both sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScalars {
    pub upsilon: f64,
    pub c1: f64,
    pub c2: f64,
    /// `p_k / h_k`.
    pub r1: f64,
    pub r2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub varsigma1: f64,
    pub varsigma2: f64,
    pub varsigma1_h: f64,
    pub varsigma2_h: f64,
    pub eta: f64,
    pub eta1: f64,
    pub eta2: f64,
}

/// `τ = 2(σ²/p + 1)`.
pub fn tau(sigma2: f64, p: f64) -> f64 {
    2.0 * (sigma2 / p + 1.0)
}

/// `1 − 2υ'·e^{−υ'τ} − e^{−υ'τ}` with `υ' = υ·p/h`; `p/h = 1` gives `ς_k`.
pub fn varsigma(upsilon: f64, tau: f64, p_over_h: f64) -> f64 {
    let u = upsilon * p_over_h;
    let e = (-u * tau).exp();
    1.0 - 2.0 * u * e - e
}

/// `η = 2υ'·e^{−2υ'}` with `υ' = υ·p/h`.
pub fn eta(upsilon: f64, p_over_h: f64) -> f64 {
    let u = upsilon * p_over_h;
    2.0 * u * (-2.0 * u).exp()
}

impl ModelScalars {
    /// Scalars for bandwidths `h1`, `h2`; signal energy per sensor is `Σ n^ζ`.
    pub fn new(config: &ModelConfig, h1: f64, h2: f64) -> Result<Self> {
        if !(h1 > 0.0 && h2 > 0.0) {
            return Err(Error::Parameter(format!("bandwidths must be positive (got {h1}, {h2})")));
        }
        Ok(Self::from_parts(
            config.upsilon,
            [config.n as f64, config.p1 as f64, config.p2 as f64],
            [config.signal_energy(1), config.signal_energy(2)],
            [h1, h2],
        ))
    }

    /// Scalars from raw dimensions `[n, p1, p2]`, signal energies and bandwidths.
    pub fn from_parts(upsilon: f64, dims: [f64; 3], sigma2: [f64; 2], h: [f64; 2]) -> Self {
        let [n, p1, p2] = dims;
        let (r1, r2) = (p1 / h[0], p2 / h[1]);
        let (tau1, tau2) = (tau(sigma2[0], p1), tau(sigma2[1], p2));
        ModelScalars {
            upsilon,
            c1: n / p1,
            c2: n / p2,
            r1,
            r2,
            tau1,
            tau2,
            varsigma1: varsigma(upsilon, tau1, 1.0),
            varsigma2: varsigma(upsilon, tau2, 1.0),
            varsigma1_h: varsigma(upsilon, tau1, r1),
            varsigma2_h: varsigma(upsilon, tau2, r2),
            eta: eta(upsilon, 1.0),
            eta1: eta(upsilon, r1),
            eta2: eta(upsilon, r2),
        }
    }

    /// `ν̃_k = T_{ς_{k,h}} ν_{c_k, η_k}`.
    pub fn nu_tilde(&self, sensor: usize, convention: MpConvention) -> Result<Measure> {
        let (c, eta, shift) = if sensor == 1 {
            (self.c1, self.eta1, self.varsigma1_h)
        } else {
            (self.c2, self.eta2, self.varsigma2_h)
        };
        Ok(Measure::mp(c, eta, convention)?.shifted(shift))
    }

    /// Factor multiplying the ⊠ quantiles for `n²N`: `exp(2υ(p₁/h₁ + p₂/h₂))`.
    pub fn both_low_scale(&self) -> f64 {
        (2.0 * self.upsilon * (self.r1 + self.r2)).exp()
    }

    /// Factor `exp(2υp₂/h₂)` of the mixed regime.
    pub fn mixed_scale(&self) -> f64 {
        (2.0 * self.upsilon * self.r2).exp()
    }
}
