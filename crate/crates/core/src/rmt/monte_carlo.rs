//! Monte-Carlo oracle for `μ₁⊠μ₂`: eigenvalues of `Σ₂UΣ₁Uᵀ` with Haar `U`.

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::measure::Measure;
use crate::error::{Error, Result};
use crate::model::{derive_seed, gaussian_matrix};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` moved into `Q`.
pub fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let r = qr.R();
    let mut q = qr.compute_Q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Sorted (descending) eigenvalues of `Σ₂UΣ₁Uᵀ` averaged over `trials`
/// Haar draws, with `Σ_k = diag(γ_{μ_k}(0), …, γ_{μ_k}(n−1))`.
pub fn mc_free_conv(mu1: &Measure, mu2: &Measure, n: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 10 {
        return Err(Error::Parameter(format!("Monte-Carlo oracle needs n ≥ 10, got {n}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let a = mu1.quantile_table(n)?[..n].to_vec();
    let b = mu2.quantile_table(n)?[..n].to_vec();
    mc_product_spectrum(&a, &b, trials, seed)
}

/// Averaged descending spectrum of `diag(b)·U·diag(a)·Uᵀ` for nonnegative `a`, `b`.
pub fn mc_product_spectrum(a: &[f64], b: &[f64], trials: usize, seed: u64) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Input("diagonals must have equal length".into()));
    }
    if a.iter().chain(b).any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter("diagonal entries must be nonnegative".into()));
    }
    let (sa, sb): (Vec<f64>, Vec<f64>) = (a.iter().map(|v| v.sqrt()).collect(), b.iter().map(|v| v.sqrt()).collect());
    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let u = haar_orthogonal(n, &mut rng);
            // C = Σ₂^{1/2} U Σ₁^{1/2}; the spectrum of CCᵀ is that of Σ₂UΣ₁Uᵀ.
            let c = Mat::<f64>::from_fn(n, n, |i, j| sb[i] * u[(i, j)] * sa[j]);
            let h = &c * c.transpose();
            let mut ev = h
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::numerical(format!("symmetric eigensolver failed: {e:?}")))?;
            ev.reverse();
            Ok(ev)
        })
        .collect();
    let mut mean = vec![0.0; n];
    for ev in per_trial {
        for (m, v) in mean.iter_mut().zip(ev?) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    Ok(mean)
}
