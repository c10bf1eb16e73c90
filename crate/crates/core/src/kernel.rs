//! Affinity, transition and fused matrices, and their spectra.

use faer::{Mat, MatRef};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// `‖P·ᵢ − P·ⱼ‖²` for every column pair, with Kahan-compensated sums.
///
/// Each unordered pair is evaluated once, so the result is exactly symmetric.
pub fn pairwise_sq_dists(p: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (rows, n) = (p.nrows(), p.ncols());
    let cols: Vec<Vec<f64>> = (0..n).map(|j| (0..rows).map(|i| p[(i, j)]).collect()).collect();
    if cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("point cloud contains NaN or infinite entries".into()));
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &cols[i];
            ((i + 1)..n).map(|j| kahan_sq_dist(a, &cols[j])).collect()
        })
        .collect();
    let mut d = Mat::<f64>::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let j = i + 1 + k;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

fn kahan_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    // Four independent compensated lanes, merged with one more compensated pass.
    let mut sum = [0.0f64; 4];
    let mut comp = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            let t = a[4 * k + l] - b[4 * k + l];
            let term = t * t - comp[l];
            let next = sum[l] + term;
            comp[l] = (next - sum[l]) - term;
            sum[l] = next;
        }
    }
    let mut total = 0.0;
    let mut c = 0.0;
    let tail = (4 * chunks..a.len()).map(|i| (a[i] - b[i]) * (a[i] - b[i]));
    for v in sum.iter().zip(&comp).map(|(s, c)| s - c).chain(tail) {
        let term = v - c;
        let next = total + term;
        c = (next - total) - term;
        total = next;
    }
    total
}

/// Gaussian affinity `exp(−υ·d/h)` with unit diagonal.
pub fn affinity(sq_dists: MatRef<'_, f64>, h: f64, upsilon: f64) -> Result<Mat<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {h}")));
    }
    if !(upsilon > 0.0 && upsilon.is_finite()) {
        return Err(Error::Parameter(format!("upsilon must be positive, got {upsilon}")));
    }
    let n = sq_dists.nrows();
    Ok(Mat::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (-upsilon * sq_dists[(i, j)] / h).exp()
        }
    }))
}

/// Degree vector and row-normalised transition matrix `D⁻¹W`.
pub fn transition(w: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let d = linalg::row_sums(w);
    if let Some(i) = d.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::numerical(format!("degree {i} is {}", d[i])));
    }
    let a = linalg::scale_rows(w, &d);
    Ok((d, a))
}

/// Everything derived from the two affinities.
#[derive(Debug, Clone)]
pub struct KernelStack {
    pub w1: Mat<f64>,
    pub w2: Mat<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub a1: Mat<f64>,
    pub a2: Mat<f64>,
    /// NCCA matrix `A₁A₂ᵀ`.
    pub n: Mat<f64>,
    /// Alternating-diffusion matrix `A₁A₂`.
    pub a_fused: Mat<f64>,
    pub h1: f64,
    pub h2: f64,
}

/// Normalise both affinities and form the NCCA and AD products.
pub fn fuse(w1: Mat<f64>, w2: Mat<f64>, h1: f64, h2: f64) -> Result<KernelStack> {
    if w1.nrows() != w2.nrows() || w1.nrows() != w1.ncols() || w2.nrows() != w2.ncols() {
        return Err(Error::Input("affinities must be square and of equal size".into()));
    }
    let (d1, a1) = transition(w1.as_ref())?;
    let (d2, a2) = transition(w2.as_ref())?;
    let n = &a1 * a2.transpose();
    let a_fused = &a1 * &a2;
    Ok(KernelStack { w1, w2, d1, d2, a1, a2, n, a_fused, h1, h2 })
}

/// Build the stack straight from two point clouds.
pub fn kernel_stack(x: MatRef<'_, f64>, y: MatRef<'_, f64>, h1: f64, h2: f64, upsilon: f64) -> Result<KernelStack> {
    let w1 = affinity(pairwise_sq_dists(x)?.as_ref(), h1, upsilon)?;
    let w2 = affinity(pairwise_sq_dists(y)?.as_ref(), h2, upsilon)?;
    fuse(w1, w2, h1, h2)
}

/// Multiplier applied to a matrix before extracting its spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    One,
    N,
    #[serde(rename = "n2")]
    NSquared,
}

impl Scale {
    pub fn factor(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Scale::One => 1.0,
            Scale::N => n,
            Scale::NSquared => n * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Real parts, descending.
    pub eigen_real: Vec<f64>,
    /// Largest imaginary part magnitude among all eigenvalues.
    pub eigen_imag_max: f64,
    /// Singular values, descending.
    pub singular: Vec<f64>,
    pub scale_applied: Scale,
}

/// Eigenvalues (sorted by descending real part) and singular values of `scale·M`.
pub fn spectrum(m: MatRef<'_, f64>, scale: Scale) -> Result<SpectrumResult> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Input("spectrum needs a square matrix".into()));
    }
    if (0..n).any(|j| m.col(j).iter().any(|v| !v.is_finite())) {
        return Err(Error::Input("matrix contains NaN or infinite entries".into()));
    }
    let f = scale.factor(n);
    let singular: Vec<f64> = m
        .singular_values()
        .map_err(|e| Error::numerical(format!("SVD failed: {e:?}")))?
        .into_iter()
        .map(|s| f * s)
        .collect();
    let eig = m.eigenvalues().map_err(|e| Error::Numerical {
        message: format!("eigensolver failed: {e:?}"),
        partial_singular_values: Some(singular.clone()),
    })?;
    let mut re: Vec<f64> = eig.iter().map(|z| f * z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    let imag_max = eig.iter().map(|z| (f * z.im).abs()).fold(0.0, f64::max);
    let radius = eig.iter().map(|z| f * z.norm()).fold(0.0, f64::max);
    if imag_max > 1e-6 * radius {
        warn!("non-real spectrum: max |Im λ| = {imag_max:.3e}, spectral radius {radius:.3e}");
    }
    Ok(SpectrumResult { eigen_real: re, eigen_imag_max: imag_max, singular, scale_applied: scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rand_mat(r: usize, c: usize, seed: u64) -> Mat<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        crate::model::gaussian_matrix(&mut rng, r, c)
    }

    #[test]
    fn identical_columns_have_zero_distance() {
        let p = Mat::<f64>::from_fn(3, 2, |i, _| i as f64);
        assert_eq!(pairwise_sq_dists(p.as_ref()).unwrap()[(0, 1)], 0.0);
    }

    #[test]
    fn three_four_five() {
        let p = Mat::<f64>::from_fn(2, 2, |i, j| if j == 0 { 0.0 } else { [3.0, 4.0][i] });
        assert_eq!(pairwise_sq_dists(p.as_ref()).unwrap()[(0, 1)], 25.0);
    }

    #[test]
    fn distances_match_double_loop() {
        let p = rand_mat(5, 6, 1);
        let d = pairwise_sq_dists(p.as_ref()).unwrap();
        for i in 0..6 {
            assert_eq!(d[(i, i)], 0.0);
            for j in 0..6 {
                let mut s = 0.0;
                for k in 0..5 {
                    s += (p[(k, i)] - p[(k, j)]).powi(2);
                }
                assert_relative_eq!(d[(i, j)], s, max_relative = 1e-12);
                assert_eq!(d[(i, j)], d[(j, i)]);
            }
        }
    }

    #[test]
    fn nan_input_rejected() {
        let mut p = rand_mat(3, 4, 2);
        p[(1, 2)] = f64::NAN;
        assert!(matches!(pairwise_sq_dists(p.as_ref()), Err(Error::Input(_))));
    }

    #[test]
    fn affinity_values() {
        let d = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { 0.0 } else { 2.0 });
        let w = affinity(d.as_ref(), 2.0, 1.0).unwrap();
        assert_eq!(w[(0, 0)], 1.0);
        assert_relative_eq!(w[(0, 1)], 0.367879441171442, max_relative = 1e-12);
        assert!(matches!(affinity(d.as_ref(), 0.0, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(affinity(d.as_ref(), -1.0, 1.0), Err(Error::Parameter(_))));
    }

    /// Points 0, 1, 2 on a line: squared distances 1, 4, 1.
    fn three_point_affinity() -> Mat<f64> {
        let p = Mat::<f64>::from_fn(1, 3, |_, j| j as f64);
        affinity(pairwise_sq_dists(p.as_ref()).unwrap().as_ref(), 2.0, 1.0).unwrap()
    }

    #[test]
    fn three_point_hand_case() {
        let w = three_point_affinity();
        assert_relative_eq!(w[(0, 1)], (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(w[(0, 2)], (-2.0f64).exp(), max_relative = 1e-14);

        let w2 = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.25 });
        let k = fuse(w.clone(), w2.clone(), 2.0, 1.0).unwrap();
        let (a, b) = ((-0.5f64).exp(), (-2.0f64).exp());
        let a1 = [[1.0, a, b], [a, 1.0, a], [b, a, 1.0]].map(|r| {
            let s: f64 = r.iter().sum();
            r.map(|v| v / s)
        });
        let a2 = |i: usize, j: usize| if i == j { 1.0 / 1.5 } else { 0.25 / 1.5 };
        for (i, row) in a1.iter().enumerate() {
            for j in 0..3 {
                let nij: f64 = (0..3).map(|l| row[l] * a2(j, l)).sum();
                assert_relative_eq!(k.n[(i, j)], nij, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identical_points_give_rank_one() {
        let w = Mat::<f64>::from_fn(5, 5, |_, _| 1.0);
        let k = fuse(w.clone(), w, 1.0, 1.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(k.n[(i, j)], 0.2, epsilon = 1e-15);
            }
        }
        let s = spectrum(k.n.as_ref(), Scale::One).unwrap();
        assert_relative_eq!(s.eigen_real[0], 1.0, epsilon = 1e-12);
        assert!(s.eigen_real[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identity_second_factor_returns_first_transition() {
        let w1 = three_point_affinity();
        let k = fuse(w1, Mat::identity(3, 3), 1.0, 1.0).unwrap();
        assert_eq!(k.n, k.a1);
    }

    #[test]
    fn ad_matrix_is_stochastic_with_top_eigenvalue_one() {
        let x = rand_mat(30, 20, 3);
        let y = rand_mat(40, 20, 4);
        let k = kernel_stack(x.as_ref(), y.as_ref(), 30.0, 40.0, 1.0).unwrap();
        assert!(linalg::row_sum_defect(k.a_fused.as_ref()) < 1e-10);
        assert!(linalg::row_sum_defect(k.a1.as_ref()) < 1e-10);
        let s = spectrum(k.a_fused.as_ref(), Scale::One).unwrap();
        assert_relative_eq!(s.eigen_real[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn spectrum_of_identity_and_scaling() {
        let s = spectrum(Mat::<f64>::identity(4, 4).as_ref(), Scale::One).unwrap();
        assert!(s.eigen_real.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let s = spectrum(Mat::<f64>::identity(4, 4).as_ref(), Scale::NSquared).unwrap();
        assert!(s.eigen_real.iter().all(|&v| (v - 16.0).abs() < 1e-12));
        assert_eq!(s.scale_applied, Scale::NSquared);
    }

    #[test]
    fn spectrum_is_sorted() {
        let m = rand_mat(12, 12, 8);
        let s = spectrum(m.as_ref(), Scale::One).unwrap();
        assert!(s.eigen_real.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.singular.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.eigen_imag_max > 0.0);
    }
}
