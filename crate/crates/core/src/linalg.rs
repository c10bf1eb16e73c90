//! Small dense helpers on top of `faer`.

use faer::{Mat, MatRef};

/// Spectral norm tolerance used throughout (relative change between sweeps).
pub const NORM_TOL: f64 = 1e-8;

/// Largest singular value by power iteration on `MᵀM`.
///
/// Iterates until the estimate changes by less than `NORM_TOL` relatively.
/// Falls back to a dense SVD when the iteration stalls (clustered top
/// singular values).
pub fn spectral_norm(m: MatRef<'_, f64>) -> f64 {
    let (r, c) = (m.nrows(), m.ncols());
    if r == 0 || c == 0 {
        return 0.0;
    }
    // Deterministic start vector with no special alignment.
    let mut v = Mat::<f64>::from_fn(c, 1, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin());
    normalize(&mut v);
    let mut est = 0.0;
    for _ in 0..3000 {
        let u = m * &v;
        let mut w = m.transpose() * &u;
        let s2 = col_norm(&w);
        if s2 == 0.0 {
            return 0.0;
        }
        let next = s2.sqrt();
        for i in 0..c {
            w[(i, 0)] /= s2;
        }
        v = w;
        if (next - est).abs() <= NORM_TOL * next {
            return next;
        }
        est = next;
    }
    m.singular_values()
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or(est)
}

/// Spectral norm of `a - b`.
pub fn spectral_norm_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let d = a - b;
    spectral_norm(d.as_ref())
}

/// Number of singular values above `rel_tol * σ₁`.
pub fn numerical_rank(m: MatRef<'_, f64>, rel_tol: f64) -> usize {
    let s = match m.singular_values() {
        Ok(s) => s,
        Err(_) => return m.nrows().min(m.ncols()),
    };
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Row sums of a square matrix.
pub fn row_sums(m: MatRef<'_, f64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).sum())
        .collect()
}

/// `diag(1/d) · m`, i.e. every row divided by the matching entry of `d`.
pub fn scale_rows(m: MatRef<'_, f64>, d: &[f64]) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / d[i])
}

/// `max_i |Σ_j m(i,j) − 1|`.
pub fn row_sum_defect(m: MatRef<'_, f64>) -> f64 {
    row_sums(m)
        .into_iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Median of a slice (NaN-free input assumed); `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

fn col_norm(v: &Mat<f64>) -> f64 {
    (0..v.nrows()).map(|i| v[(i, 0)] * v[(i, 0)]).sum::<f64>().sqrt()
}

fn normalize(v: &mut Mat<f64>) {
    let s = col_norm(v);
    for i in 0..v.nrows() {
        v[(i, 0)] /= s;
    }
}
