//! Free multiplicative convolution by subordination.
//!
//! For `z` in the upper half plane the pair `(Ω₁, Ω₂)` solves
//!
//! ```text
//! z·M₁(Ω₂) = z·M₂(Ω₁) = Ω₁·Ω₂
//! ```
//!
//! and `M_{μ₁⊠μ₂}(z) = M₁(Ω₂(z))`. The density is recovered from
//! `Im m(x + iδ)/π`, Richardson-extrapolated in `δ`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{GridDensity, Measure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Points in the coarse scan used to locate the support.
    pub scan_points: usize,
    /// Points in the final density grid between the detected edges.
    pub final_points: usize,
    /// Contour offset relative to the width of the product support.
    pub delta_rel: f64,
    pub damping: f64,
    pub max_fixed_point_iter: usize,
    pub residual_tol: f64,
    /// Fraction of unconverged points above which the solve fails.
    pub max_failure_fraction: f64,
    /// Support is where the density exceeds this fraction of its maximum.
    pub edge_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            scan_points: 2000,
            final_points: 4000,
            delta_rel: 1e-6,
            damping: 0.5,
            max_fixed_point_iter: 500,
            residual_tol: 1e-8,
            max_failure_fraction: 0.01,
            edge_threshold: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinationDiagnostics {
    pub points: usize,
    pub failed: usize,
    pub max_residual: f64,
    pub delta: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub atom_at_zero: f64,
    /// Residual at each node of the final grid.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionResult {
    /// `γ(j)` for `j = 1..=n`, nonincreasing.
    pub quantiles: Vec<f64>,
    /// The convolution as a grid measure.
    pub density: Measure,
    pub diagnostics: SubordinationDiagnostics,
}

/// Solution of the subordination system at one `z`.
#[derive(Debug, Clone, Copy)]
pub struct Subordination {
    pub omega1: C64,
    pub omega2: C64,
    pub residual: f64,
}

impl Subordination {
    /// Stieltjes transform of `μ₁⊠μ₂` at `z`.
    pub fn stieltjes(&self, mu1: &Measure, z: C64) -> C64 {
        let m = mu1.m_transform(self.omega2);
        m / (z * (1.0 - m))
    }
}

struct System<'a> {
    mu1: &'a Measure,
    mu2: &'a Measure,
    z: C64,
}

impl System<'_> {
    fn eval(&self, o1: C64, o2: C64) -> ([C64; 2], [[C64; 2]; 2]) {
        let (m1, dm1) = self.mu1.m_transform_with_derivative(o2);
        let (m2, dm2) = self.mu2.m_transform_with_derivative(o1);
        let p = o1 * o2;
        let f = [self.z * m1 - p, self.z * m2 - p];
        let j = [[-o2, self.z * dm1 - o1], [self.z * dm2 - o2, -o1]];
        (f, j)
    }

    fn residual(&self, o1: C64, o2: C64) -> f64 {
        let (f, _) = self.eval(o1, o2);
        f[0].norm().max(f[1].norm()) / (o1 * o2).norm().max(1.0)
    }

    fn newton(&self, mut o1: C64, mut o2: C64, iters: usize) -> (C64, C64, f64) {
        let mut res = self.residual(o1, o2);
        for _ in 0..iters {
            if res < 1e-14 || !res.is_finite() {
                break;
            }
            let (f, j) = self.eval(o1, o2);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.norm() == 0.0 || !det.is_finite() {
                break;
            }
            let d1 = -(f[0] * j[1][1] - j[0][1] * f[1]) / det;
            let d2 = -(j[0][0] * f[1] - j[1][0] * f[0]) / det;
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let (n1, n2) = (o1 + step * d1, o2 + step * d2);
                if n1.im > 0.0 && n2.im > 0.0 {
                    let r = self.residual(n1, n2);
                    if r < res {
                        o1 = n1;
                        o2 = n2;
                        res = r;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (o1, o2, res)
    }

    fn fixed_point(&self, mut o1: C64, mut o2: C64, opts: &SolverOptions) -> (C64, C64) {
        let b = opts.damping;
        for _ in 0..opts.max_fixed_point_iter {
            let n1 = self.z * self.mu1.m_transform(o2) / o2;
            let next1 = (1.0 - b) * o1 + b * n1;
            let n2 = self.z * self.mu2.m_transform(next1) / next1;
            let next2 = (1.0 - b) * o2 + b * n2;
            if !(next1.is_finite() && next2.is_finite()) {
                break;
            }
            let change = (next1 - o1).norm() + (next2 - o2).norm();
            o1 = next1;
            o2 = next2;
            if change < 1e-14 * (o1.norm() + o2.norm()) {
                break;
            }
        }
        (o1, o2)
    }

    fn solve_from(&self, o1: C64, o2: C64, opts: &SolverOptions) -> (C64, C64, f64) {
        let (a1, a2, ra) = self.newton(o1, o2, 40);
        if ra < opts.residual_tol * 1e-3 {
            return (a1, a2, ra);
        }
        let (f1, f2) = self.fixed_point(o1, o2, opts);
        let (b1, b2, rb) = self.newton(f1, f2, 60);
        if rb < ra {
            (b1, b2, rb)
        } else {
            (a1, a2, ra)
        }
    }
}

/// Solve the subordination system at the heights `etas` (descending) above `x`,
/// each level warm-started from the previous one.
fn continuation(mu1: &Measure, mu2: &Measure, x: f64, etas: &[f64], opts: &SolverOptions) -> Vec<(C64, Subordination)> {
    let (mean1, mean2) = (mu1.mean(), mu2.mean());
    let z0 = C64::new(x, etas[0]);
    let mut o1 = z0 / mean1;
    let mut o2 = z0 / mean2;
    etas.iter()
        .map(|&eta| {
            let z = C64::new(x, eta);
            let sys = System { mu1, mu2, z };
            let (a, b, r) = sys.solve_from(o1, o2, opts);
            o1 = a;
            o2 = b;
            (z, Subordination { omega1: a, omega2: b, residual: r })
        })
        .collect()
}

/// Subordination functions at a single point of the upper half plane.
pub fn subordination(mu1: &Measure, mu2: &Measure, z: C64, opts: &SolverOptions) -> Result<Subordination> {
    if !(z.im > 0.0) {
        return Err(Error::Parameter("subordination needs Im z > 0".into()));
    }
    let top = (10.0 * mu1.upper_edge() * mu2.upper_edge() + 1.0 + z.norm()).max(z.im);
    let mut etas = vec![top];
    while etas.last().unwrap() * 0.5 > z.im {
        let next = etas.last().unwrap() * 0.5;
        etas.push(next);
    }
    etas.push(z.im);
    let sol = continuation(mu1, mu2, z.re, &etas, opts);
    Ok(sol.last().unwrap().1)
}

struct DensityEval {
    density: f64,
    residual: f64,
}

fn density_at(mu1: &Measure, mu2: &Measure, x: f64, etas: &[f64], atom: f64, opts: &SolverOptions) -> DensityEval {
    let sol = continuation(mu1, mu2, x, etas, opts);
    let k = sol.len();
    let rho = |(z, s): &(C64, Subordination)| {
        let m = s.stieltjes(mu1, *z);
        let atom_part = (-atom / *z).im;
        (m.im - atom_part) / std::f64::consts::PI
    };
    let (rho_2d, rho_d) = (rho(&sol[k - 2]), rho(&sol[k - 1]));
    let residual = sol[k - 1].1.residual.max(sol[k - 2].1.residual);
    DensityEval { density: (2.0 * rho_d - rho_2d).max(0.0), residual }
}

/// `μ₁⊠μ₂` as a grid density, with `n` quantiles.
pub fn free_multiplicative_convolution(
    mu1: &Measure,
    mu2: &Measure,
    n: usize,
    opts: &SolverOptions,
) -> Result<ConvolutionResult> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    for mu in [mu1, mu2] {
        if mu.lower_edge() < 0.0 {
            return Err(Error::Parameter("free multiplicative convolution needs measures on [0, ∞)".into()));
        }
    }
    if let (Measure::Point { location: a }, Measure::Point { location: b }) = (mu1, mu2) {
        if *a == 0.0 && *b == 0.0 {
            return Err(Error::Parameter("both measures are point masses at 0".into()));
        }
        let loc = a * b;
        return Ok(ConvolutionResult {
            quantiles: vec![loc; n],
            density: Measure::point(loc),
            diagnostics: SubordinationDiagnostics {
                points: 0,
                failed: 0,
                max_residual: 0.0,
                delta: 0.0,
                lower_edge: loc,
                upper_edge: loc,
                atom_at_zero: if loc == 0.0 { 1.0 } else { 0.0 },
                residuals: vec![],
            },
        });
    }

    let atom = mu1.atom_at_zero().max(mu2.atom_at_zero());
    let (l1, h1) = mu1.support();
    let (l2, h2) = mu2.support();
    let lo_prod = l1.max(0.0) * l2.max(0.0);
    let hi_prod = h1 * h2;
    let width = hi_prod - lo_prod;
    let delta = opts.delta_rel * width;
    let top = 10.0 * hi_prod + 1.0;
    let mut etas = vec![];
    let mut e = delta;
    while e < top {
        etas.push(e);
        e *= 2.0;
    }
    etas.push(e);
    etas.reverse();

    let eval = |x: f64| density_at(mu1, mu2, x, &etas, atom, opts);

    let scan_lo = (0.5 * lo_prod).max(1e-9 * hi_prod);
    let scan_hi = 1.5 * hi_prod;
    let k = opts.scan_points.max(3);
    let xs: Vec<f64> = (0..k).map(|i| scan_lo + (scan_hi - scan_lo) * i as f64 / (k - 1) as f64).collect();
    let scan: Vec<DensityEval> = xs.par_iter().map(|&x| eval(x)).collect();
    let peak = scan.iter().map(|d| d.density).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Solver { failed: k, total: k, max_residual: f64::NAN });
    }
    let thr = opts.edge_threshold * peak;
    let first = scan.iter().position(|d| d.density > thr).unwrap();
    let last = scan.iter().rposition(|d| d.density > thr).unwrap();
    let inside = |x: f64| eval(x).density > thr;
    let bisect = |mut out: f64, mut inn: f64| {
        for _ in 0..50 {
            let mid = 0.5 * (out + inn);
            if inside(mid) {
                inn = mid;
            } else {
                out = mid;
            }
        }
        0.5 * (out + inn)
    };
    let lower = if first == 0 { xs[0] } else { bisect(xs[first - 1], xs[first]) };
    let upper = if last == k - 1 { xs[k - 1] } else { bisect(xs[last + 1], xs[last]) };

    let m = opts.final_points.max(2);
    let grid: Vec<f64> = (0..m).map(|i| lower + (upper - lower) * i as f64 / (m - 1) as f64).collect();
    let evals: Vec<DensityEval> = grid.par_iter().map(|&x| eval(x)).collect();

    let residuals: Vec<f64> = scan.iter().chain(&evals).map(|d| d.residual).collect();
    let failed = residuals.iter().filter(|&&r| !(r < opts.residual_tol)).count();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let total = residuals.len();
    if failed as f64 > opts.max_failure_fraction * total as f64 {
        return Err(Error::Solver { failed, total, max_residual });
    }
    let dens: Vec<f64> = evals.iter().map(|d| d.density).collect();
    let measure = Measure::Grid(GridDensity::new(grid, dens, atom)?);
    let quantiles = measure.quantiles(n)?;
    Ok(ConvolutionResult {
        quantiles,
        density: measure,
        diagnostics: SubordinationDiagnostics {
            points: total,
            failed,
            max_residual,
            delta,
            lower_edge: lower,
            upper_edge: upper,
            atom_at_zero: atom,
            residuals: evals.iter().map(|d| d.residual).collect(),
        },
    })
}
