//! Probability measures on the nonnegative reals.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which edge/atom formulas to use for the Marchenko–Pastur law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MpConvention {
    /// Limit of the spectrum of `(s²/p)ZᵀZ` for `n/p → c`: edges
    /// `s²(1 ± √c)²`, atom `(1 − 1/c)₊` at zero. Closed-form transforms.
    #[default]
    Gram,
    /// Edges `(1 ± s²√c)²`, atom `(1 − c)₊`, density renormalised on a grid.
    Verbatim,
}

/// Piecewise-linear density on sorted nodes plus an optional atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub atom_at_zero: f64,
}

impl GridDensity {
    /// Validates and renormalises the continuous part to mass `1 − atom`.
    pub fn new(x: Vec<f64>, density: Vec<f64>, atom_at_zero: f64) -> Result<Self> {
        if x.len() < 2 || x.len() != density.len() {
            return Err(Error::Input("grid needs ≥ 2 nodes and matching density samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("grid nodes must be finite and strictly increasing".into()));
        }
        if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("grid density must be finite and nonnegative".into()));
        }
        if !(0.0..1.0).contains(&atom_at_zero) {
            return Err(Error::Input(format!("atom mass {atom_at_zero} outside [0,1)")));
        }
        let mut g = GridDensity { x, density, atom_at_zero };
        let mass = g.continuous_mass();
        if !(mass > 0.0) {
            return Err(Error::Input("grid density has zero mass".into()));
        }
        let f = (1.0 - atom_at_zero) / mass;
        g.density.iter_mut().for_each(|v| *v *= f);
        Ok(g)
    }

    fn continuous_mass(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    /// Continuous mass to the left of each node.
    fn cumulative(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for k in 0..self.x.len() - 1 {
            acc += 0.5 * (self.density[k] + self.density[k + 1]) * (self.x[k + 1] - self.x[k]);
            cum.push(acc);
        }
        cum
    }

    fn interp(&self, t: f64) -> f64 {
        let k = self.x.partition_point(|&v| v <= t);
        if k == 0 || k == self.x.len() {
            return if t == *self.x.last().unwrap() { *self.density.last().unwrap() } else { 0.0 };
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        self.density[k - 1] * (1.0 - w) + self.density[k] * w
    }

    fn cdf(&self, t: f64) -> f64 {
        let atom = if t >= 0.0 { self.atom_at_zero } else { 0.0 };
        let k = self.x.partition_point(|&v| v <= t);
        if k == 0 {
            return atom;
        }
        let cum = self.cumulative();
        if k == self.x.len() {
            return atom + cum[k - 1];
        }
        let r = t - self.x[k - 1];
        let rho = self.density[k - 1];
        let s = (self.density[k] - rho) / (self.x[k] - self.x[k - 1]);
        atom + cum[k - 1] + rho * r + 0.5 * s * r * r
    }

    /// Inverse CDF for all `targets` using one cumulative table.
    fn inverse_cdf(&self, targets: &[f64]) -> Vec<f64> {
        let cum = self.cumulative();
        targets
            .iter()
            .map(|&target| {
                if self.atom_at_zero > 0.0 && target <= self.atom_at_zero {
                    return 0.0;
                }
                let r_total = target - self.atom_at_zero;
                let k = cum[1..].partition_point(|&c| c < r_total).min(self.x.len() - 2);
                let r = (r_total - cum[k]).max(0.0);
                let rho = self.density[k];
                let h = self.x[k + 1] - self.x[k];
                let s = (self.density[k + 1] - rho) / h;
                let disc = (rho * rho + 2.0 * s * r).max(0.0);
                let denom = rho + disc.sqrt();
                let t = if denom > 0.0 { (2.0 * r / denom).min(h) } else { 0.0 };
                self.x[k] + t
            })
            .collect()
    }

    fn stieltjes(&self, z: C64) -> (C64, C64) {
        let mut m = C64::new(0.0, 0.0);
        let mut dm = C64::new(0.0, 0.0);
        for k in 0..self.x.len() - 1 {
            let (x0, x1) = (self.x[k], self.x[k + 1]);
            let h = x1 - x0;
            let s = (self.density[k + 1] - self.density[k]) / h;
            let rho_z = self.density[k] + s * (z - x0);
            let (a, b) = (C64::new(x0, 0.0) - z, C64::new(x1, 0.0) - z);
            let log_ratio = b.ln() - a.ln();
            m += rho_z * log_ratio + s * h;
            dm += s * log_ratio + rho_z * (a.inv() - b.inv());
        }
        if self.atom_at_zero > 0.0 {
            m -= self.atom_at_zero / z;
            dm += self.atom_at_zero / (z * z);
        }
        (m, dm)
    }

    fn mean(&self) -> f64 {
        (0..self.x.len() - 1)
            .map(|k| {
                let (x0, x1) = (self.x[k], self.x[k + 1]);
                let (r0, r1) = (self.density[k], self.density[k + 1]);
                let xm = 0.5 * (x0 + x1);
                let rm = 0.5 * (r0 + r1);
                (x1 - x0) / 6.0 * (x0 * r0 + 4.0 * xm * rm + x1 * r1)
            })
            .sum()
    }
}

/// A probability measure with transform, CDF and quantile support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    /// Marchenko–Pastur law `ν_{c,s²}` (Gram convention).
    Mp { c: f64, s2: f64 },
    /// Translate of `base` by `a`.
    Shifted { base: Box<Measure>, a: f64 },
    /// Push-forward of `base` under `x ↦ factor·x`.
    Scaled { base: Box<Measure>, factor: f64 },
    Point { location: f64 },
    Grid(GridDensity),
}

// Four-point Gauss–Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
const MP_PANELS: usize = 256;

impl Measure {
    /// MP law under the chosen convention.
    pub fn mp(c: f64, s2: f64, convention: MpConvention) -> Result<Measure> {
        if !(c > 0.0 && c.is_finite() && s2 > 0.0 && s2.is_finite()) {
            return Err(Error::Parameter(format!("MP law needs c > 0 and s² > 0 (got {c}, {s2})")));
        }
        match convention {
            MpConvention::Gram => Ok(Measure::Mp { c, s2 }),
            MpConvention::Verbatim => {
                let (a, b) = ((1.0 - s2 * c.sqrt()).powi(2), (1.0 + s2 * c.sqrt()).powi(2));
                let atom = (1.0 - c).max(0.0);
                let k = 4000;
                let x: Vec<f64> = (0..=k)
                    .map(|i| a + (b - a) * (1.0 - (PI * i as f64 / k as f64).cos()) / 2.0)
                    .collect();
                let mut dens: Vec<f64> = x
                    .iter()
                    .map(|&t| ((b - t) * (t - a)).max(0.0).sqrt() / (2.0 * PI * s2 * c * t))
                    .collect();
                if !dens[0].is_finite() {
                    dens[0] = dens[1];
                }
                // Collapse duplicate nodes produced by the cosine map in floating point.
                let mut xs = Vec::with_capacity(x.len());
                let mut ds = Vec::with_capacity(x.len());
                for (t, d) in x.into_iter().zip(dens) {
                    if xs.last().is_none_or(|&l: &f64| t > l) {
                        xs.push(t);
                        ds.push(d);
                    }
                }
                Ok(Measure::Grid(GridDensity::new(xs, ds, atom)?))
            }
        }
    }

    pub fn point(location: f64) -> Measure {
        Measure::Point { location }
    }

    pub fn shifted(self, a: f64) -> Measure {
        Measure::Shifted { base: Box::new(self), a }
    }

    pub fn scaled(self, factor: f64) -> Measure {
        Measure::Scaled { base: Box::new(self), factor }
    }

    /// Edges of the continuous part (the location itself for a point mass).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Measure::Mp { c, s2 } => (s2 * (1.0 - c.sqrt()).powi(2), s2 * (1.0 + c.sqrt()).powi(2)),
            Measure::Shifted { base, a } => {
                let (l, h) = base.support();
                (l + a, h + a)
            }
            Measure::Scaled { base, factor } => {
                let (l, h) = base.support();
                (l * factor, h * factor)
            }
            Measure::Point { location } => (*location, *location),
            Measure::Grid(g) => (g.x[0], *g.x.last().unwrap()),
        }
    }

    /// Point masses as `(location, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Measure::Mp { c, .. } => {
                let w = (1.0 - 1.0 / c).max(0.0);
                if w > 0.0 {
                    vec![(0.0, w)]
                } else {
                    vec![]
                }
            }
            Measure::Shifted { base, a } => base.atoms().into_iter().map(|(l, w)| (l + a, w)).collect(),
            Measure::Scaled { base, factor } => base.atoms().into_iter().map(|(l, w)| (l * factor, w)).collect(),
            Measure::Point { location } => vec![(*location, 1.0)],
            Measure::Grid(g) if g.atom_at_zero > 0.0 => vec![(0.0, g.atom_at_zero)],
            Measure::Grid(_) => vec![],
        }
    }

    pub fn atom_at_zero(&self) -> f64 {
        self.atoms().into_iter().filter(|&(l, _)| l == 0.0).map(|(_, w)| w).sum()
    }

    /// Smallest point of the support, atoms included.
    pub fn lower_edge(&self) -> f64 {
        self.atoms().into_iter().map(|(l, _)| l).fold(self.support().0, f64::min)
    }

    pub fn upper_edge(&self) -> f64 {
        self.atoms().into_iter().map(|(l, _)| l).fold(self.support().1, f64::max)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Measure::Mp { s2, .. } => *s2,
            Measure::Shifted { base, a } => base.mean() + a,
            Measure::Scaled { base, factor } => base.mean() * factor,
            Measure::Point { location } => *location,
            Measure::Grid(g) => g.mean(),
        }
    }

    /// Density of the continuous part.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Measure::Mp { c, s2 } => {
                let (a, b) = self.support();
                if x <= a || x >= b || x <= 0.0 {
                    0.0
                } else {
                    ((b - x) * (x - a)).sqrt() / (2.0 * PI * s2 * c * x)
                }
            }
            Measure::Shifted { base, a } => base.density(x - a),
            Measure::Scaled { base, factor } => base.density(x / factor) / factor,
            Measure::Point { .. } => 0.0,
            Measure::Grid(g) => g.interp(x),
        }
    }

    /// `μ((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure::Mp { c, s2 } => {
                let atom = if x >= 0.0 { (1.0 - 1.0 / c).max(0.0) } else { 0.0 };
                let (a, b) = self.support();
                if x <= a {
                    return atom;
                }
                if x >= b {
                    return 1.0;
                }
                let t_end = (1.0 - 2.0 * (x - a) / (b - a)).clamp(-1.0, 1.0).acos();
                atom + mp_cdf_angle(a, b, *c, *s2, t_end)
            }
            Measure::Shifted { base, a } => base.cdf(x - a),
            Measure::Scaled { base, factor } => base.cdf(x / factor),
            Measure::Point { location } => {
                if x >= *location {
                    1.0
                } else {
                    0.0
                }
            }
            Measure::Grid(g) => g.cdf(x),
        }
    }

    /// Stieltjes transform `m(z) = ∫ dμ(x)/(x − z)` and its derivative.
    pub fn stieltjes_with_derivative(&self, z: C64) -> (C64, C64) {
        match self {
            Measure::Mp { c, s2 } => {
                let (a, b) = self.support();
                let k = c * s2;
                let lin = z - s2 * (1.0 - c);
                let root = (z - a).sqrt() * (z - b).sqrt();
                let m = (-lin + root) / (2.0 * k * z);
                let dm = -(k * m * m + m) / (2.0 * k * z * m + lin);
                (m, dm)
            }
            Measure::Shifted { base, a } => base.stieltjes_with_derivative(z - a),
            Measure::Scaled { base, factor } => {
                let (m, dm) = base.stieltjes_with_derivative(z / factor);
                (m / factor, dm / (factor * factor))
            }
            Measure::Point { location } => {
                let r = (C64::new(*location, 0.0) - z).inv();
                (r, r * r)
            }
            Measure::Grid(g) => g.stieltjes(z),
        }
    }

    pub fn stieltjes(&self, z: C64) -> C64 {
        self.stieltjes_with_derivative(z).0
    }

    /// `M(z) = z·m(z) / (1 + z·m(z))` and `M'(z)`.
    pub fn m_transform_with_derivative(&self, z: C64) -> (C64, C64) {
        let (m, dm) = self.stieltjes_with_derivative(z);
        let zm = z * m;
        let den = 1.0 + zm;
        (zm / den, (m + z * dm) / (den * den))
    }

    pub fn m_transform(&self, z: C64) -> C64 {
        self.m_transform_with_derivative(z).0
    }

    /// Upper-tail quantile `γ(j) = inf{x : μ((−∞, x]) ≥ 1 − j/n}`, `0 ≤ j ≤ n`.
    ///
    /// `γ(0)` is the upper edge and `γ(n)` the lower edge.
    pub fn quantile(&self, j: usize, n: usize) -> Result<f64> {
        Ok(self.quantile_table_range(&[j], n)?[0])
    }

    /// `[γ(0), γ(1), …, γ(n)]`.
    pub fn quantile_table(&self, n: usize) -> Result<Vec<f64>> {
        let js: Vec<usize> = (0..=n).collect();
        self.quantile_table_range(&js, n)
    }

    /// `[γ(1), …, γ(n)]`, nonincreasing.
    pub fn quantiles(&self, n: usize) -> Result<Vec<f64>> {
        let js: Vec<usize> = (1..=n).collect();
        self.quantile_table_range(&js, n)
    }

    fn quantile_table_range(&self, js: &[usize], n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Parameter("quantile count n must be positive".into()));
        }
        if let Some(&j) = js.iter().find(|&&j| j > n) {
            return Err(Error::Parameter(format!("quantile index {j} outside [0, {n}]")));
        }
        let (lo, hi) = (self.lower_edge(), self.upper_edge());
        let targets: Vec<f64> = js.iter().map(|&j| 1.0 - j as f64 / n as f64).collect();
        let inner: Vec<f64> = match self.grid_view() {
            Some((g, scale, shift)) => g.inverse_cdf(&targets).into_iter().map(|v| v * scale + shift).collect(),
            None => targets.iter().map(|&t| self.bisect_cdf(t, lo, hi)).collect(),
        };
        Ok(js
            .iter()
            .zip(inner)
            .map(|(&j, v)| {
                if j == 0 {
                    hi
                } else if j == n {
                    lo
                } else {
                    v
                }
            })
            .collect())
    }

    /// A grid measure seen through affine maps, as `(grid, scale, shift)`.
    fn grid_view(&self) -> Option<(&GridDensity, f64, f64)> {
        match self {
            Measure::Grid(g) => Some((g, 1.0, 0.0)),
            Measure::Shifted { base, a } => base.grid_view().map(|(g, s, t)| (g, s, t + a)),
            Measure::Scaled { base, factor } if *factor > 0.0 => {
                base.grid_view().map(|(g, s, t)| (g, s * factor, t * factor))
            }
            _ => None,
        }
    }

    fn bisect_cdf(&self, target: f64, lo: f64, hi: f64) -> f64 {
        if let Measure::Point { location } = self {
            return *location;
        }
        let (mut a, mut b) = (lo, hi);
        if self.cdf(a) >= target {
            return a;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.cdf(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    }
}

/// Continuous MP mass on `[a, x(t)]` with `x(t) = a + (b − a)(1 − cos t)/2`.
/// The substitution removes the square-root edges, leaving a smooth integrand.
fn mp_cdf_angle(a: f64, b: f64, c: f64, s2: f64, t_end: f64) -> f64 {
    let w = b - a;
    let integrand = |t: f64| {
        let (sh, ch) = (0.5 * t).sin_cos();
        let x = a + w * sh * sh;
        // sin²t / x written without cancellation: sin t = 2 sin(t/2) cos(t/2).
        let num = w * w * sh * sh * ch * ch;
        if x > 0.0 {
            num / (2.0 * PI * s2 * c * x)
        } else {
            w * ch * ch / (2.0 * PI * s2 * c)
        }
    };
    let h = t_end / MP_PANELS as f64;
    let mut sum = 0.0;
    for k in 0..MP_PANELS {
        let mid = (k as f64 + 0.5) * h;
        for (xi, wi) in GL_NODES.iter().zip(GL_WEIGHTS) {
            sum += wi * integrand(mid + 0.5 * h * xi);
        }
    }
    sum * 0.5 * h
}
