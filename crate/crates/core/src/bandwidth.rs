//! Bandwidth policies: `h = p` or a percentile of pairwise distances.
//!
//! Bandwidths are in squared-distance units so that both policies feed the
//! same affinity `exp(−υ‖xᵢ − xⱼ‖²/h)`.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::pairwise_sq_dists;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BandwidthPolicy {
    Classic,
    Percentile { omega: f64 },
}

impl BandwidthPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthPolicy::Classic => Ok(()),
            BandwidthPolicy::Percentile { omega } if omega > 0.0 && omega < 1.0 => Ok(()),
            BandwidthPolicy::Percentile { omega } => {
                Err(Error::Parameter(format!("omega must lie in (0,1), got {omega}")))
            }
        }
    }

    /// Bandwidth for a `p×n` cloud whose squared distances are already known.
    pub fn select(&self, p: usize, sq_dists: MatRef<'_, f64>) -> Result<f64> {
        match *self {
            BandwidthPolicy::Classic => Ok(classic_bandwidth(p)),
            BandwidthPolicy::Percentile { omega } => percentile_from_sq_dists(sq_dists, omega),
        }
    }

    pub fn is_classic(&self) -> bool {
        matches!(self, BandwidthPolicy::Classic)
    }
}

/// `h = p`.
pub fn classic_bandwidth(p: usize) -> f64 {
    p as f64
}

/// Squared value of the `⌈ω·m⌉`-th smallest of the `m = n(n−1)/2` pairwise
/// distances of the columns of `points`.
pub fn percentile_bandwidth(points: MatRef<'_, f64>, omega: f64) -> Result<f64> {
    if points.ncols() < 2 {
        return Err(Error::Input(format!("need at least two points, got {}", points.ncols())));
    }
    percentile_from_sq_dists(pairwise_sq_dists(points)?.as_ref(), omega)
}

/// Same as [`percentile_bandwidth`] from a precomputed squared-distance matrix.
///
/// Squaring is monotone, so ranking squared distances ranks distances.
pub fn percentile_from_sq_dists(sq_dists: MatRef<'_, f64>, omega: f64) -> Result<f64> {
    BandwidthPolicy::Percentile { omega }.validate()?;
    let n = sq_dists.nrows();
    if n < 2 {
        return Err(Error::Input(format!("need at least two points, got {n}")));
    }
    let mut values: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq_dists[(i, j)])
        .collect();
    let h = nearest_rank(&mut values, omega);
    if !(h > 0.0) {
        return Err(Error::Input("zero bandwidth: selected pairwise distance is 0".into()));
    }
    Ok(h)
}

/// Nearest-rank percentile: the `⌈ω·m⌉`-th smallest value (rank clamped to `[1, m]`).
/// Reorders `values`.
pub fn nearest_rank(values: &mut [f64], omega: f64) -> f64 {
    let m = values.len();
    let rank = ((omega * m as f64).ceil() as usize).clamp(1, m);
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}
