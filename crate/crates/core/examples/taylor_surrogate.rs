//! Taylor-expansion surrogate K₁ of a noisy affinity: shift-matrix ranks and ‖W − K₁‖.
//!
//! cargo run --release --example taylor_surrogate

use fusion_spectra::kernel::{affinity, pairwise_sq_dists};
use fusion_spectra::linalg::numerical_rank;
use fusion_spectra::model::generate;
use fusion_spectra::reference::{build_sh, surrogate_error};
use fusion_spectra::ModelConfig;

fn main() -> fusion_spectra::Result<()> {
    for zeta in [0.0, 0.3, 0.6] {
        let cfg = ModelConfig::single_spike(300, 600, 900, zeta, 0.0, 2);
        let pair = generate(&cfg)?;
        let sh = build_sh(&pair, &cfg, 1)?;
        let w = affinity(pairwise_sq_dists(pair.x.as_ref())?.as_ref(), 600.0, 1.0)?;
        let low = &sh.sh0 + &sh.sh1 + &sh.sh2;
        println!(
            "ζ = {zeta}: depth {}, rank(Sh0+Sh1+Sh2) = {}, rank Sh_d = {:?}, ‖W − K₁‖ = {:.4}",
            sh.depth,
            numerical_rank(low.as_ref(), 1e-8),
            sh.sh_d.as_ref().map(|d| numerical_rank(d.as_ref(), 1e-8)),
            surrogate_error(w.as_ref(), &sh)
        );
    }
    Ok(())
}
