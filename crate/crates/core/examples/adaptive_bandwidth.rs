//! Classic (h = p) versus percentile bandwidths, and what they do to the kernel.
//!
//! cargo run --example adaptive_bandwidth

use fusion_spectra::bandwidth::{classic_bandwidth, percentile_bandwidth};
use fusion_spectra::model::generate;
use fusion_spectra::{BandwidthPolicy, ModelConfig};
use fusion_spectra::kernel::pairwise_sq_dists;

fn main() -> fusion_spectra::Result<()> {
    for zeta in [0.0, 1.0, 2.5] {
        let cfg = ModelConfig::single_spike(300, 600, 900, zeta, zeta, 3);
        let pair = generate(&cfg)?;
        let sq = pairwise_sq_dists(pair.x.as_ref())?;
        let h_med = BandwidthPolicy::Percentile { omega: 0.5 }.select(600, sq.as_ref())?;
        let h_lo = percentile_bandwidth(pair.x.as_ref(), 0.1)?;
        println!(
            "ζ = {zeta}: classic h = {:.0}, median h = {h_med:.1} (h/2p = {:.3}), 10th percentile h = {h_lo:.1}",
            classic_bandwidth(600),
            h_med / 1200.0
        );
    }
    Ok(())
}
