//! Both sensors noise-dominated: the bulk of n²N follows scaled free-convolution quantiles.
//!
//! cargo run --release --example noise_regime

use fusion_spectra::regime::{run_experiment, BandwidthConfig};
use fusion_spectra::{ExperimentConfig, MatrixKind, ModelConfig};

fn main() -> fusion_spectra::Result<()> {
    for (label, bw) in [("h = p", BandwidthConfig::default()), ("median bandwidth", BandwidthConfig::percentile(0.5))] {
        let cfg = ExperimentConfig::new(ModelConfig::single_spike(300, 600, 900, 0.0, 0.0, 0), bw, 3, 11);
        for kind in [MatrixKind::Ncca, MatrixKind::Ad] {
            let r = run_experiment(&cfg, kind)?;
            let s = r.summary_stat("free_convolution:median_rel").unwrap();
            let c = &r.trials[0].comparisons[0];
            println!(
                "{label}, {kind:?}: {:?}, indices {}..={}, median rel. error over 3 trials {:.4}",
                r.thresholds.regime,
                c.indices[0],
                c.indices[c.indices.len() - 1],
                s.mean
            );
        }
    }
    Ok(())
}
