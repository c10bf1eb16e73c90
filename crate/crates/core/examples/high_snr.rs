//! Strong common signal: N approaches products of clean-signal walks, and the reference
//! spectrum decays beyond the threshold R.
//!
//! cargo run --release --example high_snr

use fusion_spectra::regime::{run_experiment, BandwidthConfig};
use fusion_spectra::{ExperimentConfig, MatrixKind, ModelConfig};

fn main() -> fusion_spectra::Result<()> {
    let cases = [
        (1.5, 1.5, BandwidthConfig::default()),
        (2.5, 1.5, BandwidthConfig::default()),
        (2.5, 2.5, BandwidthConfig::default()),
        (4.0, 4.0, BandwidthConfig::default()),
        (2.5, 2.5, BandwidthConfig::percentile(0.5)),
    ];
    for (z1, z2, bw) in cases {
        let cfg = ExperimentConfig::new(ModelConfig::single_spike(250, 500, 750, z1, z2, 0), bw, 1, 3);
        let r = run_experiment(&cfg, MatrixKind::Ncca)?;
        let th = &r.thresholds;
        print!("ζ = ({z1}, {z2}), {:?}: {:?}, R = {:?}", bw.kind, th.regime, th.r.map(|v| (v * 10.0).round() / 10.0));
        for e in &r.norm_errors {
            print!("; ‖N − {}‖ = {:.3e}", e.name, e.mean);
        }
        for t in &r.tails {
            print!("; {} = {:.2e}", t.name, t.mean);
        }
        println!();
    }
    Ok(())
}
