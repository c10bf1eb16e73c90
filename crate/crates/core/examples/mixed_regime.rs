//! One strong sensor and one noisy sensor: nN tracks the surrogate Ñ, and for a very strong
//! sensor the bulk follows the scaled quantiles of ν̃₂.
//!
//! cargo run --release --example mixed_regime

use fusion_spectra::regime::{run_experiment, BandwidthConfig};
use fusion_spectra::{ExperimentConfig, MatrixKind, ModelConfig};

fn main() -> fusion_spectra::Result<()> {
    for z1 in [1.5, 2.5, 6.0] {
        let cfg = ExperimentConfig::new(ModelConfig::single_spike(300, 600, 900, z1, 0.0, 0), BandwidthConfig::default(), 1, 5);
        let r = run_experiment(&cfg, MatrixKind::Ncca)?;
        let th = &r.thresholds;
        print!("ζ₁ = {z1}: {:?}, S = {:?}, extreme = {}", th.regime, th.s, th.extreme);
        for c in &r.trials[0].comparisons {
            print!("; {}: median abs {:.4}, median rel {:.4}", c.name, c.median_abs, c.median_rel);
        }
        println!();
    }
    Ok(())
}
