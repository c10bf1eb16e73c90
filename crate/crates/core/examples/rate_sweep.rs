//! Error rates: repeat an experiment over growing n and fit log-log slopes.
//!
//! cargo run --release --example rate_sweep

use fusion_spectra::regime::{sweep, BandwidthConfig};
use fusion_spectra::{ExperimentConfig, MatrixKind, ModelConfig};

fn main() -> fusion_spectra::Result<()> {
    let cfg = ExperimentConfig::new(ModelConfig::single_spike(200, 400, 600, 0.0, 0.0, 0), BandwidthConfig::default(), 2, 9);
    let result = sweep(&cfg, &[150, 300, 600], MatrixKind::Ncca)?;
    for r in &result.rates {
        println!("{:<32} slope {:+.3}  values {:?}", r.metric, r.slope, r.values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>());
    }
    let mut csv = Vec::new();
    result.write_rates_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
