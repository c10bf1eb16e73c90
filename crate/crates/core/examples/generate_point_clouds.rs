//! Draw a spiked point-cloud pair, inspect it, and round-trip it through the raw dump format.
//!
//! cargo run --example generate_point_clouds

use fusion_spectra::model::{dump, generate, load};
use fusion_spectra::{ModelConfig, NoiseKind, SignalKind};

fn main() -> fusion_spectra::Result<()> {
    let cfg = ModelConfig::single_spike(200, 400, 600, 1.5, 0.5, 42);
    let pair = generate(&cfg)?;
    let norm2 = |m: &faer::Mat<f64>, j: usize| m.col(j).iter().map(|v| v * v).sum::<f64>();
    let mean = |m: &faer::Mat<f64>| (0..pair.n()).map(|j| norm2(m, j)).sum::<f64>() / pair.n() as f64;
    println!("n = {}, p1 = {}, p2 = {}", pair.n(), pair.x.nrows(), pair.y.nrows());
    println!("mean ‖u_x‖² = {:.2} (n^1.5 = {:.2})", mean(&pair.u_x), 200f64.powf(1.5));
    println!("mean ‖u_y‖² = {:.2} (n^0.5 = {:.2})", mean(&pair.u_y), 200f64.powf(0.5));
    println!("mean ‖z‖²/p1 = {:.3}", mean(&pair.z) / 400.0);

    let circle = ModelConfig {
        signal_kind: SignalKind::Circle,
        noise_kind: NoiseKind::Rademacher,
        phi_warp: 0.3,
        ..ModelConfig::single_spike(100, 200, 300, 1.0, 1.0, 7)
    };
    let c = generate(&circle)?;
    println!("circle: first latent point on sensor 1 = ({:.3}, {:.3})", c.u_x[(0, 0)], c.u_x[(1, 0)]);

    let dir = std::env::temp_dir().join("fusion_spectra_generate_example");
    let files = dump(&pair, &cfg, &dir)?;
    let (back, _) = load(&dir)?;
    assert_eq!(back.x, pair.x);
    println!("dumped {} files to {} and read them back", files.len(), dir.display());
    Ok(())
}
