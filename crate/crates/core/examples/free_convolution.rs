//! Free multiplicative convolution by subordination, checked against a Haar Monte-Carlo estimate.
//!
//! cargo run --release --example free_convolution

use fusion_spectra::rmt::{free_multiplicative_convolution, mc_free_conv, MpConvention, SolverOptions};
use fusion_spectra::{Measure, ModelScalars};

fn main() -> fusion_spectra::Result<()> {
    let mp = Measure::mp(0.5, 1.0, MpConvention::Gram)?;
    let id = free_multiplicative_convolution(&mp, &Measure::point(1.0), 200, &SolverOptions::default())?;
    println!("MP ⊠ δ₁: γ(1) = {:.4}, MP alone: γ(1) = {:.4}", id.quantiles[0], mp.quantile(1, 200)?);

    let s = ModelScalars::from_parts(1.0, [400.0, 800.0, 1200.0], [1.0, 1.0], [800.0, 1200.0]);
    let (nu1, nu2) = (s.nu_tilde(1, MpConvention::Gram)?, s.nu_tilde(2, MpConvention::Gram)?);
    let n = 400;
    let r = free_multiplicative_convolution(&nu1, &nu2, n, &SolverOptions::default())?;
    let d = &r.diagnostics;
    println!(
        "ν̃₁ ⊠ ν̃₂: support [{:.5}, {:.5}], {} points, {} failed, max residual {:.1e}",
        d.lower_edge, d.upper_edge, d.points, d.failed, d.max_residual
    );
    println!("mean {:.6} vs product of means {:.6}", r.density.mean(), nu1.mean() * nu2.mean());

    let mc = mc_free_conv(&nu1, &nu2, n, 20, 1)?;
    for j in [20, 100, 200, 300, 380] {
        let (a, m) = (r.quantiles[j - 1], mc[j - 1]);
        println!("  j = {j:3}: analytic {a:.5}, Monte-Carlo {m:.5}, rel. diff {:.2e}", (a - m).abs() / a);
    }
    Ok(())
}
