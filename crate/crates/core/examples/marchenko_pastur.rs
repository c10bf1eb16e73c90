//! Marchenko–Pastur laws: edges, density, CDF, quantiles, and the shifted laws ν̃ used for predictions.
//!
//! cargo run --example marchenko_pastur

use fusion_spectra::rmt::MpConvention;
use fusion_spectra::{Measure, ModelScalars};
use num_complex::Complex64;

fn main() -> fusion_spectra::Result<()> {
    let mu = Measure::mp(0.5, 1.0, MpConvention::Gram)?;
    let (a, b) = mu.support();
    println!("MP(c=0.5, s²=1): support [{a:.4}, {b:.4}], mean {:.4}", mu.mean());
    for x in [0.2, 0.5, 1.0, 2.0] {
        println!("  x = {x}: density {:.4}, CDF {:.4}", mu.density(x), mu.cdf(x));
    }
    println!("  quantiles γ(j), n = 10: {:?}", mu.quantile_table(10)?.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    let m = mu.stieltjes(Complex64::new(1.0, 0.1));
    println!("  Stieltjes transform at 1 + 0.1i: {m:.4}");

    let tall = Measure::mp(2.0, 1.0, MpConvention::Gram)?;
    println!("MP(c=2): atom at zero {:.2}", tall.atom_at_zero());
    let verbatim = Measure::mp(0.5, 0.27, MpConvention::Verbatim)?;
    let gram = Measure::mp(0.5, 0.27, MpConvention::Gram)?;
    println!("s² = 0.27 upper edge: Gram {:.4}, verbatim {:.4}", gram.upper_edge(), verbatim.upper_edge());

    let s = ModelScalars::from_parts(1.0, [500.0, 1000.0, 1500.0], [1.0, 1.0], [1000.0, 1500.0]);
    println!("ς₁ = {:.5}, ς₂ = {:.5}, η = {:.5}", s.varsigma1, s.varsigma2, s.eta);
    let nu1 = s.nu_tilde(1, MpConvention::Gram)?;
    println!("ν̃₁ support {:?}", nu1.support());
    Ok(())
}
