//! Build both affinities, the transition matrices, and the NCCA and AD products; print their spectra.
//!
//! cargo run --example kernel_spectrum

use fusion_spectra::kernel::{kernel_stack, spectrum};
use fusion_spectra::linalg::row_sum_defect;
use fusion_spectra::model::generate;
use fusion_spectra::{ModelConfig, Scale};

fn main() -> fusion_spectra::Result<()> {
    let cfg = ModelConfig::single_spike(300, 600, 900, 0.0, 0.0, 1);
    let pair = generate(&cfg)?;
    let st = kernel_stack(pair.x.as_ref(), pair.y.as_ref(), 600.0, 900.0, 1.0)?;
    println!("row-sum defects: A1 {:.1e}, A2 {:.1e}, A1A2 {:.1e}",
        row_sum_defect(st.a1.as_ref()), row_sum_defect(st.a2.as_ref()), row_sum_defect(st.a_fused.as_ref()));

    let n = spectrum(st.n.as_ref(), Scale::NSquared)?;
    let a = spectrum(st.a_fused.as_ref(), Scale::NSquared)?;
    println!("top eigenvalues of n²N:  {:?}", n.eigen_real[..4].iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>());
    println!("bulk eigenvalues of n²N: {:?}", [10, 100, 200].map(|i| format!("{:.3}", n.eigen_real[i - 1])));
    println!("max |Im λ| of n²N = {:.2e}, of n²A = {:.2e}", n.eigen_imag_max, a.eigen_imag_max);
    println!("largest singular value of N = {:.6}", n.singular[0] / 300f64.powi(2));
    Ok(())
}
