//! The binary's workflows called as library functions, writing outputs and a run manifest.
//!
//! cargo run --release --example cli_workflow

use fusion_spectra::app::{load_config, run_predict, run_simulate, MatrixSelection, Overrides, PredictArgs};

fn main() -> fusion_spectra::Result<()> {
    let out = std::env::temp_dir().join("fusion_spectra_cli_workflow");
    let m = run_predict(&PredictArgs::new(0.5, 1.0 / 3.0, 1.0, 300), &out.join("predict"))?;
    for f in &m.outputs {
        println!("predict wrote {} ({}…)", f.path, &f.sha256[..12]);
    }
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/both_low.json");
    let cfg = load_config(&path, &Overrides { trials: Some(2), ..Default::default() })?;
    let (reports, manifest) = run_simulate(&cfg, MatrixSelection::Both, &out.join("simulate"))?;
    for r in &reports {
        println!("{:?}: {:?}", r.matrix, r.summary.iter().map(|s| format!("{} = {:.4}", s.name, s.mean)).collect::<Vec<_>>());
    }
    println!("seeds {:?}, outputs {}", manifest.seeds, manifest.outputs.len());
    Ok(())
}
