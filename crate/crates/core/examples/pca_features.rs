//! Reduces the protein-target and mono side effect indicator blocks with PCA,
//! assembles the drug feature matrix and encodes a pair.
//!
//! ```text
//! cargo run --example pca_features
//! ```

use drivenn::features::{assemble_drug_features, fit_pca};
use drivenn::ingest::build_binary_matrix;
use drivenn::synthetic::{generate, SyntheticSpec};
use drivenn::DrugId;

fn main() -> drivenn::Result<()> {
    let data = generate(&SyntheticSpec::default());
    let mono: Vec<(DrugId, &str)> = data.mono.iter().map(|(d, se)| (d.clone(), se.code.as_str())).collect();
    let protein = build_binary_matrix(&data.targets, &data.drugs);
    let mono = build_binary_matrix(&mono, &data.drugs);

    for threshold in [0.85, 0.90, 0.95, 0.99, 1.0] {
        let p = fit_pca(&protein.values, threshold)?;
        let m = fit_pca(&mono.values, threshold)?;
        println!(
            "threshold {threshold:.2}: protein {} -> {}, mono {} -> {}",
            p.n_features(),
            p.retained,
            m.n_features(),
            m.retained
        );
    }

    let p = fit_pca(&protein.values, 0.95)?;
    let m = fit_pca(&mono.values, 0.95)?;
    let ratios = p.explained_variance_ratio();
    println!("protein explained variance, first five axes: {:.3?}", &ratios[..5]);

    let features = assemble_drug_features(
        Some(&data.embeddings()),
        &p.transform(&protein.values)?,
        &m.transform(&mono.values)?,
        &data.drugs,
    )?;
    println!("blocks {:?}, width {}", features.block_dims(), features.width());
    let (a, b) = (&data.drugs[0], &data.drugs[1]);
    let v = features.pair_vector(a, b)?;
    assert_eq!(v, features.pair_vector(b, a)?);
    println!("pair ({a}, {b}) vector norm {:.4}", v.norm());
    Ok(())
}
