use log::{info, warn};
use nalgebra::DMatrix;

use super::{drug_set, load_triples, RunConfig};
use crate::error::{Error, Result};
use crate::features::{
    assemble_drug_features, fit_pca, parse_embeddings, write_features, zscore_normalize, FeatureBundle, PcaModel,
};
use crate::ids::DrugId;
use crate::ingest::table::{create_commented_writer, csv_error};
use crate::ingest::{build_binary_matrix, parse_mono_records, parse_target_records};

/// Reduces one indicator block. A block whose columns are all constant has no
/// variance to keep and contributes width 0.
fn reduce_block(
    name: &str,
    raw: &DMatrix<f64>,
    threshold: f64,
    normalize: bool,
) -> Result<(DMatrix<f64>, Option<PcaModel>)> {
    let informative = raw.column_iter().any(|c| c.iter().any(|&v| v != c[0]));
    if raw.ncols() == 0 || !informative {
        warn!("{name} block has no varying column; it contributes no features");
        return Ok((DMatrix::zeros(raw.nrows(), 0), None));
    }
    let input = if normalize {
        zscore_normalize(raw).0
    } else {
        raw.clone()
    };
    let pca = fit_pca(&input, threshold)?;
    Ok((pca.transform(&input)?, Some(pca)))
}

/// Drug feature matrix over every drug in the interaction data, in id order.
pub fn build_features(config: &RunConfig, threshold: f64, use_embeddings: bool) -> Result<FeatureBundle> {
    let triples = load_triples(config)?;
    let drugs: Vec<DrugId> = drug_set(&triples).into_iter().collect();
    if drugs.len() < 2 {
        return Err(Error::TooSmall {
            actual: drugs.len(),
            minimum: 2,
        });
    }
    let targets = parse_target_records(config.require(&config.inputs.targets, "targets")?)?.records;
    let mono = parse_mono_records(config.require(&config.inputs.mono, "mono")?)?.records;
    let mono_labels: Vec<(DrugId, &str)> = mono.iter().map(|(d, se)| (d.clone(), se.code.as_str())).collect();

    let protein_raw = build_binary_matrix(&targets, &drugs);
    let mono_raw = build_binary_matrix(&mono_labels, &drugs);
    let (protein, protein_pca) = reduce_block("protein", &protein_raw.values, threshold, config.normalize_before_pca)?;
    let (mono, mono_pca) = reduce_block("mono", &mono_raw.values, threshold, config.normalize_before_pca)?;

    let embeddings = if use_embeddings {
        Some(parse_embeddings(
            config.require(&config.inputs.embeddings, "embeddings")?,
        )?)
    } else {
        None
    };
    let features = assemble_drug_features(embeddings.as_ref(), &protein, &mono, &drugs)?;
    info!(
        "features: {} drugs, protein {} -> {}, mono {} -> {}, embedding {}",
        drugs.len(),
        protein_raw.values.ncols(),
        protein.ncols(),
        mono_raw.values.ncols(),
        mono.ncols(),
        features.block_dims().embedding
    );
    Ok(FeatureBundle {
        features,
        protein_pca,
        mono_pca,
    })
}

/// Writes `features.bin` and `feature_dims.csv`
/// (`block,input_columns,retained,explained_variance`).
pub fn cmd_features(config: &RunConfig) -> Result<FeatureBundle> {
    config.validate()?;
    let bundle = build_features(config, config.pca_threshold, !config.no_embeddings)?;
    write_features(config.features_path(), &bundle)?;

    let path = config.out_dir.join("feature_dims.csv");
    let mut w = create_commented_writer(&path, Some(&config.provenance()))?;
    let err = |e| csv_error(&path, e);
    w.write_record(["block", "input_columns", "retained", "explained_variance"])
        .map_err(err)?;
    let dims = bundle.features.block_dims();
    w.write_record([
        "embedding".to_string(),
        dims.embedding.to_string(),
        dims.embedding.to_string(),
        String::new(),
    ])
    .map_err(err)?;
    for (name, pca, width) in [
        ("protein", &bundle.protein_pca, dims.protein),
        ("mono", &bundle.mono_pca, dims.mono),
    ] {
        let (input, explained) = match pca {
            Some(p) => (
                p.n_features(),
                p.explained_variance_ratio()
                    .iter()
                    .take(p.retained)
                    .sum::<f64>()
                    .to_string(),
            ),
            None => (0, String::new()),
        };
        w.write_record([name.to_string(), input.to_string(), width.to_string(), explained])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(bundle)
}
