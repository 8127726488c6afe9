use log::info;

use super::features::build_features;
use super::train::run_scope;
use super::{load_triples, RunConfig, Scope};
use crate::error::{Error, Result};
use crate::ingest::table::{create_commented_writer, csv_error};

pub const SWEEP_THRESHOLDS: [f64; 4] = [0.85, 0.90, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pca_threshold: f64,
    pub embeddings: bool,
    pub feature_width: usize,
    pub side_effects: usize,
    pub mean_auroc: Option<f64>,
    pub mean_auprc: Option<f64>,
}

/// General-model metrics for every PCA threshold, with and without the
/// embedding block (only without when `no_embeddings` is set). Writes
/// `sweep.csv`.
pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let triples = load_triples(config)?;
    let arms: &[bool] = if config.no_embeddings { &[false] } else { &[true, false] };
    let mut rows = Vec::new();
    for &threshold in &SWEEP_THRESHOLDS {
        for &embeddings in arms {
            let bundle = build_features(config, threshold, embeddings)?;
            let run = run_scope(config, &bundle.features, &triples, Scope::All)?;
            info!(
                "sweep threshold {threshold} embeddings {embeddings}: auroc {:?}",
                run.report.mean_auroc
            );
            rows.push(SweepRow {
                pca_threshold: threshold,
                embeddings,
                feature_width: bundle.features.width(),
                side_effects: run.runs.len(),
                mean_auroc: run.report.mean_auroc,
                mean_auprc: run.report.mean_auprc,
            });
        }
    }
    let path = config.out_dir.join("sweep.csv");
    let mut w = create_commented_writer(&path, Some(&config.provenance()))?;
    let err = |e| csv_error(&path, e);
    w.write_record([
        "pca_threshold",
        "embeddings",
        "feature_width",
        "side_effects",
        "mean_auroc",
        "mean_auprc",
    ])
    .map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        w.write_record([
            r.pca_threshold.to_string(),
            r.embeddings.to_string(),
            r.feature_width.to_string(),
            r.side_effects.to_string(),
            opt(r.mean_auroc),
            opt(r.mean_auprc),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
