use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    file_stem, load_triples, positives_by_side_effect, resolve_cohort, write_json, RunConfig, Scope, TRAIN_STAGE,
};
use crate::error::{Error, Result};
use crate::eval::{aggregate, evaluate_scores, write_metrics, MetricsReport, SideEffectMetrics};
use crate::features::{read_features, DrugFeatureMatrix};
use crate::ids::{DdiTriple, DrugId, DrugPair, SideEffectId};
use crate::ingest::filter_side_effects;
use crate::ingest::table::{create_commented_writer, csv_error};
use crate::nn::{load_model, save_model, score_samples, train_with, MlpConfig, MlpModel, TrainOptions, TrainReport};
use crate::sampling::{build_dataset, read_dataset, write_dataset, PairUniverse, SideEffectDataset};
use crate::seed::derive_seed;

#[derive(Debug, Clone)]
pub struct SideEffectRun {
    pub dataset: SideEffectDataset,
    pub model: MlpModel,
    pub report: TrainReport,
    pub metrics: SideEffectMetrics,
}

#[derive(Debug, Clone)]
pub struct ScopeRun {
    pub scope: Scope,
    pub runs: Vec<SideEffectRun>,
    pub report: MetricsReport,
}

/// Per-side-effect training config: architecture from the run, seed derived
/// from the run seed and the side-effect code.
pub fn model_config(config: &RunConfig, side_effect: &SideEffectId) -> MlpConfig {
    MlpConfig {
        seed: derive_seed(config.seed, TRAIN_STAGE, &side_effect.code),
        ..config.model.clone()
    }
}

type ScopeInputs = (
    Vec<SideEffectId>,
    BTreeMap<SideEffectId, HashSet<DrugPair>>,
    PairUniverse,
);

/// Side effects eligible in `scope`, their positives, and the negative universe.
pub(crate) fn scope_inputs(
    config: &RunConfig,
    features: &DrugFeatureMatrix,
    triples: &[DdiTriple],
    scope: Scope,
) -> Result<ScopeInputs> {
    let drugs = features.drug_order();
    let (scoped, universe) = match scope {
        Scope::All => (triples.to_vec(), PairUniverse::all(drugs)),
        Scope::Cohort => {
            let resolution = resolve_cohort(config, triples)?;
            let anchors: Vec<DrugId> = resolution
                .spec
                .resolved_drug_ids
                .iter()
                .filter(|d| features.contains(d))
                .cloned()
                .collect();
            if anchors.is_empty() {
                return Err(Error::EmptyCohort(resolution.spec.name));
            }
            (resolution.triples, PairUniverse::anchored(&anchors, drugs))
        }
    };
    let (side_effects, kept) = filter_side_effects(&scoped, config.min_positive_pairs);
    if side_effects.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no side effect has at least {} positive pairs in scope `{scope}`",
            config.min_positive_pairs
        )));
    }
    Ok((side_effects, positives_by_side_effect(&kept), universe))
}

/// Builds, trains and tests one model per eligible side effect, in parallel.
pub fn run_scope(
    config: &RunConfig,
    features: &DrugFeatureMatrix,
    triples: &[DdiTriple],
    scope: Scope,
) -> Result<ScopeRun> {
    config.validate()?;
    let started = Instant::now();
    let (side_effects, positives, universe) = scope_inputs(config, features, triples, scope)?;
    info!("{scope}: training {} side effects", side_effects.len());
    let options = TrainOptions {
        best_val_checkpoint: config.best_val_checkpoint,
    };
    let task = |se: &SideEffectId| -> Result<SideEffectRun> {
        let dataset = build_dataset(se, &positives[se], &universe, config.neg_ratio, config.seed)?;
        let (model, report) = train_with(features, &dataset, &model_config(config, se), &options)?;
        let scores = score_samples(&model, features, &dataset.test)?;
        let labels: Vec<bool> = dataset.test.iter().map(|s| s.positive).collect();
        let metrics = evaluate_scores(se.clone(), &scores, &labels)?;
        Ok(SideEffectRun {
            dataset,
            model,
            report,
            metrics,
        })
    };
    let runs = config.in_pool(|| side_effects.par_iter().map(task).collect::<Result<Vec<_>>>())??;
    let report = aggregate(
        runs.iter().map(|r| r.metrics.clone()).collect(),
        Some(started.elapsed().as_secs_f64()),
    );
    Ok(ScopeRun { scope, runs, report })
}

#[derive(Serialize)]
struct Timing {
    side_effects: usize,
    training_seconds: f64,
}

/// Trains `scope` from `features.bin` and writes datasets, models, metrics,
/// per-epoch log and timing.
pub fn cmd_train(config: &RunConfig, scope: Scope) -> Result<MetricsReport> {
    config.validate()?;
    let bundle = read_features(config.features_path())?;
    let triples = load_triples(config)?;
    let run = run_scope(config, &bundle.features, &triples, scope)?;
    let dir = config.scope_dir(scope);
    let comment = config.provenance();
    for r in &run.runs {
        let stem = file_stem(&r.dataset.side_effect.code);
        write_dataset(
            dir.join("datasets").join(format!("{stem}.csv")),
            &r.dataset,
            Some(&comment),
        )?;
        save_model(dir.join("models").join(format!("{stem}.mdl")), &r.model)?;
    }
    write_metrics(dir.join("metrics.csv"), &run.report, Some(&comment))?;

    let path = dir.join("training_log.csv");
    let mut w = create_commented_writer(&path, Some(&comment))?;
    w.write_record(["side_effect", "epoch", "train_loss", "val_auroc"])
        .map_err(|e| csv_error(&path, e))?;
    for r in &run.runs {
        for e in &r.report.epochs {
            w.write_record([
                r.dataset.side_effect.code.clone(),
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.val_auroc.map(|a| a.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| csv_error(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            side_effects: run.runs.len(),
            training_seconds: run.report.training_seconds.unwrap_or_default(),
        },
    )?;
    info!(
        "{scope}: mean auroc {:?}, mean auprc {:?}",
        run.report.mean_auroc, run.report.mean_auprc
    );
    Ok(run.report)
}

/// Scores the models trained in `models` on the test splits built for `tests`.
/// Side effects without a model are reported as skipped.
pub fn cmd_eval_cross(config: &RunConfig, models: Scope, tests: Scope) -> Result<MetricsReport> {
    config.validate()?;
    let bundle = read_features(config.features_path())?;
    let dataset_dir = config.scope_dir(tests).join("datasets");
    let model_dir = config.scope_dir(models).join("models");
    let entries = std::fs::read_dir(&dataset_dir).map_err(|e| Error::io(&dataset_dir, e))?;
    let mut stems: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let p = e.path();
            if p.extension()? != "csv" {
                return None;
            }
            Some(p.file_stem()?.to_string_lossy().into_owned())
        })
        .collect();
    stems.sort();
    let task = |stem: &String| -> Result<SideEffectMetrics> {
        let se = SideEffectId::from_code(stem.as_str())
            .ok_or_else(|| Error::InvalidConfig(format!("dataset file `{stem}.csv` has no code")))?;
        let dataset = read_dataset(dataset_dir.join(format!("{stem}.csv")), se.clone())?;
        let model_path = model_dir.join(format!("{stem}.mdl"));
        if !model_path.exists() {
            return Ok(SideEffectMetrics::skipped(
                se,
                dataset.test.len(),
                format!("no {models} model"),
            ));
        }
        let model = load_model(&model_path)?;
        let scores = score_samples(&model, &bundle.features, &dataset.test)?;
        let labels: Vec<bool> = dataset.test.iter().map(|s| s.positive).collect();
        evaluate_scores(se, &scores, &labels)
    };
    let rows = config.in_pool(|| stems.par_iter().map(task).collect::<Result<Vec<_>>>())??;
    let report = aggregate(rows, None);
    let path = config.out_dir.join("cross").join(format!("{models}_on_{tests}.csv"));
    write_metrics(&path, &report, Some(&config.provenance()))?;
    Ok(report)
}
