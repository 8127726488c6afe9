use log::info;
use serde::Serialize;

use super::train::{model_config, scope_inputs};
use super::{load_triples, write_json, RunConfig, Scope, TUNE_STAGE};
use crate::error::Result;
use crate::features::read_features;
use crate::ids::SideEffectId;
use crate::nn::MlpConfig;
use crate::sampling::build_dataset;
use crate::seed::{derive_seed, shuffle, stage_rng};
use crate::tuner::{consensus_config, hyperband, write_tuning_log, HyperbandParams, SearchSpace, TrialResult};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    pub scope: Scope,
    /// Tune a seeded random subset of this many side effects; all when `None`.
    pub sample: Option<usize>,
    pub params: HyperbandParams,
    pub space: SearchSpace,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            scope: Scope::All,
            sample: None,
            params: HyperbandParams::default(),
            space: SearchSpace::default(),
        }
    }
}

#[derive(Serialize)]
struct Winner {
    side_effect: String,
    config: MlpConfig,
    epochs: usize,
    val_auroc: Option<f64>,
}

#[derive(Serialize)]
struct ConsensusFile<'a> {
    seed: u64,
    config_digest: String,
    hyperband: &'a HyperbandParams,
    space: &'a SearchSpace,
    consensus: MlpConfig,
    winners: Vec<Winner>,
}

/// Hyperband per side effect on the same datasets `train` would build, then
/// the per-field consensus. Writes `tune/tuning_log.csv` and
/// `tune/consensus.json`.
pub fn cmd_tune(config: &RunConfig, options: &TuneOptions) -> Result<MlpConfig> {
    config.validate()?;
    options.space.validate()?;
    let bundle = read_features(config.features_path())?;
    let triples = load_triples(config)?;
    let (mut side_effects, positives, universe) = scope_inputs(config, &bundle.features, &triples, options.scope)?;
    if let Some(n) = options.sample {
        shuffle(&mut stage_rng(config.seed, TUNE_STAGE, "sample"), &mut side_effects);
        side_effects.truncate(n.max(1));
        side_effects.sort();
    }
    info!("tuning {} side effects", side_effects.len());

    let mut runs: Vec<(SideEffectId, Vec<TrialResult>)> = Vec::new();
    let mut winners = Vec::new();
    for se in &side_effects {
        let dataset = build_dataset(se, &positives[se], &universe, config.neg_ratio, config.seed)?;
        let base = model_config(config, se);
        let seed = derive_seed(config.seed, TUNE_STAGE, &se.code);
        let outcome = config
            .in_pool(|| hyperband(&options.space, &options.params, &bundle.features, &dataset, &base, seed))??;
        winners.push(Winner {
            side_effect: se.code.clone(),
            config: outcome.best.config.clone(),
            epochs: outcome.best.epochs,
            val_auroc: outcome.best.val_auroc,
        });
        runs.push((se.clone(), outcome.log));
    }
    let dir = config.out_dir.join("tune");
    write_tuning_log(dir.join("tuning_log.csv"), &runs, Some(&config.provenance()))?;
    let configs: Vec<MlpConfig> = winners.iter().map(|w| w.config.clone()).collect();
    let consensus = consensus_config(&configs, &config.model)?;
    write_json(
        &dir.join("consensus.json"),
        &ConsensusFile {
            seed: config.seed,
            config_digest: config.digest(),
            hyperband: &options.params,
            space: &options.space,
            consensus: consensus.clone(),
            winners,
        },
    )?;
    Ok(consensus)
}
