//! Hyperband over classifier architectures, and a per-field consensus across
//! the winners of many side effects.
//!
//! Resource is training epochs. Every rung retrains its configurations from
//! scratch at the rung's epoch budget; survivors are the top `1/eta` by
//! validation AUROC, ties going to the earlier trial.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DrugFeatureMatrix;
use crate::ids::SideEffectId;
use crate::ingest::table::{create_commented_writer, csv_error};
use crate::nn::{train_on_matrices, MlpConfig, TrainOptions};
use crate::sampling::{PairSample, SideEffectDataset};
use crate::seed::{derive_seed, stage_rng};

pub const HYPERBAND_STAGE: &str = "hyperband";
/// Ranking score for trials whose validation AUROC is undefined.
pub const UNDEFINED_SCORE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub layer_counts: Vec<usize>,
    pub widths: Vec<usize>,
    pub batch_norm: Vec<bool>,
    pub dropout: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            layer_counts: vec![1, 2, 3],
            widths: vec![100, 200, 300],
            batch_norm: vec![true, false],
            dropout: vec![0.0, 0.3],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.layer_counts.is_empty()
            || self.widths.is_empty()
            || self.batch_norm.is_empty()
            || self.dropout.is_empty()
        {
            return Err(Error::InvalidConfig("search space has an empty choice set".into()));
        }
        Ok(())
    }

    /// Draws an architecture; optimizer fields come from `base`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, base: &MlpConfig) -> MlpConfig {
        let layers = *self.layer_counts.choose(rng).expect("validated");
        MlpConfig {
            layer_widths: (0..layers)
                .map(|_| *self.widths.choose(rng).expect("validated"))
                .collect(),
            use_batch_norm: *self.batch_norm.choose(rng).expect("validated"),
            dropout_rate: *self.dropout.choose(rng).expect("validated"),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rung {
    pub configs: usize,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub s: usize,
    pub rungs: Vec<Rung>,
}

impl Bracket {
    pub fn total_epochs(&self) -> usize {
        self.rungs.iter().map(|r| r.configs * r.epochs).sum()
    }
}

/// Bracket `s` (from `s_max = ⌊log_eta R⌋` down to 0) starts with
/// `n = ⌈(s_max+1)·eta^s/(s+1)⌉` configurations; rung `i` keeps
/// `⌊n/eta^i⌋` of them at `max(1, round(R·eta^(i−s)))` epochs.
pub fn bracket_schedule(max_epochs: usize, eta: usize) -> Result<Vec<Bracket>> {
    if max_epochs == 0 || eta < 2 {
        return Err(Error::InvalidConfig(format!(
            "hyperband needs R >= 1 and eta >= 2 (got R={max_epochs}, eta={eta})"
        )));
    }
    let mut s_max = 0;
    while eta.pow(s_max as u32 + 1) <= max_epochs {
        s_max += 1;
    }
    let mut brackets = Vec::with_capacity(s_max + 1);
    for s in (0..=s_max).rev() {
        let n = ((s_max + 1) * eta.pow(s as u32)).div_ceil(s + 1);
        let rungs = (0..=s)
            .map(|i| Rung {
                configs: n / eta.pow(i as u32),
                epochs: ((max_epochs as f64) * (eta as f64).powi(i as i32 - s as i32))
                    .round()
                    .max(1.0) as usize,
            })
            .collect();
        brackets.push(Bracket { s, rungs });
    }
    Ok(brackets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbandParams {
    pub max_epochs: usize,
    pub eta: usize,
}

impl Default for HyperbandParams {
    fn default() -> Self {
        HyperbandParams { max_epochs: 50, eta: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Index of the sampled configuration within the whole search.
    pub trial: usize,
    pub bracket: usize,
    pub rung: usize,
    pub config: MlpConfig,
    pub epochs: usize,
    /// `None` when the validation split is single-class.
    pub val_auroc: Option<f64>,
}

impl TrialResult {
    pub fn score(&self) -> f64 {
        self.val_auroc.unwrap_or(UNDEFINED_SCORE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbandOutcome {
    pub best: TrialResult,
    /// Every evaluation, in bracket, rung and trial order.
    pub log: Vec<TrialResult>,
}

/// Hyperband with a caller-supplied evaluation `(config, epochs) → val AUROC`.
/// Trials of one rung run in parallel on the current rayon pool.
pub fn hyperband_with<F>(
    space: &SearchSpace,
    params: &HyperbandParams,
    base: &MlpConfig,
    seed: u64,
    evaluate: F,
) -> Result<HyperbandOutcome>
where
    F: Fn(&MlpConfig, usize) -> Result<Option<f64>> + Sync,
{
    space.validate()?;
    let schedule = bracket_schedule(params.max_epochs, params.eta)?;
    let mut log = Vec::new();
    let mut next_trial = 0;
    for bracket in &schedule {
        let mut rng = stage_rng(seed, HYPERBAND_STAGE, &format!("bracket{}", bracket.s));
        let mut alive: Vec<(usize, MlpConfig)> = (0..bracket.rungs[0].configs)
            .map(|_| {
                let trial = next_trial;
                next_trial += 1;
                let mut config = space.sample(&mut rng, base);
                config.seed = derive_seed(seed, HYPERBAND_STAGE, &format!("trial{trial}"));
                (trial, config)
            })
            .collect();
        for (rung_index, rung) in bracket.rungs.iter().enumerate() {
            let results: Vec<TrialResult> = alive
                .par_iter()
                .map(|(trial, config)| {
                    let config = MlpConfig {
                        epochs: rung.epochs,
                        ..config.clone()
                    };
                    let val_auroc = evaluate(&config, rung.epochs)?;
                    Ok(TrialResult {
                        trial: *trial,
                        bracket: bracket.s,
                        rung: rung_index,
                        config,
                        epochs: rung.epochs,
                        val_auroc,
                    })
                })
                .collect::<Result<_>>()?;
            let mut ranked: Vec<&TrialResult> = results.iter().collect();
            ranked.sort_by(|a, b| b.score().total_cmp(&a.score()).then(a.trial.cmp(&b.trial)));
            let keep = bracket.rungs.get(rung_index + 1).map_or(0, |r| r.configs);
            let survivors: Vec<usize> = ranked.iter().take(keep).map(|r| r.trial).collect();
            alive.retain(|(t, _)| survivors.contains(t));
            log.extend(results);
        }
    }
    let best = log
        .iter()
        .max_by(|a, b| {
            a.score()
                .total_cmp(&b.score())
                .then(a.epochs.cmp(&b.epochs))
                .then(b.trial.cmp(&a.trial))
        })
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("hyperband evaluated no trials".into()))?;
    Ok(HyperbandOutcome { best, log })
}

fn split_matrix(features: &DrugFeatureMatrix, samples: &[PairSample]) -> Result<nalgebra::DMatrix<f64>> {
    features.pair_matrix(samples.iter().map(|s| (s.pair.first(), s.pair.second())))
}

/// Hyperband where each evaluation trains on the dataset's train split and
/// scores the final epoch on its validation split.
pub fn hyperband(
    space: &SearchSpace,
    params: &HyperbandParams,
    features: &DrugFeatureMatrix,
    dataset: &SideEffectDataset,
    base: &MlpConfig,
    seed: u64,
) -> Result<HyperbandOutcome> {
    let x = split_matrix(features, &dataset.train)?;
    let y: Vec<f64> = dataset.train.iter().map(PairSample::label).collect();
    let vx = split_matrix(features, &dataset.val)?;
    let vy: Vec<bool> = dataset.val.iter().map(|s| s.positive).collect();
    hyperband_with(space, params, base, seed, |config, _| {
        let (_, report) = train_on_matrices(&x, &y, Some((&vx, &vy)), config, &TrainOptions::default())?;
        Ok(report.final_val_auroc())
    })
}

/// Most frequent value; ties go to the smallest under `order`.
fn mode_by<T: Clone, K: Ord>(values: impl Iterator<Item = T>, key: impl Fn(&T) -> K) -> Option<T> {
    let mut counts: BTreeMap<K, (usize, T)> = BTreeMap::new();
    for v in values {
        counts.entry(key(&v)).or_insert((0, v)).0 += 1;
    }
    // BTreeMap iterates keys ascending, so the first maximum is the smallest
    let mut best: Option<(usize, T)> = None;
    for (_, (n, v)) in counts {
        if best.as_ref().is_none_or(|(b, _)| n > *b) {
            best = Some((n, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Per-field mode of the winning architectures. A width is the mode over the
/// winners that have a layer at that position. Ties resolve toward fewer
/// layers, narrower widths, no batch norm and less dropout. Optimizer fields
/// come from `base`.
pub fn consensus_config(winners: &[MlpConfig], base: &MlpConfig) -> Result<MlpConfig> {
    if winners.is_empty() {
        return Err(Error::InvalidConfig("consensus over no winning configurations".into()));
    }
    let layers = mode_by(winners.iter().map(|c| c.layer_widths.len()), |&n| n).expect("non-empty");
    let layer_widths = (0..layers)
        .map(|i| {
            mode_by(winners.iter().filter_map(|c| c.layer_widths.get(i).copied()), |&w| w)
                .expect("some winner has this many layers")
        })
        .collect();
    let use_batch_norm = mode_by(winners.iter().map(|c| c.use_batch_norm), |&b| b).expect("non-empty");
    let dropout_rate = mode_by(winners.iter().map(|c| c.dropout_rate), |d| OrderedRate(*d)).expect("non-empty");
    Ok(MlpConfig {
        layer_widths,
        use_batch_norm,
        dropout_rate,
        ..base.clone()
    })
}

#[derive(Clone, Copy)]
struct OrderedRate(f64);

impl PartialEq for OrderedRate {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for OrderedRate {}
impl PartialOrd for OrderedRate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrderedRate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// `side_effect,bracket,rung,config_json,epochs,val_auroc`.
pub fn write_tuning_log(
    path: impl AsRef<Path>,
    runs: &[(SideEffectId, Vec<TrialResult>)],
    comment: Option<&str>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_commented_writer(path, comment)?;
    let err = |e| csv_error(path, e);
    w.write_record(["side_effect", "bracket", "rung", "config_json", "epochs", "val_auroc"])
        .map_err(err)?;
    for (se, trials) in runs {
        for t in trials {
            let json = serde_json::to_string(&t.config).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            w.write_record([
                se.code.clone(),
                t.bracket.to_string(),
                t.rung.to_string(),
                json,
                t.epochs.to_string(),
                t.val_auroc.map(|a| a.to_string()).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rungs(b: &Bracket) -> Vec<(usize, usize)> {
        b.rungs.iter().map(|r| (r.configs, r.epochs)).collect()
    }

    #[test]
    fn schedule_r9_eta3() {
        let s = bracket_schedule(9, 3).unwrap();
        assert_eq!(s.iter().map(|b| b.s).collect::<Vec<_>>(), [2, 1, 0]);
        assert_eq!(rungs(&s[0]), [(9, 1), (3, 3), (1, 9)]);
        assert_eq!(rungs(&s[1]), [(5, 3), (1, 9)]);
        assert_eq!(rungs(&s[2]), [(3, 9)]);
        assert_eq!(s.iter().map(Bracket::total_epochs).collect::<Vec<_>>(), [27, 24, 27]);
    }

    #[test]
    fn schedule_r1_and_defaults() {
        let s = bracket_schedule(1, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(rungs(&s[0]), [(1, 1)]);
        let d = bracket_schedule(50, 3).unwrap();
        assert_eq!(d[0].s, 3);
        assert_eq!(rungs(&d[0]), [(27, 2), (9, 6), (3, 17), (1, 50)]);
        assert!(bracket_schedule(0, 3).is_err());
        assert!(bracket_schedule(9, 1).is_err());
    }

    fn toy_score(c: &MlpConfig, epochs: usize) -> Result<Option<f64>> {
        // deterministic, architecture-dependent, improves with epochs
        let w: usize = c.layer_widths.iter().sum();
        let base = (w % 7) as f64 / 10.0 + if c.use_batch_norm { 0.05 } else { 0.0 };
        Ok(Some((base + epochs as f64 / 100.0).min(1.0)))
    }

    #[test]
    fn hyperband_follows_schedule_and_halves_by_score() {
        let params = HyperbandParams { max_epochs: 9, eta: 3 };
        let out = hyperband_with(&SearchSpace::default(), &params, &MlpConfig::default(), 7, toy_score).unwrap();
        let count = |b: usize, r: usize| out.log.iter().filter(|t| t.bracket == b && t.rung == r).count();
        assert_eq!(
            [
                count(2, 0),
                count(2, 1),
                count(2, 2),
                count(1, 0),
                count(1, 1),
                count(0, 0)
            ],
            [9, 3, 1, 5, 1, 3]
        );
        assert_eq!(out.log.iter().map(|t| t.epochs).sum::<usize>(), 27 + 24 + 27);
        // survivors of a rung outscore everything eliminated at it
        for b in [2, 1] {
            let first: Vec<_> = out.log.iter().filter(|t| t.bracket == b && t.rung == 0).collect();
            let kept: Vec<usize> = out
                .log
                .iter()
                .filter(|t| t.bracket == b && t.rung == 1)
                .map(|t| t.trial)
                .collect();
            let min_kept = first
                .iter()
                .filter(|t| kept.contains(&t.trial))
                .map(|t| t.score())
                .fold(1.0, f64::min);
            assert!(first
                .iter()
                .filter(|t| !kept.contains(&t.trial))
                .all(|t| t.score() <= min_kept));
        }
        assert!(out.log.iter().all(|t| t.score() <= out.best.score()));
        let again = hyperband_with(&SearchSpace::default(), &params, &MlpConfig::default(), 7, toy_score).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn hyperband_r1_returns_argmax() {
        let params = HyperbandParams { max_epochs: 1, eta: 3 };
        let out = hyperband_with(&SearchSpace::default(), &params, &MlpConfig::default(), 1, toy_score).unwrap();
        assert_eq!(out.log.len(), 1);
        assert_eq!(out.best, out.log[0]);
        assert_eq!(out.best.epochs, 1);
    }

    #[test]
    fn empty_space_rejected() {
        let space = SearchSpace {
            widths: vec![],
            ..SearchSpace::default()
        };
        assert!(hyperband_with(&space, &HyperbandParams::default(), &MlpConfig::default(), 1, toy_score).is_err());
    }

    fn arch(widths: &[usize], bn: bool, dropout: f64) -> MlpConfig {
        MlpConfig {
            layer_widths: widths.to_vec(),
            use_batch_norm: bn,
            dropout_rate: dropout,
            ..MlpConfig::default()
        }
    }

    #[test]
    fn consensus_rules() {
        let base = MlpConfig::default();
        let same = vec![arch(&[300, 100], true, 0.0); 3];
        assert_eq!(consensus_config(&same, &base).unwrap(), same[0]);

        let layers = [
            arch(&[100, 100], true, 0.0),
            arch(&[100, 100], true, 0.0),
            arch(&[100, 100], true, 0.0),
            arch(&[100, 100, 100], true, 0.0),
        ];
        assert_eq!(consensus_config(&layers, &base).unwrap().layer_widths.len(), 2);

        let mixed = [
            arch(&[300, 100], true, 0.3),
            arch(&[300, 100], false, 0.0),
            arch(&[200, 100], true, 0.0),
            arch(&[200], false, 0.3),
        ];
        let c = consensus_config(&mixed, &base).unwrap();
        assert_eq!(c.layer_widths, [200, 100]);
        assert!(!c.use_batch_norm);
        assert_eq!(c.dropout_rate, 0.0);
        assert!(consensus_config(&[], &base).is_err());
    }

    #[test]
    fn tuning_log_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuning_log.csv");
        let params = HyperbandParams { max_epochs: 3, eta: 3 };
        let out = hyperband_with(&SearchSpace::default(), &params, &MlpConfig::default(), 2, toy_score).unwrap();
        write_tuning_log(
            &path,
            &[(SideEffectId::from_code("C1").unwrap(), out.log.clone())],
            Some("seed=2"),
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=2"));
        assert_eq!(
            lines.next(),
            Some("side_effect,bracket,rung,config_json,epochs,val_auroc")
        );
        assert_eq!(lines.count(), out.log.len());
    }
}
