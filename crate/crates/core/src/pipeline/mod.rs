//! File-to-file pipeline stages behind the `drivenn` binary.
//!
//! Layout under the output directory:
//!
//! ```text
//! features.bin  feature_dims.csv
//! <scope>/datasets/<code>.csv  <scope>/models/<code>.mdl
//! <scope>/metrics.csv  <scope>/training_log.csv  <scope>/timing.json
//! <scope>/severity_report.csv
//! cross/<models>_on_<tests>.csv
//! tune/tuning_log.csv  tune/consensus.json
//! cohort/cohort_drugs.csv  cohort/unmatched_drugs.csv  cohort/ddi.csv
//! eda.json  sweep.csv
//! ```
//!
//! `<scope>` is `all` or `cohort`. Every CSV starts with a
//! `# seed=<n> config=<digest>` line; `timing.json` is the only output whose
//! content varies between identical runs.

mod analyze;
mod cohort;
mod features;
mod sweep;
mod train;
mod tune;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ids::{DdiTriple, DrugPair, SideEffectId};
use crate::nn::MlpConfig;

pub use analyze::{cmd_analyze_eda, cmd_analyze_severity};
pub use cohort::{cmd_cohort, resolve_cohort, CohortResolution};
pub use features::{build_features, cmd_features};
pub use sweep::{cmd_sweep, SweepRow, SWEEP_THRESHOLDS};
pub use train::{cmd_eval_cross, cmd_train, run_scope, ScopeRun, SideEffectRun};
pub use tune::{cmd_tune, TuneOptions};

pub const DATASET_STAGE: &str = "dataset";
pub const TRAIN_STAGE: &str = "train";
pub const TUNE_STAGE: &str = "tune";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scope {
    /// Triples over all drugs; negatives from all pairs.
    All,
    /// Triples touching a cohort drug; negatives from pairs with a cohort drug.
    Cohort,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Cohort => "cohort",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InputPaths {
    pub ddi: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub mono: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub unii_records: Option<PathBuf>,
    pub overrides: Option<PathBuf>,
    /// Defaults to the bundled cardiovascular list.
    pub cohort_list: Option<PathBuf>,
    pub saedr: Option<PathBuf>,
}

/// Settings shared by every stage. The digest echoed into outputs covers all
/// fields except the output directory and worker count, neither of which
/// changes results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub inputs: InputPaths,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub pca_threshold: f64,
    pub min_positive_pairs: usize,
    pub seed: u64,
    #[serde(skip)]
    pub workers: Option<usize>,
    pub no_embeddings: bool,
    pub normalize_before_pca: bool,
    pub best_val_checkpoint: bool,
    pub neg_ratio: usize,
    /// Architecture and optimizer; its seed is replaced per side effect.
    pub model: MlpConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: InputPaths::default(),
            out_dir: PathBuf::from("out"),
            pca_threshold: 0.95,
            min_positive_pairs: 500,
            seed: 42,
            workers: None,
            no_embeddings: false,
            normalize_before_pca: false,
            best_val_checkpoint: false,
            neg_ratio: 1,
            model: MlpConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pca_threshold > 0.0 && self.pca_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "PCA variance threshold {} outside (0, 1]",
                self.pca_threshold
            )));
        }
        if self.neg_ratio == 0 {
            return Err(Error::InvalidConfig("negative ratio must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        self.model.validate()
    }

    /// First 16 hex digits of the SHA-256 of the serialized config.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }

    /// Comment line body for output CSVs.
    pub fn provenance(&self) -> String {
        format!("seed={} config={}", self.seed, self.digest())
    }

    pub fn scope_dir(&self, scope: Scope) -> PathBuf {
        self.out_dir.join(scope.as_str())
    }

    pub fn features_path(&self) -> PathBuf {
        self.out_dir.join("features.bin")
    }

    pub(crate) fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("--{flag} is required for this command")))
    }

    /// Runs `f` on a rayon pool sized by `workers` (default: all cores).
    pub(crate) fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Side-effect code as a file stem; anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(code: &str) -> String {
    code.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Positive pairs per side effect, keyed in code order.
pub(crate) fn positives_by_side_effect(triples: &[DdiTriple]) -> BTreeMap<SideEffectId, HashSet<DrugPair>> {
    let mut map: BTreeMap<SideEffectId, HashSet<DrugPair>> = BTreeMap::new();
    for t in triples {
        map.entry(t.side_effect.clone()).or_default().insert(t.pair.clone());
    }
    map
}

pub(crate) fn load_triples(config: &RunConfig) -> Result<Vec<DdiTriple>> {
    let path = config.require(&config.inputs.ddi, "ddi")?;
    Ok(crate::ingest::parse_ddi_records(path)?.records)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn drug_set(triples: &[DdiTriple]) -> BTreeSet<crate::ids::DrugId> {
    triples
        .iter()
        .flat_map(|t| [t.drug_a().clone(), t.drug_b().clone()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_location_and_workers() {
        let a = RunConfig::default();
        let b = RunConfig {
            out_dir: "elsewhere".into(),
            workers: Some(3),
            ..RunConfig::default()
        };
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(a.digest(), c.digest());
        assert!(a.provenance().starts_with("seed=42 config="));
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        for bad in [
            RunConfig {
                pca_threshold: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                pca_threshold: 1.5,
                ..RunConfig::default()
            },
            RunConfig {
                neg_ratio: 0,
                ..RunConfig::default()
            },
            RunConfig {
                workers: Some(0),
                ..RunConfig::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn stems() {
        assert_eq!(file_stem("C0018681"), "C0018681");
        assert_eq!(file_stem("a/b c"), "a_b_c");
    }
}
