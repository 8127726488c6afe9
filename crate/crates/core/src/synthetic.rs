//! Reproducible synthetic interaction data with planted linear rules, for
//! end-to-end tests and examples.
//!
//! Each drug has a latent vector `x ~ N(0, I)`. Side effect `k` has a unit
//! direction `w_k`; its positive pairs are the `positives_per_side_effect`
//! pairs with the largest `w_k · (x_a + x_b)`, so the labels are linearly
//! separable in pair-vector space. Target genes and mono side effects are
//! thresholded latent coordinates, so PCA over those blocks recovers part of
//! the same signal.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::features::{write_embeddings, BlockDims, DrugFeatureMatrix, EmbeddingTable};
use crate::ids::{DdiTriple, DrugId, DrugPair, SideEffectId};
use crate::ingest::{write_ddi_records, write_mono_records, write_target_records};
use crate::seed::stage_rng;

const SYNTHETIC_STAGE: &str = "synthetic";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub drugs: usize,
    pub features: usize,
    pub side_effects: usize,
    pub positives_per_side_effect: usize,
    /// Drugs (from the start of the order) forming the fixture cohort.
    pub cohort_drugs: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            drugs: 200,
            features: 20,
            side_effects: 10,
            positives_per_side_effect: 300,
            cohort_drugs: 15,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub spec: SyntheticSpec,
    pub drugs: Vec<DrugId>,
    /// `drugs × features`.
    pub latent: DMatrix<f64>,
    pub directions: Vec<DVector<f64>>,
    pub side_effects: Vec<SideEffectId>,
    pub triples: Vec<DdiTriple>,
    pub targets: Vec<(DrugId, String)>,
    pub mono: Vec<(DrugId, SideEffectId)>,
    /// Severity score per side effect, in `[0, 1)`.
    pub saedr: Vec<(SideEffectId, f64)>,
}

pub fn drug_id(index: usize) -> DrugId {
    DrugId::new(format!("CID{:09}", index + 1)).expect("non-empty")
}

fn unii(index: usize) -> String {
    format!("SYN{:07}", index + 1)
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticData {
    let mut rng = stage_rng(spec.seed, SYNTHETIC_STAGE, "");
    let drugs: Vec<DrugId> = (0..spec.drugs).map(drug_id).collect();
    let latent = DMatrix::from_fn(spec.drugs, spec.features, |_, _| rng.sample::<f64, _>(StandardNormal));

    let pairs: Vec<(usize, usize)> = (0..spec.drugs)
        .flat_map(|i| (i + 1..spec.drugs).map(move |j| (i, j)))
        .collect();
    let mut directions = Vec::with_capacity(spec.side_effects);
    let mut side_effects = Vec::with_capacity(spec.side_effects);
    let mut triples = Vec::new();
    for k in 0..spec.side_effects {
        let w = DVector::from_fn(spec.features, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let projection = &latent * &w;
        let mut scored: Vec<(f64, usize)> = pairs
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| (projection[i] + projection[j], p))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let se = SideEffectId::new(format!("C{:07}", k + 1), format!("synthetic effect {}", k + 1)).expect("non-empty");
        for &(_, p) in scored.iter().take(spec.positives_per_side_effect) {
            let (i, j) = pairs[p];
            triples.push(DdiTriple::new(drugs[i].clone(), drugs[j].clone(), se.clone()).expect("distinct"));
        }
        directions.push(w);
        side_effects.push(se);
    }

    let mut targets = Vec::new();
    let mut mono = Vec::new();
    for (i, drug) in drugs.iter().enumerate() {
        for f in 0..spec.features {
            let v = latent[(i, f)];
            if v > 0.3 {
                targets.push((drug.clone(), format!("GENE{f:03}")));
            }
            if v < -0.5 {
                mono.push((
                    drug.clone(),
                    SideEffectId::new(format!("M{f:04}"), format!("mono effect {f}")).expect("non-empty"),
                ));
            }
        }
        // background noise shared by many drugs
        if rng.gen_bool(0.4) {
            mono.push((
                drug.clone(),
                SideEffectId::new("M9999", "common mono effect").expect("non-empty"),
            ));
        }
    }
    let saedr = side_effects.iter().map(|se| (se.clone(), rng.gen::<f64>())).collect();
    SyntheticData {
        spec: spec.clone(),
        drugs,
        latent,
        directions,
        side_effects,
        triples,
        targets,
        mono,
        saedr,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePaths {
    pub ddi: PathBuf,
    pub targets: PathBuf,
    pub mono: PathBuf,
    pub embeddings: PathBuf,
    pub unii: PathBuf,
    pub cohort: PathBuf,
    pub saedr: PathBuf,
}

impl SyntheticData {
    /// Latent vectors as an embedding-only feature matrix.
    pub fn feature_matrix(&self) -> DrugFeatureMatrix {
        let dims = BlockDims {
            embedding: self.spec.features,
            protein: 0,
            mono: 0,
        };
        DrugFeatureMatrix::new(self.drugs.clone(), dims, self.latent.clone()).expect("shapes agree")
    }

    pub fn embeddings(&self) -> EmbeddingTable {
        EmbeddingTable {
            dim: self.spec.features,
            rows: self
                .drugs
                .iter()
                .enumerate()
                .map(|(i, d)| (d.clone(), self.latent.row(i).iter().copied().collect()))
                .collect(),
        }
    }

    pub fn positives(&self, side_effect: &SideEffectId) -> HashSet<DrugPair> {
        self.triples
            .iter()
            .filter(|t| &t.side_effect == side_effect)
            .map(|t| t.pair.clone())
            .collect()
    }

    pub fn cohort_drugs(&self) -> BTreeSet<DrugId> {
        self.drugs.iter().take(self.spec.cohort_drugs).cloned().collect()
    }

    /// Writes every input file the pipeline reads into `dir`.
    pub fn write_fixture(&self, dir: impl AsRef<Path>) -> Result<FixturePaths> {
        let dir = dir.as_ref();
        let paths = FixturePaths {
            ddi: dir.join("ddi.csv"),
            targets: dir.join("targets.csv"),
            mono: dir.join("mono.csv"),
            embeddings: dir.join("embeddings.csv"),
            unii: dir.join("unii_records.tsv"),
            cohort: dir.join("cohort_drugs.tsv"),
            saedr: dir.join("saedr.tsv"),
        };
        write_ddi_records(&paths.ddi, &self.triples)?;
        write_target_records(&paths.targets, &self.targets)?;
        write_mono_records(&paths.mono, &self.mono)?;
        write_embeddings(&paths.embeddings, &self.embeddings())?;

        let mut records = String::from("unii\tpubchem_id\tinchikey\tname\n");
        for i in 0..self.drugs.len() {
            records.push_str(&format!("{}\t{}\t\tdrug {}\n", unii(i), i + 1, i + 1));
        }
        let mut cohort = String::from("unii\tname\n");
        for i in 0..self.spec.cohort_drugs.min(self.drugs.len()) {
            cohort.push_str(&format!("{}\tdrug {}\n", unii(i), i + 1));
        }
        let mut saedr = String::from("side_effect_code\tscore\n");
        for (se, s) in &self.saedr {
            saedr.push_str(&format!("{}\t{s}\n", se.code));
        }
        for (path, text) in [(&paths.unii, records), (&paths.cohort, cohort), (&paths.saedr, saedr)] {
            std::fs::write(path, text).map_err(|e| crate::Error::io(path, e))?;
        }
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            drugs: 30,
            features: 5,
            side_effects: 3,
            positives_per_side_effect: 40,
            cohort_drugs: 4,
            seed: 1,
        }
    }

    #[test]
    fn shapes_and_counts() {
        let d = generate(&small());
        assert_eq!(d.latent.shape(), (30, 5));
        assert_eq!(d.triples.len(), 120);
        for se in &d.side_effects {
            assert_eq!(d.positives(se).len(), 40);
        }
        assert_eq!(d.feature_matrix().width(), 5);
    }

    #[test]
    fn positives_follow_the_planted_rule() {
        let d = generate(&small());
        let fm = d.feature_matrix();
        for (se, w) in d.side_effects.iter().zip(&d.directions) {
            let pos = d.positives(se);
            let min_pos = pos
                .iter()
                .map(|p| fm.pair_vector(p.first(), p.second()).unwrap().dot(w))
                .fold(f64::INFINITY, f64::min);
            for i in 0..30 {
                for j in i + 1..30 {
                    let pair = DrugPair::new(d.drugs[i].clone(), d.drugs[j].clone()).unwrap();
                    if !pos.contains(&pair) {
                        assert!(fm.pair_vector(pair.first(), pair.second()).unwrap().dot(w) <= min_pos);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small());
        let b = generate(&small());
        assert_eq!(a.latent, b.latent);
        assert_eq!(a.triples, b.triples);
        assert_ne!(generate(&SyntheticSpec { seed: 2, ..small() }).latent, a.latent);
    }

    #[test]
    fn fixture_files_parse() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate(&small());
        let p = d.write_fixture(dir.path()).unwrap();
        let ddi = crate::ingest::parse_ddi_records(&p.ddi).unwrap();
        assert_eq!(ddi.records.len(), d.triples.len());
        let emb = crate::features::parse_embeddings(&p.embeddings).unwrap();
        assert_eq!(emb, d.embeddings());
        let recs = crate::ingest::parse_unii_records(&p.unii).unwrap().records;
        let m = crate::ingest::map_pubchem_to_unii(&d.drugs, &recs, &Default::default());
        assert!(m.unmatched.is_empty());
        assert_eq!(crate::ingest::parse_cvd_list(&p.cohort).unwrap().len(), 4);
        assert_eq!(crate::ingest::parse_saedr_file(&p.saedr).unwrap().records.len(), 3);
    }
}
