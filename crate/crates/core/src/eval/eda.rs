use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::Serialize;

use super::median;
use crate::error::{Error, Result};
use crate::ids::{DdiTriple, DrugId, DrugPair, SideEffectId};
use crate::ingest::CohortSpec;

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonoCount {
    pub code: String,
    pub name: String,
    pub drugs: usize,
}

/// Descriptive statistics of the interaction data and a cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdaReport {
    /// Median side-effect count over pairs with at least one interaction.
    pub median_all_pairs: Option<f64>,
    /// Same, restricted to pairs with at least one cohort drug.
    pub median_cohort_any: Option<f64>,
    /// Same, restricted to pairs of two cohort drugs.
    pub median_cohort_only: Option<f64>,
    pub interacting_pairs: usize,
    pub top_mono_all: Vec<MonoCount>,
    pub top_mono_cohort: Vec<MonoCount>,
    /// Codes appearing in both top lists, sorted.
    pub overlap: Vec<String>,
}

fn top_mono<'a>(mono: impl Iterator<Item = &'a (DrugId, SideEffectId)>, k: usize) -> Vec<MonoCount> {
    let mut drugs: BTreeMap<&SideEffectId, BTreeSet<&DrugId>> = BTreeMap::new();
    for (d, se) in mono {
        drugs.entry(se).or_default().insert(d);
    }
    let mut counts: Vec<MonoCount> = drugs
        .into_iter()
        .map(|(se, ds)| MonoCount {
            code: se.code.clone(),
            name: se.name.clone(),
            drugs: ds.len(),
        })
        .collect();
    // ties resolve by code
    counts.sort_by(|a, b| b.drugs.cmp(&a.drugs).then_with(|| a.code.cmp(&b.code)));
    counts.truncate(k);
    counts
}

pub fn eda_stats(
    triples: &[DdiTriple],
    mono: &[(DrugId, SideEffectId)],
    cohort: &CohortSpec,
    top_k: usize,
) -> EdaReport {
    let mut per_pair: HashMap<&DrugPair, BTreeSet<&SideEffectId>> = HashMap::new();
    for t in triples {
        per_pair.entry(&t.pair).or_default().insert(&t.side_effect);
    }
    let (mut all, mut any, mut only) = (Vec::new(), Vec::new(), Vec::new());
    for (pair, ses) in &per_pair {
        let n = ses.len() as f64;
        all.push(n);
        let hits = usize::from(cohort.contains(pair.first())) + usize::from(cohort.contains(pair.second()));
        if hits >= 1 {
            any.push(n);
        }
        if hits == 2 {
            only.push(n);
        }
    }
    let top_mono_all = top_mono(mono.iter(), top_k);
    let top_mono_cohort = top_mono(mono.iter().filter(|(d, _)| cohort.contains(d)), top_k);
    let cohort_codes: BTreeSet<&str> = top_mono_cohort.iter().map(|m| m.code.as_str()).collect();
    let overlap = top_mono_all
        .iter()
        .filter(|m| cohort_codes.contains(m.code.as_str()))
        .map(|m| m.code.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    EdaReport {
        median_all_pairs: median(&all),
        median_cohort_any: median(&any),
        median_cohort_only: median(&only),
        interacting_pairs: per_pair.len(),
        top_mono_all,
        top_mono_cohort,
        overlap,
    }
}

/// Pretty-printed JSON.
pub fn write_eda_report(path: impl AsRef<Path>, report: &EdaReport) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DrugId {
        DrugId::new(s).unwrap()
    }

    fn t(a: &str, b: &str, code: &str) -> DdiTriple {
        DdiTriple::new(d(a), d(b), SideEffectId::from_code(code).unwrap()).unwrap()
    }

    fn cohort(ids: &[&str]) -> CohortSpec {
        CohortSpec {
            name: "test".into(),
            drug_uniis: BTreeSet::new(),
            resolved_drug_ids: ids.iter().map(|s| d(s)).collect(),
        }
    }

    #[test]
    fn uniform_counts() {
        let triples: Vec<_> = [("A", "B"), ("A", "C"), ("B", "C")]
            .iter()
            .flat_map(|(a, b)| ["X", "Y"].map(|c| t(a, b, c)))
            .collect();
        let r = eda_stats(&triples, &[], &cohort(&["A", "B"]), 10);
        assert_eq!(r.median_all_pairs, Some(2.0));
        assert_eq!(r.median_cohort_any, Some(2.0));
        assert_eq!(r.median_cohort_only, Some(2.0));
    }

    #[test]
    fn four_drug_fixture() {
        // AB:3  AC:1  BD:2  CD:4 ; cohort {A, B}
        let mut triples = vec![];
        for (a, b, n) in [("A", "B", 3), ("A", "C", 1), ("B", "D", 2), ("C", "D", 4)] {
            for k in 0..n {
                triples.push(t(a, b, &format!("S{k}")));
            }
        }
        let r = eda_stats(&triples, &[], &cohort(&["A", "B"]), 10);
        assert_eq!(r.median_all_pairs, Some(2.5));
        assert_eq!(r.median_cohort_any, Some(2.0));
        assert_eq!(r.median_cohort_only, Some(3.0));
        assert_eq!(r.interacting_pairs, 4);
    }

    #[test]
    fn top_mono_overlap() {
        let se = |c: &str| SideEffectId::from_code(c).unwrap();
        let mono: Vec<(DrugId, SideEffectId)> = [
            ("A", "M1"),
            ("B", "M1"),
            ("C", "M1"),
            ("C", "M2"),
            ("D", "M2"),
            ("A", "M3"),
            ("A", "M3"),
        ]
        .iter()
        .map(|(x, c)| (d(x), se(c)))
        .collect();
        let r = eda_stats(&[], &mono, &cohort(&["A", "D"]), 2);
        assert_eq!(
            r.top_mono_all.iter().map(|m| m.code.as_str()).collect::<Vec<_>>(),
            ["M1", "M2"]
        );
        assert_eq!(r.top_mono_all[0].drugs, 3);
        // cohort: M1 {A}, M2 {D}, M3 {A} → ties by code
        assert_eq!(
            r.top_mono_cohort.iter().map(|m| m.code.as_str()).collect::<Vec<_>>(),
            ["M1", "M2"]
        );
        assert_eq!(r.overlap, ["M1", "M2"]);
        assert_eq!(r.median_all_pairs, None);
    }
}
