//! UNII reconciliation: PubChem-identified drugs matched to FDA substance
//! records, with a static overrides table standing in for manual registry
//! lookups, then intersected with a cohort's UNII list.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use log::warn;

use super::table::{for_each_row, Column};
use super::{ParseWarnings, Parsed};
use crate::error::{Error, Result};
use crate::ids::{DdiTriple, DrugId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityRecord {
    pub unii: String,
    pub pubchem_id: Option<String>,
    pub inchikey: Option<String>,
    pub name: Option<String>,
}

fn optional(field: &str) -> Option<String> {
    (!field.is_empty()).then(|| field.to_string())
}

/// Reads the `unii`, `pubchem_id`, `inchikey`, `name` TSV. Repeated UNIIs keep
/// the first row.
pub fn parse_unii_records(path: impl AsRef<Path>) -> Result<Parsed<Vec<IdentityRecord>>> {
    let path = path.as_ref();
    let columns = [
        Column::Required("unii"),
        Column::Optional("pubchem_id"),
        Column::Optional("inchikey"),
        Column::Optional("name"),
    ];
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut warnings = ParseWarnings::default();
    for_each_row(path, b'\t', &columns, |line, f| {
        if f[0].is_empty() {
            return Err(Error::format(path, line, "empty `unii`"));
        }
        if !seen.insert(f[0].to_string()) {
            warnings.duplicates += 1;
            return Ok(());
        }
        records.push(IdentityRecord {
            unii: f[0].to_string(),
            pubchem_id: optional(f[1]),
            inchikey: optional(f[2]),
            name: optional(f[3]),
        });
        Ok(())
    })?;
    if warnings.duplicates > 0 {
        warn!("{}: {} repeated UNII rows ignored", path.display(), warnings.duplicates);
    }
    Ok(Parsed { records, warnings })
}

/// Reads `drug_id<TAB>unii` manual resolutions.
pub fn parse_overrides(path: impl AsRef<Path>) -> Result<BTreeMap<DrugId, String>> {
    let path = path.as_ref();
    let mut overrides = BTreeMap::new();
    for_each_row(
        path,
        b'\t',
        &[Column::Required("drug_id"), Column::Required("unii")],
        |line, f| {
            let drug = DrugId::new(f[0]).ok_or_else(|| Error::format(path, line, "empty `drug_id`"))?;
            if f[1].is_empty() {
                return Err(Error::format(path, line, "empty `unii`"));
            }
            overrides.insert(drug, f[1].to_string());
            Ok(())
        },
    )?;
    Ok(overrides)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UniiMatch {
    pub matched: BTreeMap<DrugId, String>,
    /// Drugs with neither a record match nor an override, in input order.
    pub unmatched: Vec<DrugId>,
    /// Overrides that were applied although their UNII has no record.
    pub unknown_override_uniis: Vec<(DrugId, String)>,
}

pub fn map_pubchem_to_unii(
    drugs: &[DrugId],
    records: &[IdentityRecord],
    manual_overrides: &BTreeMap<DrugId, String>,
) -> UniiMatch {
    let mut by_cid: HashMap<u64, &str> = HashMap::new();
    for r in records {
        let cid = r
            .pubchem_id
            .as_deref()
            .and_then(DrugId::new)
            .and_then(|p| p.pubchem_number());
        if let Some(cid) = cid {
            by_cid.entry(cid).or_insert(&r.unii);
        }
    }
    let known_uniis: HashSet<&str> = records.iter().map(|r| r.unii.as_str()).collect();

    let mut result = UniiMatch::default();
    let mut visited = HashSet::new();
    for drug in drugs {
        if !visited.insert(drug) {
            continue;
        }
        if let Some(unii) = drug.pubchem_number().and_then(|cid| by_cid.get(&cid)) {
            result.matched.insert(drug.clone(), unii.to_string());
        } else if let Some(unii) = manual_overrides.get(drug) {
            if !known_uniis.contains(unii.as_str()) {
                warn!("override {drug} -> {unii}: UNII not present in records");
                result.unknown_override_uniis.push((drug.clone(), unii.clone()));
            }
            result.matched.insert(drug.clone(), unii.clone());
        } else {
            result.unmatched.push(drug.clone());
        }
    }
    result
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortSpec {
    pub name: String,
    pub drug_uniis: BTreeSet<String>,
    pub resolved_drug_ids: BTreeSet<DrugId>,
}

impl CohortSpec {
    pub fn contains(&self, drug: &DrugId) -> bool {
        self.resolved_drug_ids.contains(drug)
    }
}

/// Resolves the cohort's UNIIs to interaction-data drugs and keeps every triple
/// touching at least one of them.
pub fn build_cvd_cohort(
    name: &str,
    cvd_uniis: &BTreeSet<String>,
    matched: &BTreeMap<DrugId, String>,
    triples: &[DdiTriple],
) -> Result<(CohortSpec, Vec<DdiTriple>)> {
    let in_data: HashSet<&DrugId> = triples.iter().flat_map(|t| [t.drug_a(), t.drug_b()]).collect();
    let resolved: BTreeSet<DrugId> = matched
        .iter()
        .filter(|(drug, unii)| cvd_uniis.contains(*unii) && in_data.contains(drug))
        .map(|(drug, _)| drug.clone())
        .collect();
    if resolved.is_empty() {
        return Err(Error::EmptyCohort(name.to_string()));
    }
    let cohort_triples = triples
        .iter()
        .filter(|t| resolved.contains(t.drug_a()) || resolved.contains(t.drug_b()))
        .cloned()
        .collect();
    Ok((
        CohortSpec {
            name: name.to_string(),
            drug_uniis: cvd_uniis.clone(),
            resolved_drug_ids: resolved,
        },
        cohort_triples,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvdDrug {
    pub unii: String,
    pub name: String,
}

const BUNDLED_CVD: &str = include_str!("../../assets/cvd_drugs.tsv");

fn parse_cvd_text(text: &str) -> Vec<CvdDrug> {
    text.lines()
        .skip(1)
        .filter_map(|line| {
            let (unii, name) = line.split_once('\t')?;
            Some(CvdDrug {
                unii: unii.trim().to_string(),
                name: name.trim().to_string(),
            })
        })
        .filter(|d| !d.unii.is_empty())
        .collect()
}

/// The cardiovascular treatment drugs found in the interaction data, by UNII.
pub fn bundled_cvd_drugs() -> Vec<CvdDrug> {
    parse_cvd_text(BUNDLED_CVD)
}

/// Reads a `unii<TAB>name` drug list of the same shape as the bundled one.
pub fn parse_cvd_list(path: impl AsRef<Path>) -> Result<Vec<CvdDrug>> {
    let path = path.as_ref();
    let mut drugs = Vec::new();
    for_each_row(
        path,
        b'\t',
        &[Column::Required("unii"), Column::Optional("name")],
        |line, f| {
            if f[0].is_empty() {
                return Err(Error::format(path, line, "empty `unii`"));
            }
            drugs.push(CvdDrug {
                unii: f[0].to_string(),
                name: f[1].to_string(),
            });
            Ok(())
        },
    )?;
    Ok(drugs)
}
