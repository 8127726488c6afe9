use std::collections::BTreeSet;

use log::info;

use super::{drug_set, load_triples, RunConfig};
use crate::error::{Error, Result};
use crate::ids::{DdiTriple, DrugId};
use crate::ingest::table::{create_commented_writer, csv_error};
use crate::ingest::{
    build_cvd_cohort, bundled_cvd_drugs, map_pubchem_to_unii, parse_cvd_list, parse_overrides, parse_unii_records,
    CohortSpec, UniiMatch,
};

pub const COHORT_NAME: &str = "cvd";

#[derive(Debug, Clone, PartialEq)]
pub struct CohortResolution {
    pub spec: CohortSpec,
    /// Triples touching at least one cohort drug.
    pub triples: Vec<DdiTriple>,
    pub unii_match: UniiMatch,
}

/// Maps interaction-data drugs to UNIIs and intersects them with the cohort list.
pub fn resolve_cohort(config: &RunConfig, triples: &[DdiTriple]) -> Result<CohortResolution> {
    let records = parse_unii_records(config.require(&config.inputs.unii_records, "unii-records")?)?.records;
    let overrides = match &config.inputs.overrides {
        Some(path) => parse_overrides(path)?,
        None => Default::default(),
    };
    let list = match &config.inputs.cohort_list {
        Some(path) => parse_cvd_list(path)?,
        None => bundled_cvd_drugs(),
    };
    let uniis: BTreeSet<String> = list.into_iter().map(|d| d.unii).collect();
    let drugs: Vec<DrugId> = drug_set(triples).into_iter().collect();
    let unii_match = map_pubchem_to_unii(&drugs, &records, &overrides);
    let (spec, cohort_triples) = build_cvd_cohort(COHORT_NAME, &uniis, &unii_match.matched, triples)?;
    info!(
        "cohort: {} of {} listed UNIIs resolved, {} triples",
        spec.resolved_drug_ids.len(),
        uniis.len(),
        cohort_triples.len()
    );
    Ok(CohortResolution {
        spec,
        triples: cohort_triples,
        unii_match,
    })
}

/// Writes `cohort/cohort_drugs.csv` (`drug_id,unii`),
/// `cohort/unmatched_drugs.csv` (`drug_id`) and `cohort/ddi.csv`.
pub fn cmd_cohort(config: &RunConfig) -> Result<CohortResolution> {
    config.validate()?;
    let triples = load_triples(config)?;
    let resolution = resolve_cohort(config, &triples)?;
    let dir = config.out_dir.join("cohort");
    let comment = config.provenance();

    let path = dir.join("cohort_drugs.csv");
    let mut w = create_commented_writer(&path, Some(&comment))?;
    w.write_record(["drug_id", "unii"]).map_err(|e| csv_error(&path, e))?;
    for drug in &resolution.spec.resolved_drug_ids {
        w.write_record([drug.as_str(), &resolution.unii_match.matched[drug]])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("unmatched_drugs.csv");
    let mut w = create_commented_writer(&path, Some(&comment))?;
    w.write_record(["drug_id"]).map_err(|e| csv_error(&path, e))?;
    for drug in &resolution.unii_match.unmatched {
        w.write_record([drug.as_str()]).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("ddi.csv");
    let mut w = create_commented_writer(&path, Some(&comment))?;
    w.write_record(["drug_a", "drug_b", "side_effect_code", "side_effect_name"])
        .map_err(|e| csv_error(&path, e))?;
    for t in &resolution.triples {
        w.write_record([
            t.drug_a().as_str(),
            t.drug_b().as_str(),
            &t.side_effect.code,
            &t.side_effect.name,
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(resolution)
}
