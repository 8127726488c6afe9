//! Parses the input tables, reconciles drug identifiers to UNIIs, resolves a
//! cohort and prints descriptive statistics.
//!
//! ```text
//! cargo run --example ingest_and_cohort
//! ```

use std::collections::BTreeSet;

use drivenn::eval::{eda_stats, DEFAULT_TOP_K};
use drivenn::ingest::{
    build_cvd_cohort, filter_side_effects, map_pubchem_to_unii, parse_cvd_list, parse_ddi_records, parse_mono_records,
    parse_unii_records,
};
use drivenn::synthetic::{generate, SyntheticSpec};
use drivenn::DrugId;

fn main() -> drivenn::Result<()> {
    let dir = std::env::temp_dir().join("drivenn-ingest-example");
    let paths = generate(&SyntheticSpec::default()).write_fixture(&dir)?;

    let ddi = parse_ddi_records(&paths.ddi)?;
    println!(
        "{} triples ({} duplicates, {} self pairs dropped)",
        ddi.records.len(),
        ddi.warnings.duplicates,
        ddi.warnings.self_pairs
    );
    let (kept, _) = filter_side_effects(&ddi.records, 250);
    println!("{} side effects with at least 250 pairs", kept.len());

    let drugs: Vec<DrugId> = ddi
        .records
        .iter()
        .flat_map(|t| [t.drug_a().clone(), t.drug_b().clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let records = parse_unii_records(&paths.unii)?.records;
    let matched = map_pubchem_to_unii(&drugs, &records, &Default::default());
    println!(
        "{} drugs matched to a UNII, {} unmatched",
        matched.matched.len(),
        matched.unmatched.len()
    );

    let uniis: BTreeSet<String> = parse_cvd_list(&paths.cohort)?.into_iter().map(|d| d.unii).collect();
    let (cohort, cohort_triples) = build_cvd_cohort("example", &uniis, &matched.matched, &ddi.records)?;
    println!(
        "cohort: {} drugs touching {} triples",
        cohort.resolved_drug_ids.len(),
        cohort_triples.len()
    );

    let mono = parse_mono_records(&paths.mono)?.records;
    let eda = eda_stats(&ddi.records, &mono, &cohort, DEFAULT_TOP_K);
    println!(
        "median side effects per interacting pair: all {:?}, any cohort drug {:?}, cohort only {:?}",
        eda.median_all_pairs, eda.median_cohort_any, eda.median_cohort_only
    );
    println!("top mono side effects shared with the cohort: {:?}", eda.overlap);
    Ok(())
}
