use std::collections::HashSet;
use std::path::Path;

use log::warn;

use super::table::{create_writer, for_each_row, Column};
use super::{ParseWarnings, Parsed};
use crate::error::{Error, Result};
use crate::ids::{DdiTriple, DrugId, SideEffectId};

fn drug_field(path: &Path, line: u64, column: &str, value: &str) -> Result<DrugId> {
    DrugId::new(value).ok_or_else(|| Error::format(path, line, format!("empty `{column}`")))
}

fn side_effect_field(path: &Path, line: u64, code: &str, name: &str) -> Result<SideEffectId> {
    SideEffectId::new(code, name).ok_or_else(|| Error::format(path, line, "empty `side_effect_code`"))
}

/// Reads `drug_a,drug_b,side_effect_code,side_effect_name` rows into canonical
/// triples, keeping the first occurrence of each (pair, side effect).
pub fn parse_ddi_records(path: impl AsRef<Path>) -> Result<Parsed<Vec<DdiTriple>>> {
    let path = path.as_ref();
    let columns = [
        Column::Required("drug_a"),
        Column::Required("drug_b"),
        Column::Required("side_effect_code"),
        Column::Required("side_effect_name"),
    ];
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    let mut warnings = ParseWarnings::default();
    for_each_row(path, b',', &columns, |line, f| {
        let a = drug_field(path, line, "drug_a", f[0])?;
        let b = drug_field(path, line, "drug_b", f[1])?;
        let side_effect = side_effect_field(path, line, f[2], f[3])?;
        match DdiTriple::new(a, b, side_effect) {
            None => warnings.self_pairs += 1,
            Some(triple) => {
                if seen.insert((triple.pair.clone(), triple.side_effect.code.clone())) {
                    triples.push(triple);
                } else {
                    warnings.duplicates += 1;
                }
            }
        }
        Ok(())
    })?;
    if !warnings.is_clean() {
        warn!(
            "{}: dropped {} self-pair and {} duplicate rows",
            path.display(),
            warnings.self_pairs,
            warnings.duplicates
        );
    }
    Ok(Parsed {
        records: triples,
        warnings,
    })
}

/// Reads `drug,gene` drug-protein rows.
pub fn parse_target_records(path: impl AsRef<Path>) -> Result<Parsed<Vec<(DrugId, String)>>> {
    let path = path.as_ref();
    let columns = [Column::Required("drug"), Column::Required("gene")];
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut warnings = ParseWarnings::default();
    for_each_row(path, b',', &columns, |line, f| {
        let drug = drug_field(path, line, "drug", f[0])?;
        if f[1].is_empty() {
            return Err(Error::format(path, line, "empty `gene`"));
        }
        let pair = (drug, f[1].to_string());
        if seen.insert(pair.clone()) {
            pairs.push(pair);
        } else {
            warnings.duplicates += 1;
        }
        Ok(())
    })?;
    if warnings.duplicates > 0 {
        warn!("{}: dropped {} duplicate rows", path.display(), warnings.duplicates);
    }
    Ok(Parsed {
        records: pairs,
        warnings,
    })
}

/// Reads `drug,side_effect_code,side_effect_name` single-drug side effect rows.
pub fn parse_mono_records(path: impl AsRef<Path>) -> Result<Parsed<Vec<(DrugId, SideEffectId)>>> {
    let path = path.as_ref();
    let columns = [
        Column::Required("drug"),
        Column::Required("side_effect_code"),
        Column::Required("side_effect_name"),
    ];
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut warnings = ParseWarnings::default();
    for_each_row(path, b',', &columns, |line, f| {
        let drug = drug_field(path, line, "drug", f[0])?;
        let side_effect = side_effect_field(path, line, f[1], f[2])?;
        if seen.insert((drug.clone(), side_effect.code.clone())) {
            pairs.push((drug, side_effect));
        } else {
            warnings.duplicates += 1;
        }
        Ok(())
    })?;
    if warnings.duplicates > 0 {
        warn!("{}: dropped {} duplicate rows", path.display(), warnings.duplicates);
    }
    Ok(Parsed {
        records: pairs,
        warnings,
    })
}

pub fn write_ddi_records(path: impl AsRef<Path>, triples: &[DdiTriple]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path, b',')?;
    let io = |e: csv::Error| super::table::csv_error(path, e);
    w.write_record(["drug_a", "drug_b", "side_effect_code", "side_effect_name"])
        .map_err(io)?;
    for t in triples {
        w.write_record([
            t.drug_a().as_str(),
            t.drug_b().as_str(),
            &t.side_effect.code,
            &t.side_effect.name,
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_target_records(path: impl AsRef<Path>, pairs: &[(DrugId, String)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path, b',')?;
    let io = |e: csv::Error| super::table::csv_error(path, e);
    w.write_record(["drug", "gene"]).map_err(io)?;
    for (drug, gene) in pairs {
        w.write_record([drug.as_str(), gene]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_mono_records(path: impl AsRef<Path>, pairs: &[(DrugId, SideEffectId)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path, b',')?;
    let io = |e: csv::Error| super::table::csv_error(path, e);
    w.write_record(["drug", "side_effect_code", "side_effect_name"])
        .map_err(io)?;
    for (drug, se) in pairs {
        w.write_record([drug.as_str(), &se.code, &se.name]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn fixture(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ddi_row_maps_fields() {
        let f = fixture("drug_a,drug_b,side_effect_code,side_effect_name\nCID1,CID2,C001,hypertension\n");
        let parsed = parse_ddi_records(f.path()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        let t = &parsed.records[0];
        assert_eq!((t.drug_a().as_str(), t.drug_b().as_str()), ("CID1", "CID2"));
        assert_eq!(t.side_effect.code, "C001");
        assert_eq!(t.side_effect.name, "hypertension");
    }

    #[test]
    fn both_orientations_collapse() {
        let f = fixture(
            "drug_a,drug_b,side_effect_code,side_effect_name\nCID2,CID1,C001,x\nCID1,CID2,C001,x\nCID3,CID3,C001,x\n",
        );
        let parsed = parse_ddi_records(f.path()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].drug_a().as_str(), "CID1");
        assert_eq!(
            parsed.warnings,
            ParseWarnings {
                duplicates: 1,
                self_pairs: 1
            }
        );
    }

    #[test]
    fn missing_column_is_named() {
        let f = fixture("drug_a,drug_b,side_effect_code\nCID1,CID2,C1\n");
        match parse_ddi_records(f.path()) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "side_effect_name"),
            other => panic!("expected missing column, got {other:?}"),
        }
    }

    #[test]
    fn targets_dedupe() {
        let f = fixture("drug,gene\nCID1,GENE7\nCID1,GENE7\nCID2,GENE7\n");
        let parsed = parse_target_records(f.path()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.records[0], (DrugId::new("CID1").unwrap(), "GENE7".to_string()));
        assert_eq!(parsed.warnings.duplicates, 1);
    }

    #[test]
    fn mono_dedupe() {
        let f = fixture(
            "drug,side_effect_code,side_effect_name\nCID1,C9,nausea\nCID1,C9,nausea\nCID1,C8,rash\nCID2,C9,nausea\nCID3,C7,fever\n",
        );
        let parsed = parse_mono_records(f.path()).unwrap();
        assert_eq!(parsed.records.len(), 4);
        assert_eq!(parsed.records[0].1.name, "nausea");
    }

    #[test]
    fn empty_drug_is_a_format_error_with_line() {
        let f = fixture("drug,gene\nCID1,G1\n,G2\n");
        match parse_target_records(f.path()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
