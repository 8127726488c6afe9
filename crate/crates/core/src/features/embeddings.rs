use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ids::DrugId;
use crate::ingest::table::{create_writer, csv_error};

/// Per-drug molecular structure embeddings, all of width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: BTreeMap<DrugId, Vec<f64>>,
}

/// Reads `drug_id,e0,e1,...,e{dim-1}`.
pub fn parse_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.get(0).map(str::trim) != Some("drug_id") {
        return Err(Error::MissingColumn {
            path: path.to_path_buf(),
            column: "drug_id".into(),
        });
    }
    let dim = headers.len() - 1;
    for (i, h) in headers.iter().skip(1).enumerate() {
        if h.trim() != format!("e{i}") {
            return Err(Error::format(
                path,
                1,
                format!("column {} should be `e{i}`, found `{h}`", i + 1),
            ));
        }
    }

    let mut rows = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 1 {
            return Err(Error::format(
                path,
                line,
                format!("expected {} values, found {}", dim, record.len() - 1),
            ));
        }
        let drug = DrugId::new(&record[0]).ok_or_else(|| Error::format(path, line, "empty `drug_id`"))?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::format(path, line, "embedding values must be finite numbers"))?;
        if rows.insert(drug.clone(), values).is_some() {
            return Err(Error::format(path, line, format!("drug `{drug}` listed twice")));
        }
    }
    Ok(EmbeddingTable { dim, rows })
}

pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path, b',')?;
    let mut header = vec!["drug_id".to_string()];
    header.extend((0..table.dim).map(|i| format!("e{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (drug, values) in &table.rows {
        let mut row = vec![drug.to_string()];
        row.extend(values.iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
