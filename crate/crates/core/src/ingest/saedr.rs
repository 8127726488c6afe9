use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;

use super::{ParseWarnings, Parsed};
use crate::error::{Error, Result};
use crate::ids::SideEffectId;

/// Reads `side_effect_code<TAB>score` severity scores. A header row whose second
/// field is literally `score` is skipped; later duplicates replace earlier ones.
pub fn parse_saedr_file(path: impl AsRef<Path>) -> Result<Parsed<BTreeMap<SideEffectId, f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = BTreeMap::new();
    let mut warnings = ParseWarnings::default();
    let mut first_row = true;
    for (index, raw) in text.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let code = fields.next().unwrap_or("").trim();
        let score = fields
            .next()
            .ok_or_else(|| Error::format(path, line_no, "expected `code<TAB>score`"))?
            .trim();
        if std::mem::take(&mut first_row) && score.eq_ignore_ascii_case("score") {
            continue;
        }
        let side_effect =
            SideEffectId::from_code(code).ok_or_else(|| Error::format(path, line_no, "empty side effect code"))?;
        let value: f64 = score
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::format(path, line_no, format!("score `{score}` is not a finite number")))?;
        if scores.insert(side_effect, value).is_some() {
            warnings.duplicates += 1;
        }
    }
    if warnings.duplicates > 0 {
        warn!(
            "{}: {} duplicate codes, last value kept",
            path.display(),
            warnings.duplicates
        );
    }
    Ok(Parsed {
        records: scores,
        warnings,
    })
}
