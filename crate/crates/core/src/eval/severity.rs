use std::collections::BTreeMap;
use std::path::Path;

use super::median;
use crate::error::{Error, Result};
use crate::ids::SideEffectId;
use crate::ingest::table::{create_commented_writer, csv_error};

pub const DEFAULT_BIN_EDGES: [(f64, f64); 3] = [(0.85, 0.90), (0.90, 0.95), (0.95, 0.99)];
const EXAMPLES_PER_BIN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SeverityBin {
    pub low: f64,
    pub high: f64,
    pub median_saedr: Option<f64>,
    pub count: usize,
    /// Highest-scoring members, most severe first.
    pub examples: Vec<SideEffectId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeverityBinReport {
    pub bins: Vec<SeverityBin>,
    pub excluded_below: usize,
    pub excluded_above: usize,
    pub missing_score: usize,
}

impl SeverityBinReport {
    pub fn binned(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Groups side effects by AUROC into `[low, high)` bins, the last closed at its
/// upper edge, and reports the median severity score of each bin.
pub fn severity_bins(
    auroc: &BTreeMap<SideEffectId, f64>,
    saedr: &BTreeMap<SideEffectId, f64>,
    edges: &[(f64, f64)],
) -> Result<SeverityBinReport> {
    if edges.is_empty()
        || edges
            .iter()
            .any(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less))
        || edges.windows(2).any(|w| w[0].1 > w[1].0)
    {
        return Err(Error::InvalidConfig(
            "bin edges must be ordered and non-overlapping".into(),
        ));
    }
    let mut members: Vec<Vec<(&SideEffectId, f64)>> = vec![Vec::new(); edges.len()];
    let mut report = SeverityBinReport {
        bins: Vec::new(),
        excluded_below: 0,
        excluded_above: 0,
        missing_score: 0,
    };
    let last = edges.len() - 1;
    for (se, &a) in auroc {
        let Some(&score) = saedr.get(se) else {
            report.missing_score += 1;
            continue;
        };
        let slot = edges
            .iter()
            .enumerate()
            .position(|(i, &(lo, hi))| a >= lo && (a < hi || (i == last && a == hi)));
        match slot {
            Some(i) => members[i].push((se, score)),
            None if a < edges[0].0 => report.excluded_below += 1,
            // gaps between bins and values past the last edge
            None => report.excluded_above += 1,
        }
    }
    for (&(low, high), mut m) in edges.iter().zip(members) {
        let scores: Vec<f64> = m.iter().map(|(_, s)| *s).collect();
        m.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        report.bins.push(SeverityBin {
            low,
            high,
            median_saedr: median(&scores),
            count: m.len(),
            examples: m.iter().take(EXAMPLES_PER_BIN).map(|(se, _)| (*se).clone()).collect(),
        });
    }
    Ok(report)
}

/// `bin_low,bin_high,median_saedr,count,examples` with examples joined by `;`.
pub fn write_severity_report(path: impl AsRef<Path>, report: &SeverityBinReport, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_commented_writer(path, comment)?;
    let err = |e| csv_error(path, e);
    w.write_record(["bin_low", "bin_high", "median_saedr", "count", "examples"])
        .map_err(err)?;
    for b in &report.bins {
        let examples: Vec<&str> = b
            .examples
            .iter()
            .map(|se| {
                if se.name.is_empty() {
                    se.code.as_str()
                } else {
                    se.name.as_str()
                }
            })
            .collect();
        w.write_record([
            b.low.to_string(),
            b.high.to_string(),
            b.median_saedr.map(|m| m.to_string()).unwrap_or_default(),
            b.count.to_string(),
            examples.join(";"),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
