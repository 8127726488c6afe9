use std::path::Path;

use super::{auprc, auroc};
use crate::error::{Error, Result};
use crate::ids::SideEffectId;
use crate::ingest::table::{create_commented_writer, csv_error, for_each_row, Column};

#[derive(Debug, Clone, PartialEq)]
pub struct SideEffectMetrics {
    pub side_effect: SideEffectId,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub n_test: usize,
    /// Set when a metric is undefined or no model was available.
    pub skipped_reason: Option<String>,
}

impl SideEffectMetrics {
    pub fn skipped(side_effect: SideEffectId, n_test: usize, reason: impl Into<String>) -> Self {
        SideEffectMetrics {
            side_effect,
            auroc: None,
            auprc: None,
            n_test,
            skipped_reason: Some(reason.into()),
        }
    }
}

/// Scores one side effect's test split. Undefined metrics produce a skipped row
/// rather than an error.
pub fn evaluate_scores(side_effect: SideEffectId, scores: &[f64], labels: &[bool]) -> Result<SideEffectMetrics> {
    let roc = auroc(scores, labels);
    let pr = auprc(scores, labels);
    match (roc, pr) {
        (Ok(a), Ok(p)) => Ok(SideEffectMetrics {
            side_effect,
            auroc: Some(a),
            auprc: Some(p),
            n_test: scores.len(),
            skipped_reason: None,
        }),
        (Err(Error::UndefinedMetric(why)), _) | (_, Err(Error::UndefinedMetric(why))) => {
            Ok(SideEffectMetrics::skipped(side_effect, scores.len(), why))
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<SideEffectMetrics>,
    /// Unweighted means over rows that have the metric.
    pub mean_auroc: Option<f64>,
    pub mean_auprc: Option<f64>,
    pub training_seconds: Option<f64>,
}

impl MetricsReport {
    pub fn skipped(&self) -> impl Iterator<Item = &SideEffectMetrics> {
        self.rows.iter().filter(|r| r.skipped_reason.is_some())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Rows are sorted by side-effect code.
pub fn aggregate(mut rows: Vec<SideEffectMetrics>, training_seconds: Option<f64>) -> MetricsReport {
    rows.sort_by(|a, b| a.side_effect.cmp(&b.side_effect));
    MetricsReport {
        mean_auroc: mean(rows.iter().filter_map(|r| r.auroc)),
        mean_auprc: mean(rows.iter().filter_map(|r| r.auprc)),
        rows,
        training_seconds,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `side_effect,auroc,auprc,n_test,skipped_reason`; undefined values are empty.
pub fn write_metrics(path: impl AsRef<Path>, report: &MetricsReport, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_commented_writer(path, comment)?;
    let err = |e| csv_error(path, e);
    w.write_record(["side_effect", "auroc", "auprc", "n_test", "skipped_reason"])
        .map_err(err)?;
    for r in &report.rows {
        w.write_record([
            r.side_effect.code.clone(),
            opt(r.auroc),
            opt(r.auprc),
            r.n_test.to_string(),
            r.skipped_reason.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<MetricsReport> {
    let path = path.as_ref();
    let columns = [
        Column::Required("side_effect"),
        Column::Required("auroc"),
        Column::Required("auprc"),
        Column::Required("n_test"),
        Column::Optional("skipped_reason"),
    ];
    let mut rows = Vec::new();
    for_each_row(path, b',', &columns, |line, f| {
        let metric = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| Error::format(path, line, format!("invalid metric `{s}`")))
        };
        rows.push(SideEffectMetrics {
            side_effect: SideEffectId::from_code(f[0])
                .ok_or_else(|| Error::format(path, line, "empty side effect code"))?,
            auroc: metric(f[1])?,
            auprc: metric(f[2])?,
            n_test: f[3]
                .parse()
                .map_err(|_| Error::format(path, line, format!("invalid count `{}`", f[3])))?,
            skipped_reason: (!f[4].is_empty()).then(|| f[4].to_string()),
        });
        Ok(())
    })?;
    Ok(aggregate(rows, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(code: &str, a: f64, p: f64) -> SideEffectMetrics {
        SideEffectMetrics {
            side_effect: SideEffectId::from_code(code).unwrap(),
            auroc: Some(a),
            auprc: Some(p),
            n_test: 10,
            skipped_reason: None,
        }
    }

    #[test]
    fn means() {
        let one = aggregate(vec![row("C1", 0.7, 0.6)], None);
        assert_eq!((one.mean_auroc, one.mean_auprc), (Some(0.7), Some(0.6)));
        let two = aggregate(vec![row("C2", 1.0, 1.0), row("C1", 0.8, 0.5)], None);
        assert!((two.mean_auroc.unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(two.rows[0].side_effect.code, "C1");
    }

    #[test]
    fn undefined_rows_are_skipped_not_averaged() {
        let s = evaluate_scores(SideEffectId::from_code("C9").unwrap(), &[0.1, 0.2], &[true, true]).unwrap();
        assert!(s.skipped_reason.is_some() && s.auroc.is_none());
        let report = aggregate(vec![s, row("C1", 0.6, 0.4)], None);
        assert_eq!(report.mean_auroc, Some(0.6));
        assert_eq!(report.skipped().count(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let report = aggregate(
            vec![
                row("C1", 0.75, 0.8333333333333333),
                SideEffectMetrics::skipped(SideEffectId::from_code("C2").unwrap(), 3, "no model"),
            ],
            None,
        );
        write_metrics(&path, &report, Some("seed=1 config=ab")).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed=1 config=ab\nside_effect,auroc,auprc,n_test,skipped_reason\n"));
        assert_eq!(read_metrics(&path).unwrap(), report);
    }
}
