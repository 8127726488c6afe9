//! Rank metrics, per-side-effect aggregation, severity binning and
//! descriptive statistics over the interaction data.

mod eda;
mod metrics;
mod report;
mod severity;

pub use eda::{eda_stats, write_eda_report, EdaReport, MonoCount, DEFAULT_TOP_K};
pub use metrics::{auprc, auroc, auroc_counts, AurocCounts};
pub use report::{aggregate, evaluate_scores, read_metrics, write_metrics, MetricsReport, SideEffectMetrics};
pub use severity::{severity_bins, write_severity_report, SeverityBin, SeverityBinReport, DEFAULT_BIN_EDGES};

/// Median of a sample; even counts average the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}
