use crate::error::{Error, Result};

/// Pair counts behind AUROC: over all (positive, negative) pairs, how many
/// have the positive strictly higher and how many tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AurocCounts {
    pub concordant: u64,
    pub tied: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl AurocCounts {
    /// `(2·concordant + tied) / (2·P·N)`, divided once.
    pub fn value(&self) -> f64 {
        let num = 2 * self.concordant as u128 + self.tied as u128;
        let den = 2 * self.positives as u128 * self.negatives as u128;
        num as f64 / den as f64
    }
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            actual: labels.len(),
            context: "labels for metric",
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Degenerate("NaN score".into()));
    }
    Ok(())
}

/// Indices ordered by ascending score.
fn ascending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// Runs of indices sharing one score, given an ordering. `-0.0` and `0.0` tie.
fn tie_groups<'a>(order: &'a [usize], scores: &'a [f64]) -> impl Iterator<Item = &'a [usize]> + 'a {
    let mut start = 0;
    std::iter::from_fn(move || {
        if start >= order.len() {
            return None;
        }
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let group = &order[start..end];
        start = end;
        Some(group)
    })
}

pub fn auroc_counts(scores: &[f64], labels: &[bool]) -> Result<AurocCounts> {
    check_inputs(scores, labels)?;
    let order = ascending(scores);
    let mut counts = AurocCounts {
        concordant: 0,
        tied: 0,
        positives: 0,
        negatives: 0,
    };
    for group in tie_groups(&order, scores) {
        let pos = group.iter().filter(|&&i| labels[i]).count() as u64;
        let neg = group.len() as u64 - pos;
        // every negative seen so far scored strictly lower
        counts.concordant += pos * counts.negatives;
        counts.tied += pos * neg;
        counts.positives += pos;
        counts.negatives += neg;
    }
    if counts.positives == 0 || counts.negatives == 0 {
        return Err(Error::UndefinedMetric("AUROC needs both classes"));
    }
    Ok(counts)
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    auroc_counts(scores, labels).map(|c| c.value())
}

/// Step-wise area under the precision-recall curve: thresholds descend one
/// tie group at a time, each adding `ΔRecall × precision`.
pub fn auprc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return Err(Error::UndefinedMetric("AUPRC needs a positive"));
    }
    let mut order = ascending(scores);
    order.reverse();
    let (mut tp, mut fp, mut area) = (0usize, 0usize, 0.0);
    for group in tie_groups(&order, scores) {
        let pos = group.iter().filter(|&&i| labels[i]).count();
        tp += pos;
        fp += group.len() - pos;
        if pos > 0 {
            area += (pos as f64 / total_pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(area)
}
