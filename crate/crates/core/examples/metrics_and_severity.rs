//! Rank metrics on hand-made scores, aggregation with a skipped side effect,
//! and severity binning.
//!
//! ```text
//! cargo run --example metrics_and_severity
//! ```

use std::collections::BTreeMap;

use drivenn::eval::{aggregate, auprc, auroc, auroc_counts, evaluate_scores, severity_bins, DEFAULT_BIN_EDGES};
use drivenn::SideEffectId;

fn main() -> drivenn::Result<()> {
    let scores = [0.1, 0.4, 0.35, 0.8];
    let labels = [false, false, true, true];
    let c = auroc_counts(&scores, &labels)?;
    println!(
        "auroc {} ({} concordant, {} tied of {} pairs), auprc {:.4}",
        auroc(&scores, &labels)?,
        c.concordant,
        c.tied,
        c.positives * c.negatives,
        auprc(&scores, &labels)?
    );

    let se = |code: &str| SideEffectId::from_code(code).expect("non-empty");
    let rows = vec![
        evaluate_scores(se("C1"), &scores, &labels)?,
        evaluate_scores(se("C2"), &[0.9, 0.2, 0.7], &[true, false, true])?,
        // a single-class test split is reported, not averaged
        evaluate_scores(se("C3"), &[0.5, 0.6], &[true, true])?,
    ];
    let report = aggregate(rows, None);
    println!("mean auroc {:?}, mean auprc {:?}", report.mean_auroc, report.mean_auprc);
    for r in report.skipped() {
        println!(
            "skipped {}: {}",
            r.side_effect.code,
            r.skipped_reason.as_deref().unwrap_or("")
        );
    }

    let auroc_by_se: BTreeMap<_, _> = [("A", 0.87), ("B", 0.91), ("C", 0.93), ("D", 0.97), ("E", 0.80)]
        .into_iter()
        .map(|(c, v)| (se(c), v))
        .collect();
    let saedr: BTreeMap<_, _> = [("A", 0.52), ("B", 0.55), ("C", 0.61), ("D", 0.60), ("E", 0.40)]
        .into_iter()
        .map(|(c, v)| (se(c), v))
        .collect();
    let bins = severity_bins(&auroc_by_se, &saedr, &DEFAULT_BIN_EDGES)?;
    for b in &bins.bins {
        println!(
            "[{:.2}, {:.2}): {} side effects, median severity {:?}",
            b.low, b.high, b.count, b.median_saedr
        );
    }
    println!("below the lowest bin: {}", bins.excluded_below);
    Ok(())
}
