//! Trains one classifier per planted side effect on synthetic data and reports
//! test AUROC/AUPRC.
//!
//! ```text
//! cargo run --release --example synthetic_end_to_end
//! ```

use std::time::Instant;

use drivenn::eval::{aggregate, evaluate_scores};
use drivenn::nn::{score_samples, train, MlpConfig};
use drivenn::sampling::{build_dataset, PairUniverse};
use drivenn::seed::derive_seed;
use drivenn::synthetic::{generate, SyntheticSpec};

fn main() -> drivenn::Result<()> {
    let started = Instant::now();
    let data = generate(&SyntheticSpec::default());
    let features = data.feature_matrix();
    let universe = PairUniverse::all(&data.drugs);

    let mut rows = Vec::new();
    for se in &data.side_effects {
        let dataset = build_dataset(se, &data.positives(se), &universe, 1, 42)?;
        let config = MlpConfig {
            seed: derive_seed(42, "train", &se.code),
            ..MlpConfig::default()
        };
        let (model, report) = train(&features, &dataset, &config)?;
        let scores = score_samples(&model, &features, &dataset.test)?;
        let labels: Vec<bool> = dataset.test.iter().map(|s| s.positive).collect();
        let metrics = evaluate_scores(se.clone(), &scores, &labels)?;
        println!(
            "{:<10} train loss {:.4} -> {:.4}   test auroc {:.4}   auprc {:.4}",
            se.code,
            report.epochs[0].train_loss,
            report.epochs.last().map_or(f64::NAN, |e| e.train_loss),
            metrics.auroc.unwrap_or(f64::NAN),
            metrics.auprc.unwrap_or(f64::NAN),
        );
        rows.push(metrics);
    }
    let report = aggregate(rows, Some(started.elapsed().as_secs_f64()));
    println!(
        "mean auroc {:.4}  mean auprc {:.4}  in {:.1}s",
        report.mean_auroc.unwrap_or(f64::NAN),
        report.mean_auprc.unwrap_or(f64::NAN),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
