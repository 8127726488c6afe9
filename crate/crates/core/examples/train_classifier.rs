//! Trains the default two-layer classifier for one side effect, saves and
//! reloads it, and scores a few pairs in both argument orders.
//!
//! ```text
//! cargo run --release --example train_classifier
//! ```

use drivenn::eval::auroc;
use drivenn::nn::{load_model, predict_pair, save_model, score_samples, train, MlpConfig};
use drivenn::sampling::{build_dataset, PairUniverse};
use drivenn::synthetic::{generate, SyntheticSpec};

fn main() -> drivenn::Result<()> {
    let data = generate(&SyntheticSpec::default());
    let features = data.feature_matrix();
    let se = &data.side_effects[0];
    let dataset = build_dataset(se, &data.positives(se), &PairUniverse::all(&data.drugs), 1, 42)?;

    let config = MlpConfig::default();
    let (model, report) = train(&features, &dataset, &config)?;
    for e in report.epochs.iter().step_by(10) {
        println!(
            "epoch {:>2}  loss {:.4}  val auroc {:?}",
            e.epoch, e.train_loss, e.val_auroc
        );
    }
    println!("trained {} epochs in {:.2?}", report.epochs.len(), report.duration);

    let path = std::env::temp_dir().join("drivenn-example.mdl");
    save_model(&path, &model)?;
    let loaded = load_model(&path)?;
    let scores = score_samples(&loaded, &features, &dataset.test)?;
    let labels: Vec<bool> = dataset.test.iter().map(|s| s.positive).collect();
    println!("test auroc from the reloaded model: {:.4}", auroc(&scores, &labels)?);

    for s in dataset.test.iter().take(4) {
        let (a, b) = (s.pair.first(), s.pair.second());
        let ab = predict_pair(&loaded, &features, a, b)?;
        let ba = predict_pair(&loaded, &features, b, a)?;
        assert_eq!(ab, ba);
        println!("{a} + {b}: p = {ab:.4} (label {})", u8::from(s.positive));
    }
    Ok(())
}
