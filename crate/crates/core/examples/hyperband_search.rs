//! Prints the Hyperband bracket schedule, runs a small search for one side
//! effect and takes the consensus over several side effects.
//!
//! ```text
//! cargo run --release --example hyperband_search
//! ```

use drivenn::nn::MlpConfig;
use drivenn::sampling::{build_dataset, PairUniverse};
use drivenn::synthetic::{generate, SyntheticSpec};
use drivenn::tuner::{bracket_schedule, consensus_config, hyperband, HyperbandParams, SearchSpace};

fn main() -> drivenn::Result<()> {
    for bracket in bracket_schedule(9, 3)? {
        let rungs: Vec<String> = bracket
            .rungs
            .iter()
            .map(|r| format!("{}x{}", r.configs, r.epochs))
            .collect();
        println!(
            "s={}: {}  ({} epochs)",
            bracket.s,
            rungs.join(" -> "),
            bracket.total_epochs()
        );
    }

    let data = generate(&SyntheticSpec::default());
    let features = data.feature_matrix();
    let universe = PairUniverse::all(&data.drugs);
    let space = SearchSpace {
        widths: vec![16, 32, 64],
        ..SearchSpace::default()
    };
    let params = HyperbandParams { max_epochs: 9, eta: 3 };
    let mut winners = Vec::new();
    for se in data.side_effects.iter().take(3) {
        let dataset = build_dataset(se, &data.positives(se), &universe, 1, 42)?;
        let outcome = hyperband(&space, &params, &features, &dataset, &MlpConfig::default(), 1)?;
        println!(
            "{}: {} evaluations, best {:?} bn={} dropout={} at {} epochs, val auroc {:?}",
            se.code,
            outcome.log.len(),
            outcome.best.config.layer_widths,
            outcome.best.config.use_batch_norm,
            outcome.best.config.dropout_rate,
            outcome.best.epochs,
            outcome.best.val_auroc
        );
        winners.push(outcome.best.config);
    }
    let consensus = consensus_config(&winners, &MlpConfig::default())?;
    println!(
        "consensus: {:?} bn={} dropout={}",
        consensus.layer_widths, consensus.use_batch_norm, consensus.dropout_rate
    );
    Ok(())
}
