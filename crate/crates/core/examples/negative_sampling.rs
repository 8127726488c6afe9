//! Builds a balanced dataset for one side effect: known pairs as positives,
//! uniformly drawn unknown pairs as negatives, split 80/10/10 per class.
//!
//! ```text
//! cargo run --example negative_sampling
//! ```

use drivenn::sampling::{build_dataset, write_dataset, PairUniverse, Split};
use drivenn::synthetic::{generate, SyntheticSpec};

fn main() -> drivenn::Result<()> {
    let data = generate(&SyntheticSpec::default());
    let se = &data.side_effects[0];
    let positives = data.positives(se);

    for (label, universe) in [
        ("all pairs", PairUniverse::all(&data.drugs)),
        (
            "cohort-anchored",
            PairUniverse::anchored(&data.drugs[..15], &data.drugs),
        ),
    ] {
        let ds = build_dataset(se, &positives, &universe, 1, 42)?;
        print!("{label:>16} ({} candidate pairs):", universe.len());
        for split in [Split::Train, Split::Val, Split::Test] {
            let s = ds.split(split);
            let pos = s.iter().filter(|p| p.positive).count();
            print!("  {} {}+/{}-", split.as_str(), pos, s.len() - pos);
        }
        println!();
    }

    let ds = build_dataset(se, &positives, &PairUniverse::all(&data.drugs), 1, 42)?;
    let again = build_dataset(se, &positives, &PairUniverse::all(&data.drugs), 1, 42)?;
    assert_eq!(ds, again);
    let path = std::env::temp_dir().join("drivenn-example-dataset.csv");
    write_dataset(&path, &ds, Some("seed=42"))?;
    println!("wrote {}", path.display());
    Ok(())
}
