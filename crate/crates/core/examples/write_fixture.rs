//! Writes a synthetic input set for the `drivenn` binary.
//!
//! ```text
//! cargo run --example write_fixture -- fixture/
//! drivenn features --out run --ddi fixture/ddi.csv --targets fixture/targets.csv \
//!     --mono fixture/mono.csv --embeddings fixture/embeddings.csv --min-positive-pairs 100
//! ```

use drivenn::synthetic::{generate, SyntheticSpec};

fn main() -> drivenn::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixture".into());
    let data = generate(&SyntheticSpec::default());
    let paths = data.write_fixture(&dir)?;
    println!("{paths:#?}");
    println!(
        "{} drugs, {} side effects, {} interaction rows",
        data.drugs.len(),
        data.side_effects.len(),
        data.triples.len()
    );
    Ok(())
}
