//! Polypharmacy side effect prediction from drug feature vectors.
//!
//! Each drug is described by three blocks of features (molecular structure
//! embeddings, drug-protein targets and single-drug side effects, the latter two
//! reduced with PCA). A drug pair is the element-wise sum of its two rows, and
//! one small feed-forward classifier is trained per side effect on a balanced
//! set of known (positive) and randomly drawn (negative) pairs.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`ingest`]: input tables, indicator matrices, UNII reconciliation, cohorts
//! - [`features`]: PCA, normalization, drug feature matrix, pair encoding
//! - [`sampling`]: negative sampling and stratified splits
//! - [`nn`]: the classifier, its gradients, Adam and the training loop
//! - [`tuner`]: Hyperband search and consensus configuration
//! - [`eval`]: AUROC/AUPRC, aggregation, severity bins, exploratory statistics
//! - [`pipeline`]: the file-to-file stages behind the `drivenn` binary
//!
//! Randomness always flows through [`seed`], which pins the generator and the
//! derivation of per-task seeds.

mod binio;
pub mod error;
pub mod eval;
pub mod features;
pub mod ids;
pub mod ingest;
pub mod nn;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod synthetic;
pub mod tuner;

pub use error::{Error, Result};
pub use ids::{DdiTriple, DrugId, DrugPair, SideEffectId};
