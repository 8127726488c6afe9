//! Drug feature construction: per-block PCA, optional z-scoring, concatenation
//! into one row per drug, and additive encoding of drug pairs.

mod assemble;
mod container;
mod embeddings;
mod normalize;
mod pca;

pub use assemble::{assemble_drug_features, BlockDims, DrugFeatureMatrix};
pub use container::{read_features, write_features, FeatureBundle, FEATURES_MAGIC, FEATURES_VERSION};
pub use embeddings::{parse_embeddings, write_embeddings, EmbeddingTable};
pub use normalize::{zscore_normalize, ZScore};
pub use pca::{fit_pca, PcaModel};
