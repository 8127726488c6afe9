//! Parsing of the normalized input tables and construction of the raw
//! drug-by-label indicator matrices and the cardiovascular cohort.
//!
//! All inputs are UTF-8 delimited text with a header row. Lines starting with
//! `#` are treated as comments, which lets the pipeline's own CSV outputs be read
//! back without stripping their provenance line.

mod identity;
mod matrix;
mod records;
mod saedr;
pub(crate) mod table;

pub use identity::{
    build_cvd_cohort, bundled_cvd_drugs, map_pubchem_to_unii, parse_cvd_list, parse_overrides, parse_unii_records,
    CohortSpec, CvdDrug, IdentityRecord, UniiMatch,
};
pub use matrix::{build_binary_matrix, filter_side_effects, RawFeatureMatrix};
pub use records::{
    parse_ddi_records, parse_mono_records, parse_target_records, write_ddi_records, write_mono_records,
    write_target_records,
};
pub use saedr::parse_saedr_file;

/// Counts of tolerated data-quality problems encountered while parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    /// Rows repeating an earlier record (dropped, or overwriting for keyed files).
    pub duplicates: usize,
    /// Interaction rows naming the same drug twice (dropped).
    pub self_pairs: usize,
}

impl ParseWarnings {
    pub fn is_clean(&self) -> bool {
        self.duplicates == 0 && self.self_pairs == 0
    }
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: T,
    pub warnings: ParseWarnings,
}
