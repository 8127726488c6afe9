use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use nalgebra::DMatrix;

use crate::ids::{DdiTriple, DrugId, DrugPair, SideEffectId};

/// Binary drug-by-label indicator matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatureMatrix {
    pub drug_order: Vec<DrugId>,
    pub column_labels: Vec<String>,
    pub values: DMatrix<f64>,
}

/// Builds the 0/1 matrix with one row per drug in `drug_order` and one column per
/// distinct label (sorted). Pairs naming drugs outside `drug_order` are ignored;
/// listed drugs without any pair get an all-zero row.
pub fn build_binary_matrix<L: AsRef<str>>(pairs: &[(DrugId, L)], drug_order: &[DrugId]) -> RawFeatureMatrix {
    let row_of: HashMap<&DrugId, usize> = drug_order.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let labels: BTreeSet<&str> = pairs
        .iter()
        .filter(|(d, _)| row_of.contains_key(d))
        .map(|(_, l)| l.as_ref())
        .collect();
    let column_labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let col_of: HashMap<&str, usize> = labels.iter().enumerate().map(|(j, l)| (*l, j)).collect();

    let mut values = DMatrix::zeros(drug_order.len(), column_labels.len());
    for (drug, label) in pairs {
        if let Some(&i) = row_of.get(drug) {
            values[(i, col_of[label.as_ref()])] = 1.0;
        }
    }
    RawFeatureMatrix {
        drug_order: drug_order.to_vec(),
        column_labels,
        values,
    }
}

/// Keeps side effects with at least `min_positive_pairs` distinct drug pairs.
/// Kept side effects are returned sorted by code; surviving triples keep their
/// input order.
pub fn filter_side_effects(triples: &[DdiTriple], min_positive_pairs: usize) -> (Vec<SideEffectId>, Vec<DdiTriple>) {
    let min_positive_pairs = min_positive_pairs.max(1);
    let mut pairs_per_effect: BTreeMap<&SideEffectId, HashSet<&DrugPair>> = BTreeMap::new();
    for t in triples {
        pairs_per_effect.entry(&t.side_effect).or_default().insert(&t.pair);
    }
    let kept: Vec<SideEffectId> = pairs_per_effect
        .into_iter()
        .filter(|(_, pairs)| pairs.len() >= min_positive_pairs)
        .map(|(se, _)| se.clone())
        .collect();
    let kept_codes: HashSet<&str> = kept.iter().map(|s| s.code.as_str()).collect();
    let filtered = triples
        .iter()
        .filter(|t| kept_codes.contains(t.side_effect.code.as_str()))
        .cloned()
        .collect();
    (kept, filtered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DrugId {
        DrugId::new(s).unwrap()
    }

    fn t(a: &str, b: &str, se: &str) -> DdiTriple {
        DdiTriple::new(d(a), d(b), SideEffectId::from_code(se).unwrap()).unwrap()
    }

    #[test]
    fn identity_pattern() {
        let m = build_binary_matrix(&[(d("d1"), "p1"), (d("d2"), "p2")], &[d("d1"), d("d2")]);
        assert_eq!(m.values, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(m.column_labels, ["p1", "p2"]);
    }

    #[test]
    fn hand_built_grid() {
        // labels sort to L1 L2 L3 L4; d3 has no pairs
        let pairs = [
            (d("d1"), "L3"),
            (d("d1"), "L1"),
            (d("d2"), "L4"),
            (d("d2"), "L1"),
            (d("d1"), "L2"),
            (d("dX"), "L9"),
        ];
        let m = build_binary_matrix(&pairs, &[d("d1"), d("d2"), d("d3")]);
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(3, 4, &[
            1.0, 1.0, 1.0, 0.0,
            1.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0,
        ]);
        assert_eq!(m.values, expected);
        assert_eq!(m.column_labels, ["L1", "L2", "L3", "L4"]);
    }

    #[test]
    fn filter_by_pair_count() {
        let triples = vec![t("a", "b", "A"), t("a", "c", "A"), t("b", "c", "A"), t("a", "b", "B")];
        let (kept, filtered) = filter_side_effects(&triples, 2);
        assert_eq!(kept.iter().map(|s| s.code.as_str()).collect::<Vec<_>>(), ["A"]);
        assert_eq!(filtered.len(), 3);

        let (all, same) = filter_side_effects(&triples, 1);
        assert_eq!(all.len(), 2);
        assert_eq!(same, triples);

        let (again, twice) = filter_side_effects(&filtered, 2);
        assert_eq!(again, kept);
        assert_eq!(twice, filtered);
    }
}
