use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;

use drivenn::eval::{auprc, auroc};
use drivenn::features::{fit_pca, parse_embeddings, write_embeddings, EmbeddingTable};
use drivenn::ingest::{parse_ddi_records, write_ddi_records};
use drivenn::sampling::{build_dataset, read_dataset, sample_negatives, write_dataset, PairUniverse};
use drivenn::synthetic::drug_id;
use drivenn::{DdiTriple, DrugId, DrugPair, SideEffectId};

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..80).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..12).prop_map(|v| f64::from(v) / 12.0), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, mut l)| {
                l[0] = true;
                l[1] = false;
                (s, l)
            })
    })
}

fn brute_auprc(scores: &[f64], labels: &[bool]) -> f64 {
    let total = labels.iter().filter(|&&l| l).count() as f64;
    let mut cuts: Vec<f64> = scores.to_vec();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut prev = 0.0;
    cuts.iter()
        .map(|&t| {
            let hit: Vec<bool> = (0..scores.len())
                .filter(|&i| scores[i] >= t)
                .map(|i| labels[i])
                .collect();
            let tp = hit.iter().filter(|&&l| l).count() as f64;
            let step = (tp / total - prev) * tp / hit.len() as f64;
            prev = tp / total;
            step
        })
        .sum()
}

proptest! {
    #[test]
    fn auroc_ignores_monotone_transforms((scores, labels) in scored()) {
        let base = auroc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).exp() / 7.0).collect();
        prop_assert_eq!(auroc(&squashed, &labels).unwrap(), base);
        prop_assert_eq!(auprc(&squashed, &labels).unwrap(), auprc(&scores, &labels).unwrap());
    }

    #[test]
    fn flipped_labels_mirror_auroc((scores, labels) in scored()) {
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let a = auroc(&scores, &labels).unwrap();
        let b = auroc(&scores, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auroc(&negated, &labels).unwrap() - b).abs() < 1e-12);
    }

    #[test]
    fn auprc_matches_brute_force((scores, labels) in scored()) {
        let p = auprc(&scores, &labels).unwrap();
        prop_assert!((p - brute_auprc(&scores, &labels)).abs() <= 1e-12);
        prop_assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn ddi_records_round_trip(rows in prop::collection::vec((0usize..12, 0usize..12, 0usize..4), 1..60)) {
        let triples: Vec<DdiTriple> = rows
            .iter()
            .filter_map(|&(a, b, s)| {
                DdiTriple::new(drug_id(a), drug_id(b), SideEffectId::new(format!("C{s}"), format!("effect, {s}"))?)
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ddi.csv");
        write_ddi_records(&path, &triples).unwrap();
        let back = parse_ddi_records(&path).unwrap();
        let mut seen = HashSet::new();
        let unique: Vec<DdiTriple> = triples
            .iter()
            .filter(|t| seen.insert((t.pair.clone(), t.side_effect.code.clone())))
            .cloned()
            .collect();
        prop_assert_eq!(back.warnings.duplicates, triples.len() - unique.len());
        prop_assert_eq!(back.records.iter().map(|t| &t.side_effect.name).collect::<Vec<_>>(),
            unique.iter().map(|t| &t.side_effect.name).collect::<Vec<_>>());
        prop_assert_eq!(back.records, unique);
    }

    #[test]
    fn embeddings_round_trip(values in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..20)) {
        let table = EmbeddingTable {
            dim: 3,
            rows: values.iter().enumerate().map(|(i, v)| (drug_id(i), v.clone())).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embeddings.csv");
        write_embeddings(&path, &table).unwrap();
        prop_assert_eq!(parse_embeddings(&path).unwrap(), table);
    }

    #[test]
    fn datasets_round_trip(n in 5usize..30, k in 5usize..40, seed in any::<u64>()) {
        let drugs: Vec<DrugId> = (0..n).map(drug_id).collect();
        let universe = PairUniverse::all(&drugs);
        let k = k.min(universe.len() / 2);
        prop_assume!(k >= 5);
        let positives: HashSet<DrugPair> = (0..k).map(|i| universe.pair_at(i * 2)).collect();
        let se = SideEffectId::from_code("C1").unwrap();
        let ds = build_dataset(&se, &positives, &universe, 1, seed).unwrap();
        prop_assert_eq!(&build_dataset(&se, &positives, &universe, 1, seed).unwrap(), &ds);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&path, &ds, Some(&format!("seed={seed} config=abc"))).unwrap();
        prop_assert_eq!(read_dataset(&path, se).unwrap(), ds);
    }

    #[test]
    fn retained_grows_with_threshold(
        rows in prop::collection::vec(prop::collection::vec(0u8..2, 6), 4..30),
        lo in 0.5f64..0.9,
    ) {
        let n = rows.len();
        let mut flat: Vec<f64> = rows.into_iter().flatten().map(f64::from).collect();
        flat[0] = 1.0;
        flat[6] = 0.0;
        let x = nalgebra::DMatrix::from_row_slice(n, 6, &flat);
        let a = fit_pca(&x, lo).unwrap();
        let b = fit_pca(&x, (lo + 0.1).min(1.0)).unwrap();
        prop_assert!(a.retained <= b.retained);
        let ratios = a.explained_variance_ratio();
        let kept: f64 = ratios[..a.retained].iter().sum();
        prop_assert!(kept >= lo - 1e-12);
        if a.retained > 1 {
            prop_assert!(kept - ratios[a.retained - 1] < lo);
        }
    }
}

/// Every non-positive pair should be drawn equally often across seeds.
#[test]
fn negatives_are_uniform() {
    let drugs: Vec<DrugId> = (0..10).map(drug_id).collect();
    let universe = PairUniverse::all(&drugs);
    let positives: HashSet<DrugPair> = [0, 7, 13, 29, 44].into_iter().map(|k| universe.pair_at(k)).collect();
    let se = SideEffectId::from_code("C1").unwrap();
    let seeds = 10_000u64;
    let mut counts: BTreeMap<DrugPair, u64> = BTreeMap::new();
    for seed in 0..seeds {
        for s in sample_negatives(&se, &positives, &drugs, seed).unwrap() {
            assert!(!positives.contains(&s.pair));
            *counts.entry(s.pair).or_default() += 1;
        }
    }
    let cells = universe.len() - positives.len();
    assert_eq!(counts.len(), cells);
    let expected = (seeds * positives.len() as u64) as f64 / cells as f64;
    let p = positives.len() as f64 / cells as f64;
    let sigma = (seeds as f64 * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for (pair, &c) in &counts {
        let dev = c as f64 - expected;
        assert!(
            dev.abs() <= 3.0 * sigma + 1.0,
            "{pair:?} drawn {c} times, expected {expected:.0}±{sigma:.1}"
        );
        chi2 += dev * dev / expected;
    }
    // 39 degrees of freedom; 72.05 is the 0.999 quantile
    assert!(chi2 < 72.05, "chi-square {chi2:.1}");
}
