//! Balanced per-side-effect datasets: uniform negative sampling over the pair
//! universe and stratified train/validation/test splits.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ids::{DrugId, DrugPair, SideEffectId};
use crate::seed::{index_below, shuffle, stage_rng};

pub const NEGATIVES_STAGE: &str = "negatives";
pub const SPLIT_STAGE: &str = "split";
const REJECTION_ATTEMPTS_PER_DRAW: usize = 50;
const MIN_DATASET: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairSample {
    pub pair: DrugPair,
    pub positive: bool,
}

impl PairSample {
    pub fn label(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideEffectDataset {
    pub side_effect: SideEffectId,
    pub train: Vec<PairSample>,
    pub val: Vec<PairSample>,
    pub test: Vec<PairSample>,
    pub seed: u64,
}

impl SideEffectDataset {
    pub fn split(&self, split: Split) -> &[PairSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The set of unordered pairs negatives are drawn from.
#[derive(Debug, Clone)]
pub enum PairUniverse {
    /// Every pair of distinct drugs.
    All(Vec<DrugId>),
    /// Pairs with at least one anchor drug (e.g. a treatment cohort).
    Anchored { anchors: Vec<DrugId>, others: Vec<DrugId> },
}

fn sorted_unique(drugs: &[DrugId]) -> Vec<DrugId> {
    let mut v = drugs.to_vec();
    v.sort();
    v.dedup();
    v
}

fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Maps `k < n(n-1)/2` to the pair `(i, j)`, `i < j`, in row-major order of the
/// strict upper triangle.
fn unrank_triangle(k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    let mut rest = k;
    loop {
        let row = n - 1 - i;
        if rest < row {
            return (i, i + 1 + rest);
        }
        rest -= row;
        i += 1;
    }
}

impl PairUniverse {
    pub fn all(drugs: &[DrugId]) -> Self {
        PairUniverse::All(sorted_unique(drugs))
    }

    pub fn anchored(anchors: &[DrugId], drugs: &[DrugId]) -> Self {
        let anchors = sorted_unique(anchors);
        let anchor_set: HashSet<&DrugId> = anchors.iter().collect();
        let others = sorted_unique(drugs)
            .into_iter()
            .filter(|d| !anchor_set.contains(d))
            .collect();
        PairUniverse::Anchored { anchors, others }
    }

    pub fn len(&self) -> usize {
        match self {
            PairUniverse::All(drugs) => choose2(drugs.len()),
            PairUniverse::Anchored { anchors, others } => choose2(anchors.len()) + anchors.len() * others.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, pair: &DrugPair) -> bool {
        match self {
            PairUniverse::All(drugs) => {
                drugs.binary_search(pair.first()).is_ok() && drugs.binary_search(pair.second()).is_ok()
            }
            PairUniverse::Anchored { anchors, others } => {
                let a = |d: &DrugId| anchors.binary_search(d).is_ok();
                let o = |d: &DrugId| others.binary_search(d).is_ok();
                let (x, y) = (pair.first(), pair.second());
                (a(x) && (a(y) || o(y))) || (o(x) && a(y))
            }
        }
    }

    /// The `k`-th pair of the universe in a fixed enumeration order.
    pub fn pair_at(&self, k: usize) -> DrugPair {
        let make = |x: &DrugId, y: &DrugId| DrugPair::new(x.clone(), y.clone()).expect("distinct drugs");
        match self {
            PairUniverse::All(drugs) => {
                let (i, j) = unrank_triangle(k, drugs.len());
                make(&drugs[i], &drugs[j])
            }
            PairUniverse::Anchored { anchors, others } => {
                let within = choose2(anchors.len());
                if k < within {
                    let (i, j) = unrank_triangle(k, anchors.len());
                    make(&anchors[i], &anchors[j])
                } else {
                    let c = k - within;
                    make(&anchors[c / others.len()], &others[c % others.len()])
                }
            }
        }
    }
}

/// Draws `|positives|` negatives uniformly from all pairs over `universe_drugs`.
pub fn sample_negatives(
    side_effect: &SideEffectId,
    positives: &HashSet<DrugPair>,
    universe_drugs: &[DrugId],
    seed: u64,
) -> Result<Vec<PairSample>> {
    sample_negatives_in(
        side_effect,
        positives,
        &PairUniverse::all(universe_drugs),
        positives.len(),
        seed,
    )
}

/// Draws `count` distinct pairs uniformly without replacement from
/// `universe \ positives`. The generator is seeded from `(seed, side effect code)`.
///
/// Rejection sampling runs for at most 50 attempts per requested pair; if that
/// budget runs out, the remaining draws come from an explicit enumeration of the
/// unused candidates, which keeps the result uniform and always terminates.
pub fn sample_negatives_in(
    side_effect: &SideEffectId,
    positives: &HashSet<DrugPair>,
    universe: &PairUniverse,
    count: usize,
    seed: u64,
) -> Result<Vec<PairSample>> {
    let total = universe.len();
    let positives_inside = positives.iter().filter(|p| universe.contains(p)).count();
    let available = total - positives_inside;
    if count > available {
        return Err(Error::SamplingExhausted {
            side_effect: side_effect.code.clone(),
            needed: count,
            available,
        });
    }

    let mut rng = stage_rng(seed, NEGATIVES_STAGE, &side_effect.code);
    let mut chosen: HashSet<DrugPair> = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < REJECTION_ATTEMPTS_PER_DRAW * count {
        attempts += 1;
        let pair = universe.pair_at(index_below(&mut rng, total));
        if positives.contains(&pair) || chosen.contains(&pair) {
            continue;
        }
        chosen.insert(pair.clone());
        out.push(PairSample { pair, positive: false });
    }
    if out.len() < count {
        let mut candidates: Vec<DrugPair> = (0..total)
            .map(|k| universe.pair_at(k))
            .filter(|p| !positives.contains(p) && !chosen.contains(p))
            .collect();
        let needed = count - out.len();
        for i in 0..needed {
            let j = i + index_below(&mut rng, candidates.len() - i);
            candidates.swap(i, j);
        }
        out.extend(
            candidates
                .into_iter()
                .take(needed)
                .map(|pair| PairSample { pair, positive: false }),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// Splits `total` between two classes proportionally; the leftover unit goes to
/// the larger fractional share, or to `tie_to_first` on a tie.
fn allocate(total: usize, first: usize, second: usize, tie_to_first: bool) -> (usize, usize) {
    let n = first + second;
    if n == 0 {
        return (0, 0);
    }
    let (a, ra) = (total * first / n, total * first % n);
    let (b, rb) = (total * second / n, total * second % n);
    match total - a - b {
        0 => (a, b),
        _ if ra > rb || (ra == rb && tie_to_first) => (a + 1, b),
        _ => (a, b + 1),
    }
}

/// Stratified split: each class is shuffled with the seeded generator and
/// sliced contiguously into train, validation and test. Validation and test
/// sizes are `floor(ratio × n)` overall, with the remainder going to train.
pub fn split_dataset(
    side_effect: &SideEffectId,
    samples: &[PairSample],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SideEffectDataset> {
    if samples.len() < MIN_DATASET {
        return Err(Error::TooSmall {
            actual: samples.len(),
            minimum: MIN_DATASET,
        });
    }
    let sum = ratios.train + ratios.val + ratios.test;
    if [ratios.train, ratios.val, ratios.test]
        .iter()
        .any(|r| !(0.0..=1.0).contains(r))
        || (sum - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "split ratios {ratios:?} must be fractions summing to 1"
        )));
    }
    let n = samples.len();
    let val_total = (ratios.val * n as f64 + 1e-9).floor() as usize;
    let test_total = (ratios.test * n as f64 + 1e-9).floor() as usize;

    let mut rng = stage_rng(seed, SPLIT_STAGE, &side_effect.code);
    let mut pos: Vec<PairSample> = samples.iter().filter(|s| s.positive).cloned().collect();
    let mut neg: Vec<PairSample> = samples.iter().filter(|s| !s.positive).cloned().collect();
    shuffle(&mut rng, &mut pos);
    shuffle(&mut rng, &mut neg);

    let (val_pos, val_neg) = allocate(val_total, pos.len(), neg.len(), true);
    let (test_pos, test_neg) = allocate(test_total, pos.len(), neg.len(), false);

    let mut dataset = SideEffectDataset {
        side_effect: side_effect.clone(),
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (class, n_val, n_test) in [(pos, val_pos, test_pos), (neg, val_neg, test_neg)] {
        let n_train = class.len() - n_val - n_test;
        let mut it = class.into_iter();
        dataset.train.extend(it.by_ref().take(n_train));
        dataset.val.extend(it.by_ref().take(n_val));
        dataset.test.extend(it);
    }
    Ok(dataset)
}

/// Positives plus `neg_ratio × |positives|` sampled negatives, split 80/10/10.
pub fn build_dataset(
    side_effect: &SideEffectId,
    positives: &HashSet<DrugPair>,
    universe: &PairUniverse,
    neg_ratio: usize,
    seed: u64,
) -> Result<SideEffectDataset> {
    let mut ordered: Vec<&DrugPair> = positives.iter().collect();
    ordered.sort();
    let mut samples: Vec<PairSample> = ordered
        .into_iter()
        .map(|pair| PairSample {
            pair: pair.clone(),
            positive: true,
        })
        .collect();
    samples.extend(sample_negatives_in(
        side_effect,
        positives,
        universe,
        neg_ratio * positives.len(),
        seed,
    )?);
    split_dataset(side_effect, &samples, SplitRatios::default(), seed)
}

/// Writes `drug_a,drug_b,label,split` rows, preceded by an optional `#` comment.
pub fn write_dataset(path: impl AsRef<Path>, dataset: &SideEffectDataset, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("drug_a,drug_b,label,split\n");
    for split in [Split::Train, Split::Val, Split::Test] {
        for s in dataset.split(split) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.pair.first(),
                s.pair.second(),
                u8::from(s.positive),
                split.as_str()
            ));
        }
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a dataset file. The seed is taken from a `seed=<n>` token in a leading
/// comment when present.
pub fn read_dataset(path: impl AsRef<Path>, side_effect: SideEffectId) -> Result<SideEffectDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dataset = SideEffectDataset {
        side_effect,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed: 0,
    };
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(seed) = comment
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix("seed="))
                .and_then(|s| s.parse().ok())
            {
                dataset.seed = seed;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != "drug_a,drug_b,label,split" {
                return Err(Error::format(
                    path,
                    line_no,
                    "expected header `drug_a,drug_b,label,split`",
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [a, b, label, split] = fields[..] else {
            return Err(Error::format(path, line_no, "expected 4 fields"));
        };
        let pair = DrugId::new(a)
            .zip(DrugId::new(b))
            .and_then(|(a, b)| DrugPair::new(a, b))
            .ok_or_else(|| Error::format(path, line_no, "invalid drug pair"))?;
        let positive = match label {
            "1" => true,
            "0" => false,
            other => return Err(Error::format(path, line_no, format!("label `{other}` is not 0 or 1"))),
        };
        let sample = PairSample { pair, positive };
        match split {
            "train" => dataset.train.push(sample),
            "val" => dataset.val.push(sample),
            "test" => dataset.test.push(sample),
            other => return Err(Error::format(path, line_no, format!("unknown split `{other}`"))),
        }
    }
    if !header_seen {
        return Err(Error::MissingColumn {
            path: path.to_path_buf(),
            column: "drug_a".into(),
        });
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DrugId {
        DrugId::new(s).unwrap()
    }

    fn se() -> SideEffectId {
        SideEffectId::from_code("C001").unwrap()
    }

    fn pair(a: &str, b: &str) -> DrugPair {
        DrugPair::new(d(a), d(b)).unwrap()
    }

    fn samples(n_pos: usize, n_neg: usize) -> Vec<PairSample> {
        (0..n_pos + n_neg)
            .map(|i| PairSample {
                pair: pair(&format!("x{i:04}"), "y"),
                positive: i < n_pos,
            })
            .collect()
    }

    #[test]
    fn three_drug_universe() {
        let positives = HashSet::from([pair("a", "b")]);
        let drugs = [d("a"), d("b"), d("c")];
        let first = sample_negatives(&se(), &positives, &drugs, 5).unwrap();
        assert_eq!(first.len(), 1);
        assert!(first[0].pair == pair("a", "c") || first[0].pair == pair("b", "c"));
        assert_eq!(first, sample_negatives(&se(), &positives, &drugs, 5).unwrap());
    }

    #[test]
    fn exhausted_universe() {
        let drugs = [d("a"), d("b"), d("c")];
        let positives = HashSet::from([pair("a", "b"), pair("a", "c"), pair("b", "c")]);
        assert!(matches!(
            sample_negatives(&se(), &positives, &drugs, 1),
            Err(Error::SamplingExhausted { available: 0, .. })
        ));
    }

    #[test]
    fn fallback_enumeration_fills_dense_request() {
        // 6 drugs -> 15 pairs, 7 positives, ask for all 8 remaining candidates
        let drugs: Vec<DrugId> = (0..6).map(|i| d(&format!("d{i}"))).collect();
        let universe = PairUniverse::all(&drugs);
        let positives: HashSet<DrugPair> = (0..7).map(|k| universe.pair_at(k)).collect();
        let negs = sample_negatives_in(&se(), &positives, &universe, 8, 3).unwrap();
        let got: HashSet<_> = negs.iter().map(|s| s.pair.clone()).collect();
        let expected: HashSet<_> = (7..15).map(|k| universe.pair_at(k)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn universe_enumeration_is_exhaustive() {
        let drugs: Vec<DrugId> = ["p", "q", "r", "s", "t"].iter().map(|s| d(s)).collect();
        let all = PairUniverse::all(&drugs);
        let pairs: HashSet<_> = (0..all.len()).map(|k| all.pair_at(k)).collect();
        assert_eq!(pairs.len(), 10);

        let anchored = PairUniverse::anchored(&[d("q"), d("s")], &drugs);
        assert_eq!(anchored.len(), 1 + 2 * 3);
        let listed: HashSet<_> = (0..anchored.len()).map(|k| anchored.pair_at(k)).collect();
        let expected: HashSet<_> = pairs
            .iter()
            .filter(|p| p.contains(&d("q")) || p.contains(&d("s")))
            .cloned()
            .collect();
        assert_eq!(listed, expected);
        for p in &pairs {
            assert_eq!(anchored.contains(p), expected.contains(p));
            assert!(all.contains(p));
        }
        assert!(!all.contains(&pair("p", "zz")));
    }

    #[test]
    fn split_sizes() {
        let ds = split_dataset(&se(), &samples(50, 50), SplitRatios::default(), 1).unwrap();
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (80, 10, 10));
        let ds = split_dataset(&se(), &samples(51, 50), SplitRatios::default(), 1).unwrap();
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (81, 10, 10));
        let ds = split_dataset(&se(), &samples(15, 15), SplitRatios::default(), 1).unwrap();
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (24, 3, 3));
        assert!(matches!(
            split_dataset(&se(), &samples(5, 4), SplitRatios::default(), 1),
            Err(Error::TooSmall { actual: 9, .. })
        ));
    }

    #[test]
    fn split_balance_twenty_each() {
        let ds = split_dataset(&se(), &samples(20, 20), SplitRatios::default(), 11).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            let part = ds.split(split);
            let p = part.iter().filter(|s| s.positive).count();
            assert!(p.abs_diff(part.len() - p) <= 1, "{split:?}");
        }
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (32, 4, 4));
    }

    #[test]
    fn dataset_file_round_trip() {
        let ds = split_dataset(&se(), &samples(10, 10), SplitRatios::default(), 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("datasets").join("C001.csv");
        write_dataset(&path, &ds, Some("seed=42 config=abc")).unwrap();
        assert_eq!(read_dataset(&path, se()).unwrap(), ds);
    }
}
