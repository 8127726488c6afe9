use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drivenn::synthetic::{generate, FixturePaths, SyntheticSpec};

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    paths: FixturePaths,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let paths = generate(&SyntheticSpec::default())
        .write_fixture(root.join("input"))
        .unwrap();
    Fixture { _dir: dir, root, paths }
}

impl Fixture {
    fn out(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Runs a subcommand with every input table and quick training settings.
    fn run(&self, out: &Path, args: &[&str]) -> Output {
        let p = &self.paths;
        let s = |p: &Path| p.display().to_string();
        Command::new(env!("CARGO_BIN_EXE_drivenn"))
            .args(args)
            .args(["--out", &s(out)])
            .args(["--ddi", &s(&p.ddi), "--targets", &s(&p.targets), "--mono", &s(&p.mono)])
            .args(["--embeddings", &s(&p.embeddings), "--unii-records", &s(&p.unii)])
            .args(["--cohort-list", &s(&p.cohort), "--saedr", &s(&p.saedr)])
            .args(["--min-positive-pairs", "20", "--layers", "32,16"])
            .args(if args.contains(&"--epochs") {
                &[][..]
            } else {
                &["--epochs", "3"][..]
            })
            .output()
            .unwrap()
    }

    fn ok(&self, out: &Path, args: &[&str]) -> String {
        let o = self.run(out, args);
        assert!(
            o.status.success(),
            "`drivenn {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&o.stderr)
        );
        String::from_utf8(o.stdout).unwrap()
    }
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drivenn")).args(args).output().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(
        lines.next().unwrap().starts_with("# seed=42 config="),
        "{}",
        path.display()
    );
    lines.skip(1).map(String::from).collect()
}

#[test]
fn help_and_usage_errors() {
    let help = bare(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["features", "train", "tune", "eval-cross", "cohort", "analyze", "sweep"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    assert_eq!(bare(&["train", "--help"]).status.code(), Some(0));
    assert_eq!(bare(&[]).status.code(), Some(1));
    assert_eq!(bare(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bare(&["train", "--scope", "everything"]).status.code(), Some(1));
}

#[test]
fn user_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.display().to_string();
    // missing required input
    assert_eq!(bare(&["features", "--out", &o]).status.code(), Some(1));
    // unreadable file
    let missing = dir.path().join("nope.csv").display().to_string();
    assert_eq!(
        bare(&[
            "features",
            "--out",
            &o,
            "--ddi",
            &missing,
            "--targets",
            &missing,
            "--mono",
            &missing
        ])
        .status
        .code(),
        Some(1)
    );
    // out-of-range setting
    assert_eq!(
        bare(&["train", "--out", &o, "--pca-threshold", "1.5"]).status.code(),
        Some(1)
    );
    // training before features exist
    let f = fixture();
    let o = f.run(&out, &["train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn malformed_data_exits_two() {
    let f = fixture();
    let bad = f.root.join("bad.csv");
    std::fs::write(&bad, "drug_a,drug_b,side_effect_code\nCID1,CID2,C1\n").unwrap();
    let p = &f.paths;
    let s = |p: &Path| p.display().to_string();
    let o = Command::new(env!("CARGO_BIN_EXE_drivenn"))
        .args(["features", "--out", &s(&f.out("o")), "--ddi", &s(&bad)])
        .args(["--targets", &s(&p.targets), "--mono", &s(&p.mono), "--no-embeddings"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("side_effect_name"));

    std::fs::create_dir_all(f.out("o")).unwrap();
    std::fs::write(f.out("o").join("features.bin"), b"not a feature file").unwrap();
    let o = f.run(&f.out("o"), &["train"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn full_pipeline() {
    let f = fixture();
    let out = f.out("run");
    f.ok(&out, &["features"]);
    let dims = data_rows(&out.join("feature_dims.csv"));
    assert_eq!(dims.len(), 3);

    f.ok(&out, &["train"]);
    let all = out.join("all");
    assert_eq!(data_rows(&all.join("metrics.csv")).len(), 10);
    assert_eq!(std::fs::read_dir(all.join("models")).unwrap().count(), 10);
    assert_eq!(std::fs::read_dir(all.join("datasets")).unwrap().count(), 10);
    assert_eq!(data_rows(&all.join("training_log.csv")).len(), 30);
    assert!(all.join("timing.json").exists());

    f.ok(&out, &["cohort"]);
    let cohort_drugs = data_rows(&out.join("cohort").join("cohort_drugs.csv"));
    assert_eq!(cohort_drugs.len(), 15);

    f.ok(&out, &["train", "--scope", "cohort"]);
    let cohort_metrics = data_rows(&out.join("cohort").join("metrics.csv"));
    assert!(!cohort_metrics.is_empty());

    // a scope's models on its own tests reproduce its metrics
    f.ok(&out, &["eval-cross", "--models", "all", "--tests", "all"]);
    let own = std::fs::read_to_string(all.join("metrics.csv")).unwrap();
    let cross = std::fs::read_to_string(out.join("cross").join("all_on_all.csv")).unwrap();
    assert_eq!(own, cross);
    f.ok(&out, &["eval-cross", "--models", "all", "--tests", "cohort"]);
    let shared = data_rows(&out.join("cross").join("all_on_cohort.csv"));
    assert_eq!(shared.len(), cohort_metrics.len());

    f.ok(&out, &["analyze", "severity"]);
    let bins = data_rows(&all.join("severity_report.csv"));
    assert_eq!(bins.len(), 3);
    f.ok(&out, &["analyze", "eda"]);
    let eda: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("eda.json")).unwrap()).unwrap();
    assert!(eda["median_all_pairs"].as_f64().unwrap() >= 1.0);
    assert!(eda["top_mono_all"].as_array().unwrap().len() <= 10);
}

#[test]
fn tune_writes_log_and_consensus() {
    let f = fixture();
    let out = f.out("run");
    f.ok(&out, &["features"]);
    f.ok(&out, &["tune", "--tune-sample", "2", "--max-epochs", "3", "--eta", "3"]);
    let log = data_rows(&out.join("tune").join("tuning_log.csv"));
    // R=3, eta=3: brackets (3 at 1 epoch, 1 at 3) and (2 at 3): 6 evaluations each
    assert_eq!(log.len(), 12);
    let consensus: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("tune").join("consensus.json")).unwrap()).unwrap();
    assert!(consensus["consensus"]["layer_widths"]
        .as_array()
        .is_some_and(|w| !w.is_empty()));
    assert_eq!(consensus["winners"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_covers_both_embedding_arms() {
    let f = fixture();
    let out = f.out("run");
    f.ok(&out, &["sweep", "--epochs", "1"]);
    let rows = data_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 8);
    f.ok(&out, &["sweep", "--epochs", "1", "--no-embeddings"]);
    assert_eq!(data_rows(&out.join("sweep.csv")).len(), 4);
}

#[test]
fn rerun_is_byte_identical_and_seed_sensitive() {
    let f = fixture();
    let read =
        |out: &Path| ["metrics.csv", "training_log.csv"].map(|name| std::fs::read(out.join("all").join(name)).unwrap());
    let a = f.out("a");
    let b = f.out("b");
    for out in [&a, &b] {
        f.ok(out, &["features"]);
        f.ok(out, &["train", "--workers", if out == &a { "1" } else { "4" }]);
    }
    assert_eq!(
        std::fs::read(a.join("features.bin")).unwrap(),
        std::fs::read(b.join("features.bin")).unwrap()
    );
    assert_eq!(read(&a), read(&b));

    let c = f.out("c");
    f.ok(&c, &["features", "--seed", "7"]);
    f.ok(&c, &["train", "--seed", "7"]);
    assert_ne!(read(&a)[1], read(&c)[1]);
}
