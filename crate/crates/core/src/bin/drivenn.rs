use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use drivenn::nn::MlpConfig;
use drivenn::pipeline::{self, InputPaths, RunConfig, Scope, TuneOptions};
use drivenn::tuner::{HyperbandParams, SearchSpace};

/// Polypharmacy side effect prediction pipeline.
///
/// Stages hand off through files in the output directory: run `features`
/// first, then `train`, and the rest as needed.
#[derive(Parser)]
#[command(name = "drivenn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory for all artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Drug-pair side effects CSV (drug_a,drug_b,side_effect_code,side_effect_name)
    #[arg(long, global = true)]
    ddi: Option<PathBuf>,
    /// Drug-protein targets CSV (drug,gene)
    #[arg(long, global = true)]
    targets: Option<PathBuf>,
    /// Single-drug side effects CSV (drug,side_effect_code,side_effect_name)
    #[arg(long, global = true)]
    mono: Option<PathBuf>,
    /// Molecular embeddings CSV (drug_id,e0,e1,...)
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// UNII records TSV (unii,pubchem_id,inchikey,name)
    #[arg(long, global = true)]
    unii_records: Option<PathBuf>,
    /// Manual drug_id to UNII resolutions TSV
    #[arg(long, global = true)]
    overrides: Option<PathBuf>,
    /// Cohort drug list TSV (unii,name); defaults to the bundled cardiovascular list
    #[arg(long, global = true)]
    cohort_list: Option<PathBuf>,
    /// Severity scores TSV (side_effect_code, score)
    #[arg(long, global = true)]
    saedr: Option<PathBuf>,
    /// Cumulative explained variance kept by each PCA block
    #[arg(long, global = true, default_value_t = 0.95)]
    pca_threshold: f64,
    /// Side effects need at least this many positive pairs to get a model
    #[arg(long, global = true, default_value_t = 500)]
    min_positive_pairs: usize,
    /// Global seed; every randomized stage derives its own from it
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Parallel side-effect tasks (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Leave out the molecular embedding block
    #[arg(long, global = true)]
    no_embeddings: bool,
    /// Z-score the protein and mono blocks before PCA
    #[arg(long, global = true)]
    normalize_before_pca: bool,
    /// Keep the epoch with the best validation AUROC instead of the last one
    #[arg(long, global = true)]
    best_val_checkpoint: bool,
    /// Negatives drawn per positive
    #[arg(long, global = true, default_value_t = 1)]
    neg_ratio: usize,
    /// Hidden layer widths, comma separated
    #[arg(long, global = true, value_delimiter = ',', default_values_t = [300, 100])]
    layers: Vec<usize>,
    /// Disable batch normalization
    #[arg(long, global = true)]
    no_batch_norm: bool,
    /// Dropout rate after each hidden layer
    #[arg(long, global = true, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, global = true, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, global = true, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, global = true, default_value_t = 50)]
    epochs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Cohort,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::All => Scope::All,
            ScopeArg::Cohort => Scope::Cohort,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Severity,
    Eda,
}

#[derive(Subcommand)]
enum Command {
    /// Build features.bin from the input tables
    Features,
    /// Train one model per side effect and write test metrics
    Train {
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
    },
    /// Hyperband search and consensus architecture
    Tune {
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
        /// Tune a random subset of this many side effects
        #[arg(long)]
        tune_sample: Option<usize>,
        /// Maximum epochs per trial (R)
        #[arg(long, default_value_t = 50)]
        max_epochs: usize,
        /// Halving rate
        #[arg(long, default_value_t = 3)]
        eta: usize,
    },
    /// Evaluate one scope's models on another scope's test splits
    EvalCross {
        #[arg(long, value_enum)]
        models: ScopeArg,
        #[arg(long, value_enum)]
        tests: ScopeArg,
    },
    /// Resolve the cohort drugs and their interactions
    Cohort,
    /// Severity bins of a trained scope, or descriptive statistics
    Analyze {
        #[arg(value_enum)]
        analysis: Analysis,
        #[arg(long, value_enum, default_value = "all")]
        scope: ScopeArg,
    },
    /// PCA threshold by embedding arm grid of general-model metrics
    Sweep,
}

impl Common {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            inputs: InputPaths {
                ddi: self.ddi.clone(),
                targets: self.targets.clone(),
                mono: self.mono.clone(),
                embeddings: self.embeddings.clone(),
                unii_records: self.unii_records.clone(),
                overrides: self.overrides.clone(),
                cohort_list: self.cohort_list.clone(),
                saedr: self.saedr.clone(),
            },
            out_dir: self.out.clone(),
            pca_threshold: self.pca_threshold,
            min_positive_pairs: self.min_positive_pairs,
            seed: self.seed,
            workers: self.workers,
            no_embeddings: self.no_embeddings,
            normalize_before_pca: self.normalize_before_pca,
            best_val_checkpoint: self.best_val_checkpoint,
            neg_ratio: self.neg_ratio,
            model: MlpConfig {
                layer_widths: self.layers.clone(),
                use_batch_norm: !self.no_batch_norm,
                dropout_rate: self.dropout,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                epochs: self.epochs,
                seed: self.seed,
            },
        }
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn run(cli: Cli) -> drivenn::Result<()> {
    let config = cli.common.run_config();
    match cli.command {
        Command::Features => {
            let bundle = pipeline::cmd_features(&config)?;
            let d = bundle.features.block_dims();
            println!(
                "features: {} drugs, embedding {}, protein {}, mono {}",
                bundle.features.drug_order().len(),
                d.embedding,
                d.protein,
                d.mono
            );
        }
        Command::Train { scope } => {
            let r = pipeline::cmd_train(&config, scope.into())?;
            println!(
                "{} side effects, mean auroc {}, mean auprc {}, skipped {}",
                r.rows.len(),
                fmt_metric(r.mean_auroc),
                fmt_metric(r.mean_auprc),
                r.skipped().count()
            );
        }
        Command::Tune {
            scope,
            tune_sample,
            max_epochs,
            eta,
        } => {
            let options = TuneOptions {
                scope: scope.into(),
                sample: tune_sample,
                params: HyperbandParams { max_epochs, eta },
                space: SearchSpace::default(),
            };
            let c = pipeline::cmd_tune(&config, &options)?;
            println!(
                "consensus: layers {:?}, batch norm {}, dropout {}",
                c.layer_widths, c.use_batch_norm, c.dropout_rate
            );
        }
        Command::EvalCross { models, tests } => {
            let r = pipeline::cmd_eval_cross(&config, models.into(), tests.into())?;
            println!(
                "mean auroc {}, mean auprc {}, skipped {}",
                fmt_metric(r.mean_auroc),
                fmt_metric(r.mean_auprc),
                r.skipped().count()
            );
        }
        Command::Cohort => {
            let r = pipeline::cmd_cohort(&config)?;
            println!(
                "cohort: {} drugs, {} triples, {} unmatched drugs",
                r.spec.resolved_drug_ids.len(),
                r.triples.len(),
                r.unii_match.unmatched.len()
            );
        }
        Command::Analyze { analysis, scope } => match analysis {
            Analysis::Severity => {
                let r = pipeline::cmd_analyze_severity(&config, scope.into())?;
                for b in &r.bins {
                    println!(
                        "[{}, {}): {} side effects, median {}",
                        b.low,
                        b.high,
                        b.count,
                        fmt_metric(b.median_saedr)
                    );
                }
                println!(
                    "excluded below {}, above {}, without score {}",
                    r.excluded_below, r.excluded_above, r.missing_score
                );
            }
            Analysis::Eda => {
                let r = pipeline::cmd_analyze_eda(&config)?;
                println!(
                    "median interactions per pair: all {}, any cohort drug {}, cohort only {}",
                    fmt_metric(r.median_all_pairs),
                    fmt_metric(r.median_cohort_any),
                    fmt_metric(r.median_cohort_only)
                );
            }
        },
        Command::Sweep => {
            for r in pipeline::cmd_sweep(&config)? {
                println!(
                    "threshold {} embeddings {:<5} width {:>4}: auroc {}, auprc {}",
                    r.pca_threshold,
                    r.embeddings,
                    r.feature_width,
                    fmt_metric(r.mean_auroc),
                    fmt_metric(r.mean_auprc)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
