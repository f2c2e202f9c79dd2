//! Command-line front end for dataset generation, feature extraction,
//! training, search and evaluation.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use diffract::classifiers::{ClassifierParams, RfParams, SvmParams, TrainedModel};
use diffract::dataset::{calibrate_budget_ranges, generate_dataset, SimConfig, Split};
use diffract::features::{extract_manifest, FeatureExtractor, FeatureTable};
use diffract::pipeline::{self, load_split, PipelineSpec, SearchObjective};
use diffract::search::{random_search, successive_halving, HalvingSchedule, SearchSpace};

#[derive(Parser)]
#[command(
    name = "diffract",
    version,
    about = "Diffraction image simulation and texture classification"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Rf,
    Svm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled image dataset.
    Generate {
        /// Simulation config (JSON); defaults to the named preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Total images, spread evenly over the classes.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Pilot run reporting Bragg budget percentiles.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        shots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Extract features for every image of a manifest into CSV.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        /// Extractor JSON, e.g. {"kind":"lbp","points":24,"radius":3}.
        #[arg(long, conflicts_with = "preset")]
        params: Option<PathBuf>,
        /// Extractor of a pipeline preset (rf-glcm or svm-glcm).
        #[arg(long, default_value = "rf-glcm")]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on the training split of a feature CSV.
    Train {
        #[arg(long, value_enum)]
        model: Family,
        #[arg(long)]
        features: PathBuf,
        /// Classifier parameters (JSON); defaults to the GLCM preset.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hyperparameter search on the train/val splits of a dataset.
    Search {
        #[arg(long)]
        manifest: PathBuf,
        /// Search space name.
        #[arg(long, default_value = "texture")]
        space: String,
        #[arg(long, value_enum)]
        classifier: Option<Family>,
        /// Random-search trials, or initial configurations with --eta.
        #[arg(long, default_value_t = 30)]
        iters: usize,
        /// Run successive halving with this reduction factor.
        #[arg(long)]
        eta: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained model on one split of a feature CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        report: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(config: Option<&PathBuf>, preset: &str) -> anyhow::Result<SimConfig> {
    Ok(match config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::preset(preset)?,
    })
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Generate {
            config,
            preset,
            seed,
            out,
            count,
        } => {
            let mut config = load_config(config.as_ref(), &preset)?;
            if let Some(n) = count {
                config.set_total_count(n);
            }
            let manifest = generate_dataset(&config, seed, &out)?;
            println!("{}", manifest.display());
        }
        Command::Calibrate {
            config,
            shots,
            seed,
        } => {
            let config = load_config(config.as_ref(), "desk")?;
            let cal = calibrate_budget_ranges(&config, shots, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({ "budget_edges": cal.edges }))?
            );
        }
        Command::Features {
            manifest,
            params,
            preset,
            out,
        } => {
            let extractor: FeatureExtractor = match params {
                Some(p) => read_json(&p)?,
                None => PipelineSpec::preset(&preset, 0)?.extractor,
            };
            let table = extract_manifest(&manifest, &extractor)?;
            table.write_csv(&out)?;
            println!("{} rows, schema {}", table.rows.len(), table.schema);
        }
        Command::Train {
            model,
            features,
            params,
            seed,
            out,
        } => {
            let classifier = match (model, params) {
                (Family::Rf, Some(p)) => ClassifierParams::Rf(RfParams {
                    seed,
                    ..read_json(&p)?
                }),
                (Family::Svm, Some(p)) => ClassifierParams::Svm(read_json::<SvmParams>(&p)?),
                (Family::Rf, None) => PipelineSpec::rf_glcm_best(seed).classifier,
                (Family::Svm, None) => PipelineSpec::svm_glcm_best().classifier,
            };
            let table = FeatureTable::read_csv(&features)?;
            let trained = pipeline::train_model(&table, &classifier, Split::Train)?;
            trained.save(&out)?;
            println!("{}", out.display());
        }
        Command::Search {
            manifest,
            space,
            classifier,
            iters,
            eta,
            seed,
            out,
        } => {
            if space != "texture" {
                bail!("unknown search space `{space}`");
            }
            let family = classifier.map(|f| match f {
                Family::Rf => "rf",
                Family::Svm => "svm",
            });
            let space = SearchSpace::texture_classifiers(family)?;
            let objective = SearchObjective::new(
                load_split(&manifest, Split::Train)?,
                load_split(&manifest, Split::Val)?,
                seed,
            )?;
            let f = objective.objective();
            let result = match eta {
                Some(eta) => {
                    successive_halving(&space, &f, &HalvingSchedule::new(iters, eta, 1.0), seed)?
                }
                None => random_search(&space, |c| f(c, 1.0), iters, seed)?,
            };
            result.write_json(&out)?;
            println!(
                "best validation accuracy {:.4} with {}",
                result.best.score.unwrap_or(f64::NAN),
                serde_json::to_string(&result.best.config)?
            );
        }
        Command::Eval {
            model,
            features,
            split,
            report,
        } => {
            let model = TrainedModel::load(&model)?;
            let table = FeatureTable::read_csv(&features)?;
            let r = pipeline::evaluate_model(&model, &table, split.parse()?)?;
            r.write_json(&report)?;
            print!("{}", r.confusion);
            println!(
                "accuracy {:.4}, binary accuracy {:.4}",
                r.accuracy.unwrap_or(f64::NAN),
                r.binary_accuracy.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
