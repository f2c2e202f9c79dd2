//! Trains the GLCM random-forest pipeline on a freshly generated dataset
//! and evaluates it on the test split.
//!
//! ```text
//! cargo run --release --example random_forest -- [count] [seed]
//! ```

use diffract::dataset::{generate_dataset, SimConfig, Split};
use diffract::features::extract_manifest;
use diffract::pipeline::{evaluate_model, train_model, PipelineSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let dir = tempfile::tempdir()?;
    let mut config = SimConfig::default();
    config.set_total_count(count);
    let manifest = generate_dataset(&config, seed, dir.path())?;

    let spec = PipelineSpec::rf_glcm_best(seed);
    let table = extract_manifest(&manifest, &spec.extractor)?;
    let model = train_model(&table, &spec.classifier, Split::Train)?;
    let report = evaluate_model(&model, &table, Split::Test)?;
    print!("{}", report.confusion);
    println!(
        "accuracy {:.2}%",
        100.0 * report.accuracy.unwrap_or(f64::NAN)
    );
    println!(
        "binary accuracy {:.2}%",
        100.0 * report.binary_accuracy.unwrap_or(f64::NAN)
    );
    Ok(())
}
