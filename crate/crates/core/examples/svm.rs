//! Trains the GLCM RBF-SVM pipeline and reports the solver trace of each
//! one-vs-rest machine.
//!
//! ```text
//! cargo run --release --example svm -- [count] [seed]
//! ```

use diffract::classifiers::Model;
use diffract::dataset::{generate_dataset, SimConfig, Split};
use diffract::features::extract_manifest;
use diffract::pipeline::{evaluate_model, train_model, PipelineSpec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);

    let dir = tempfile::tempdir()?;
    let mut config = SimConfig::default();
    config.set_total_count(count);
    let manifest = generate_dataset(&config, seed, dir.path())?;

    let spec = PipelineSpec::svm_glcm_best();
    let table = extract_manifest(&manifest, &spec.extractor)?;
    let model = train_model(&table, &spec.classifier, Split::Train)?;
    if let Model::Svm(svm) = &model.model {
        println!(
            "gamma {}, {} stored support vectors",
            svm.gamma,
            svm.vectors.len()
        );
        for (class, m) in model.classes.iter().zip(&svm.machines) {
            println!(
                "  {class:<10} {:4} SVs  {:6} SMO iterations  dual objective {:.4}",
                m.support.len(),
                m.trace.iterations,
                m.trace.objective.last().copied().unwrap_or(f64::NAN)
            );
        }
    }
    let report = evaluate_model(&model, &table, Split::Test)?;
    print!("{}", report.confusion);
    println!(
        "accuracy {:.2}%",
        100.0 * report.accuracy.unwrap_or(f64::NAN)
    );
    Ok(())
}
