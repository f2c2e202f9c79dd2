//! Per-class precision and recall, overall accuracy and the binary
//! diffraction/no-diffraction accuracy of a confusion matrix.
//!
//! ```text
//! cargo run --example confusion_metrics
//! ```

use diffract::dataset::ClassLabel;
use diffract::search::{ConfusionMatrix, EvaluationReport};

fn main() -> anyhow::Result<()> {
    let counts = vec![
        vec![2069, 0, 0, 0, 0],
        vec![0, 3266, 2, 0, 0],
        vec![1, 18, 3280, 47, 0],
        vec![0, 0, 38, 2368, 38],
        vec![0, 0, 0, 44, 1428],
    ];
    let matrix = ConfusionMatrix::from_counts(ClassLabel::names(), counts)?;
    print!("{matrix}");
    let negatives = [ClassLabel::Blank.index(), ClassLabel::NoCrystal.index()];
    let report = EvaluationReport::from_matrix(matrix, &negatives);
    println!("accuracy {:.2}%", 100.0 * report.accuracy.unwrap());
    println!(
        "binary accuracy {:.2}%",
        100.0 * report.binary_accuracy.unwrap()
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
