//! Confusion matrices and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(Error::InvalidInput(format!(
                "confusion matrix must be {0}x{0}",
                classes.len()
            )));
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn from_predictions(
        y_true: &[usize],
        y_pred: &[usize],
        classes: &[String],
    ) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::InvalidInput(format!(
                "{} true labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        let k = classes.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= k || p >= k {
                return Err(Error::InvalidInput(format!(
                    "label {} outside the class list",
                    t.max(p)
                )));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn column_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    /// `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.trace(), self.total())
    }

    /// `None` when nothing was predicted as `c`.
    pub fn precision(&self, c: usize) -> Option<f64> {
        ratio(self.counts[c][c], self.column_sum(c))
    }

    /// `None` when class `c` has no samples.
    pub fn recall(&self, c: usize) -> Option<f64> {
        ratio(self.counts[c][c], self.row_sum(c))
    }

    /// Accuracy of the two-class problem `negatives` versus every other
    /// class.
    pub fn binary_collapse(&self, negatives: &[usize]) -> Option<f64> {
        let k = self.n_classes();
        let is_neg = |c: usize| negatives.contains(&c);
        let correct: u64 = (0..k)
            .flat_map(|t| (0..k).map(move |p| (t, p)))
            .filter(|&(t, p)| is_neg(t) == is_neg(p))
            .map(|(t, p)| self.counts[t][p])
            .sum();
        ratio(correct, self.total())
    }
}

/// Table with true classes as rows, a recall column and a precision row.
impl std::fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pct =
            |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v));
        let width = self
            .classes
            .iter()
            .map(|c| c.len())
            .max()
            .unwrap_or(0)
            .max(9);
        write!(f, "{:width$}", "")?;
        for c in &self.classes {
            write!(f, " {c:>width$}")?;
        }
        writeln!(f, " {:>width$}", "recall %")?;
        for (i, row) in self.counts.iter().enumerate() {
            write!(f, "{:width$}", self.classes[i])?;
            for v in row {
                write!(f, " {v:>width$}")?;
            }
            writeln!(f, " {:>width$}", pct(self.recall(i)))?;
        }
        write!(f, "{:width$}", "precision")?;
        for c in 0..self.n_classes() {
            write!(f, " {:>width$}", pct(self.precision(c)))?;
        }
        writeln!(f)
    }
}

/// Metrics of one evaluation; undefined metrics serialise as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub accuracy: Option<f64>,
    /// Accuracy after collapsing `negative_classes` into one class and the
    /// rest into the other.
    pub binary_accuracy: Option<f64>,
    pub negative_classes: Vec<String>,
}

impl EvaluationReport {
    pub fn from_matrix(confusion: ConfusionMatrix, negatives: &[usize]) -> Self {
        let k = confusion.n_classes();
        EvaluationReport {
            precision: (0..k).map(|c| confusion.precision(c)).collect(),
            recall: (0..k).map(|c| confusion.recall(c)).collect(),
            accuracy: confusion.accuracy(),
            binary_accuracy: confusion.binary_collapse(negatives),
            negative_classes: negatives
                .iter()
                .map(|&c| confusion.classes[c].clone())
                .collect(),
            confusion,
        }
    }

    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Confusion matrix and metrics of `y_pred` against `y_true`; `negatives`
/// selects the classes collapsed for the binary accuracy.
pub fn evaluate(
    y_true: &[usize],
    y_pred: &[usize],
    classes: &[String],
    negatives: &[usize],
) -> Result<EvaluationReport> {
    if let Some(&c) = negatives.iter().find(|&&c| c >= classes.len()) {
        return Err(Error::InvalidInput(format!(
            "negative class {c} outside the class list"
        )));
    }
    let m = ConfusionMatrix::from_predictions(y_true, y_pred, classes)?;
    Ok(EvaluationReport::from_matrix(m, negatives))
}
