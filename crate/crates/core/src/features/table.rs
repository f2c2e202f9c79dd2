//! Feature tables: batch extraction over a manifest and CSV I/O.

use std::path::Path;

use rayon::prelude::*;

use super::FeatureExtractor;
use crate::dataset::{read_manifest, read_pgm, ClassLabel, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub index: usize,
    pub label: ClassLabel,
    pub split: Split,
    pub values: Vec<f64>,
}

/// Feature vectors of a whole dataset sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: String,
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

const FIXED_COLUMNS: [&str; 4] = ["index", "split", "label", "schema"];

impl FeatureTable {
    pub fn new(schema: String, names: Vec<String>) -> Self {
        FeatureTable {
            schema,
            names,
            rows: Vec::new(),
        }
    }

    /// Rows of `split` as a feature matrix and class ids.
    pub fn split(&self, split: Split) -> (Vec<Vec<f64>>, Vec<usize>) {
        self.rows
            .iter()
            .filter(|r| r.split == split)
            .map(|r| (r.values.clone(), r.label.index()))
            .unzip()
    }

    /// Writes one row per image: `index, split, label, schema, features…`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let header = FIXED_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.names.iter().cloned());
        w.write_record(header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.index.to_string(),
                row.split.to_string(),
                row.label.to_string(),
                self.schema.clone(),
            ];
            // `{:?}` prints the shortest representation that round-trips
            rec.extend(row.values.iter().map(|v| format!("{v:?}")));
            w.write_record(rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
        let header = r.headers()?.clone();
        if header.len() < FIXED_COLUMNS.len()
            || FIXED_COLUMNS
                .iter()
                .zip(header.iter())
                .any(|(a, b)| *a != b)
        {
            return Err(Error::Format(format!(
                "{}: feature CSV must start with columns {}",
                path.display(),
                FIXED_COLUMNS.join(",")
            )));
        }
        let names: Vec<String> = header
            .iter()
            .skip(FIXED_COLUMNS.len())
            .map(String::from)
            .collect();
        let mut schema: Option<String> = None;
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            let parse_err = |what: &str| Error::Parse {
                line,
                message: format!("{}: bad {what}", path.display()),
            };
            let row_schema = &rec[3];
            match &schema {
                None => schema = Some(row_schema.to_string()),
                Some(s) if s != row_schema => {
                    return Err(Error::SchemaMismatch {
                        expected: s.clone(),
                        found: row_schema.to_string(),
                    })
                }
                Some(_) => {}
            }
            let values = rec
                .iter()
                .skip(FIXED_COLUMNS.len())
                .map(|v| v.parse::<f64>().map_err(|_| parse_err("feature value")))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(FeatureRow {
                index: rec[0].parse().map_err(|_| parse_err("index"))?,
                split: rec[1].parse().map_err(|_| parse_err("split"))?,
                label: rec[2].parse().map_err(|_| parse_err("label"))?,
                values,
            });
        }
        Ok(FeatureTable {
            schema: schema.unwrap_or_default(),
            names,
            rows,
        })
    }
}

/// Extracts features for every image of a manifest in parallel. Image paths
/// are resolved against the manifest's directory; rows keep manifest order.
pub fn extract_manifest(
    manifest: impl AsRef<Path>,
    extractor: &FeatureExtractor,
) -> Result<FeatureTable> {
    extractor.validate()?;
    let manifest = manifest.as_ref();
    let root = manifest.parent().unwrap_or(Path::new("."));
    let records = read_manifest(manifest)?;
    let rows = records
        .par_iter()
        .map(|rec| {
            let img = read_pgm(root.join(&rec.path))?;
            Ok(FeatureRow {
                index: rec.index,
                label: rec.label,
                split: rec.split,
                values: extractor.extract(&img)?.values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureTable {
        schema: extractor.schema_id(),
        names: extractor.feature_names(),
        rows,
    })
}
