//! Labelled dataset generation, manifests, PGM I/O and preprocessing of
//! real detector frames.

mod classes;
mod config;
mod generate;
mod manifest;
mod pgm;
mod real;

pub use classes::{label_image, ClassLabel, ClassSpec};
pub use config::{SimConfig, SplitFractions, StructureFactorSource};
pub use generate::{
    apportion, assign_splits, calibrate_budget_ranges, generate_dataset, generate_image,
    BudgetCalibration, GeneratedImage, Simulator, GENERATOR_VERSION,
};
pub use manifest::{read_manifest, write_manifest, ManifestRecord, Split};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use real::{crop_downsample_real, downsample_area, preprocess_real, CropParams};
