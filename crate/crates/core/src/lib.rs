//! Serial-crystallography diffraction image simulation and texture-based
//! image classification.
//!
//! The crate is organised as a pipeline:
//!
//! * [`geometry`] maps detector pixels to scattering vectors and samples the
//!   stochastic per-shot parameters (fluence, wavelength, orientation,
//!   mosaic domains).
//! * [`bragg`] turns a shot and a structure-factor table into expected Bragg
//!   photons per pixel.
//! * [`scene`] adds background scattering, the detector point spread and
//!   the readout chain down to 8-bit images.
//! * [`dataset`] orchestrates labelled image generation, manifests, PGM I/O
//!   and preprocessing of real detector frames.
//! * [`features`] computes GLCM/Haralick and LBP texture descriptors.
//! * [`classifiers`] holds the random forest and RBF-kernel SVM.
//! * [`search`] contains the hyperparameter search harness and the
//!   confusion-matrix metrics.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bragg;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod features;
pub mod geometry;
pub mod image;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod search;

pub use error::{Error, Result};
pub use image::{ExpectationImage, Image8, RawImage16};
