//! Photon counting, calibration error, read noise, offset, saturation and
//! square-root compression.

use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ExpectationImage, Image8, RawImage16};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorNoiseModel {
    pub psf_fwhm_px: f64,
    /// RMS of the per-pixel gain map around 1.
    pub calibration_rms: f64,
    /// Read noise in photons RMS.
    pub read_noise_rms: f64,
    /// ADU.
    pub offset: f64,
    /// ADU.
    pub saturation: u16,
    pub adu_per_photon: f64,
    pub calibration_seed: u64,
}

impl Default for DetectorNoiseModel {
    fn default() -> Self {
        DetectorNoiseModel {
            psf_fwhm_px: 1.5,
            calibration_rms: 0.04,
            read_noise_rms: 3.0,
            offset: 10.0,
            saturation: 65025,
            adu_per_photon: 1.0,
            calibration_seed: 0x5EED,
        }
    }
}

impl DetectorNoiseModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.psf_fwhm_px >= 0.0
            && self.calibration_rms >= 0.0
            && self.read_noise_rms >= 0.0
            && self.offset >= 0.0
            && self.adu_per_photon > 0.0;
        if !ok {
            return Err(Error::Config(
                "detector noise parameters out of range".into(),
            ));
        }
        Ok(())
    }
}

/// A detector panel: the noise model plus its fixed per-pixel gain map.
#[derive(Debug, Clone)]
pub struct Detector {
    model: DetectorNoiseModel,
    width: usize,
    height: usize,
    gain_map: Vec<f64>,
}

impl Detector {
    /// Draws the gain map `g_p ~ Normal(1, calibration_rms)` (clamped at 0)
    /// from `calibration_seed` alone.
    pub fn new(model: DetectorNoiseModel, width: usize, height: usize) -> Self {
        let gain_map = if model.calibration_rms == 0.0 {
            vec![1.0; width * height]
        } else {
            let normal = Normal::new(1.0, model.calibration_rms).expect("validated noise model");
            let mut rng = rng::stream(model.calibration_seed, &[rng::tag::CALIBRATION]);
            (0..width * height)
                .map(|_| normal.sample(&mut rng).max(0.0))
                .collect()
        };
        Detector {
            model,
            width,
            height,
            gain_map,
        }
    }

    pub fn model(&self) -> &DetectorNoiseModel {
        &self.model
    }

    pub fn gain_map(&self) -> &[f64] {
        &self.gain_map
    }

    /// Samples detector counts for an expectation image. Row `y` draws from
    /// its own stream derived from `(seed, y)`, so the output does not
    /// depend on thread scheduling.
    pub fn read(&self, img: &ExpectationImage, seed: u64) -> RawImage16 {
        assert_eq!(
            (img.width(), img.height()),
            (self.width, self.height),
            "expectation image does not match the detector"
        );
        let m = &self.model;
        let sat = m.saturation as f64;
        let read_noise = (m.read_noise_rms > 0.0)
            .then(|| Normal::new(0.0, m.read_noise_rms).expect("validated"));
        let mut out = RawImage16::new(self.width, self.height);
        let width = self.width;
        out.as_mut_slice()
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| {
                let mut rng = rng::stream(seed, &[rng::tag::READOUT, y as u64]);
                let expect = img.row(y);
                let gains = &self.gain_map[y * width..(y + 1) * width];
                for ((pixel, &lambda), &gain) in row.iter_mut().zip(expect).zip(gains) {
                    let counts = sample_poisson(lambda, &mut rng);
                    let noise = read_noise.map_or(0.0, |n| n.sample(&mut rng));
                    let adu = ((counts * gain + noise) * m.adu_per_photon + m.offset).round();
                    *pixel = adu.clamp(0.0, sat) as u16;
                }
            });
        out
    }
}

fn sample_poisson<R: rand::Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if !(lambda > 0.0) {
        return 0.0;
    }
    // far beyond saturation the exact count is irrelevant
    if lambda > 1e15 {
        return lambda;
    }
    Poisson::new(lambda)
        .expect("finite positive rate")
        .sample(rng)
}

/// One-shot readout: builds the gain map from `noise.calibration_seed` and
/// reads `img` with the stream `seed`.
pub fn detector_readout(
    img: &ExpectationImage,
    noise: &DetectorNoiseModel,
    seed: u64,
) -> RawImage16 {
    Detector::new(noise.clone(), img.width(), img.height()).read(img, seed)
}

/// `round(sqrt(v))`, capped at 255.
pub fn compress_sqrt(img: &RawImage16) -> Image8 {
    img.map(|&v| (v as f64).sqrt().round().min(255.0) as u8)
}
