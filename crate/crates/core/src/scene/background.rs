//! Radially symmetric background scattering.
//!
//! Three parametric forms are available: a water ring that is Gaussian in
//! resolution, an air-scatter term decaying exponentially with scattering
//! angle, and a flat diffuse floor. Amplitudes are photons per pixel for a
//! pulse of [`REFERENCE_FLUENCE`] photons; the expectation scales linearly
//! with the shot fluence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DetectorGeometry, ShotParams};
use crate::image::ExpectationImage;

pub const REFERENCE_FLUENCE: f64 = 1e12;

const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2 sqrt(2 ln 2))

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundComponent {
    WaterRing {
        /// Å.
        center_d: f64,
        /// Å.
        fwhm_d: f64,
        amplitude: f64,
    },
    AirScatter {
        amplitude: f64,
        /// e-folding scattering angle in degrees.
        decay_deg: f64,
    },
    FlatDiffuse {
        amplitude: f64,
    },
}

impl BackgroundComponent {
    fn amplitude(&self) -> f64 {
        match *self {
            BackgroundComponent::WaterRing { amplitude, .. }
            | BackgroundComponent::AirScatter { amplitude, .. }
            | BackgroundComponent::FlatDiffuse { amplitude } => amplitude,
        }
    }

    /// Photons per pixel at reference fluence.
    #[inline]
    fn evaluate(&self, two_theta: f64, wavelength: f64) -> f64 {
        match *self {
            BackgroundComponent::WaterRing {
                center_d,
                fwhm_d,
                amplitude,
            } => {
                let sin_theta = (0.5 * two_theta).sin();
                if sin_theta <= 0.0 {
                    return 0.0;
                }
                let d = wavelength / (2.0 * sin_theta);
                let sigma = fwhm_d * FWHM_TO_SIGMA;
                amplitude * (-(d - center_d).powi(2) / (2.0 * sigma * sigma)).exp()
            }
            BackgroundComponent::AirScatter {
                amplitude,
                decay_deg,
            } => amplitude * (-two_theta / decay_deg.to_radians()).exp(),
            BackgroundComponent::FlatDiffuse { amplitude } => amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundConfig {
    pub components: Vec<BackgroundComponent>,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        BackgroundConfig {
            components: vec![
                BackgroundComponent::WaterRing {
                    center_d: 3.2,
                    fwhm_d: 0.8,
                    amplitude: 600.0,
                },
                BackgroundComponent::AirScatter {
                    amplitude: 500.0,
                    decay_deg: 12.0,
                },
                BackgroundComponent::FlatDiffuse { amplitude: 150.0 },
            ],
        }
    }
}

impl BackgroundConfig {
    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if !(c.amplitude() >= 0.0) {
                return Err(Error::Config(format!(
                    "negative background amplitude in {c:?}"
                )));
            }
            match *c {
                BackgroundComponent::WaterRing {
                    center_d, fwhm_d, ..
                } if !(center_d > 0.0 && fwhm_d > 0.0) => {
                    return Err(Error::Config(
                        "water ring needs positive centre and width".into(),
                    ))
                }
                BackgroundComponent::AirScatter { decay_deg, .. } if !(decay_deg > 0.0) => {
                    return Err(Error::Config("air scatter decay must be positive".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Background photons per pixel, evaluated at pixel centres.
pub fn background_expectation(
    geom: &DetectorGeometry,
    shot: &ShotParams,
    bg: &BackgroundConfig,
) -> ExpectationImage {
    let mut image = ExpectationImage::new(geom.n_fast, geom.n_slow);
    if shot.fluence == 0.0 || bg.components.is_empty() {
        return image;
    }
    let scale = shot.fluence / REFERENCE_FLUENCE;
    let width = geom.n_fast;
    image
        .as_mut_slice()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(slow, row)| {
            for (fast, pixel) in row.iter_mut().enumerate() {
                let two_theta = geom.two_theta([fast as f64 + 0.5, slow as f64 + 0.5]);
                let total: f64 = bg
                    .components
                    .iter()
                    .map(|c| c.evaluate(two_theta, shot.wavelength))
                    .sum();
                *pixel = total * scale;
            }
        });
    image
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bragg::CrystalModel;
    use crate::geometry::{sample_shot, BeamModel};

    fn shot(fluence: f64) -> ShotParams {
        let mut s = sample_shot(
            &BeamModel::default(),
            &CrystalModel {
                n_domains: 1,
                ..Default::default()
            },
            1,
        );
        s.fluence = fluence;
        s.wavelength = 1.5;
        s.wavelengths = vec![1.5];
        s
    }

    #[test]
    fn zero_fluence_is_dark() {
        let img = background_expectation(
            &DetectorGeometry::default(),
            &shot(0.0),
            &BackgroundConfig::default(),
        );
        assert!(img.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn radially_symmetric() {
        let geom = DetectorGeometry::default();
        let img = background_expectation(&geom, &shot(1e12), &BackgroundConfig::default());
        // beam centre sits on a pixel corner at (256, 256)
        assert_eq!(img[(300, 256)], img[(211, 256)]);
        assert_eq!(img[(300, 256)], img[(256, 300)]);
        assert_eq!(img[(300, 256)], img[(256, 211)]);
        assert!(img.as_slice().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn linear_in_fluence() {
        let geom = DetectorGeometry::default();
        let bg = BackgroundConfig::default();
        let a = background_expectation(&geom, &shot(1e12), &bg);
        let b = background_expectation(&geom, &shot(3e12), &bg);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((3.0 * x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn water_ring_peaks_at_its_resolution() {
        let geom = DetectorGeometry::default();
        let bg = BackgroundConfig {
            components: vec![BackgroundComponent::WaterRing {
                center_d: 3.5,
                fwhm_d: 0.8,
                amplitude: 100.0,
            }],
        };
        let img = background_expectation(&geom, &shot(1e12), &bg);
        // radial profile along +fast from the beam centre
        let (peak_x, _) =
            (256..512)
                .map(|x| (x, img[(x, 256)]))
                .fold(
                    (0, f64::MIN),
                    |best, (x, v)| if v > best.1 { (x, v) } else { best },
                );
        let peak_radius = peak_x as f64 + 0.5 - 256.0;
        // oracle: invert the radius <-> resolution mapping
        let theta = (1.5f64 / (2.0 * 3.5)).asin();
        let expected = 80.0 * (2.0 * theta).tan() / 0.172;
        assert!(
            (peak_radius - expected).abs() <= 1.0,
            "{peak_radius} vs {expected}"
        );
    }

    #[test]
    fn negative_amplitude_rejected() {
        let bg = BackgroundConfig {
            components: vec![BackgroundComponent::FlatDiffuse { amplitude: -1.0 }],
        };
        assert!(bg.validate().is_err());
        assert!(BackgroundConfig::default().validate().is_ok());
    }
}
