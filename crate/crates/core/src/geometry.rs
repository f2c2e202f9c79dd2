//! Detector geometry, reciprocal-space mapping and stochastic sampling of
//! beam, crystal orientation and mosaicity.
//!
//! Lab frame: the beam travels along +z through the beam centre, the
//! detector plane is normal to the beam, +x runs along the fast pixel axis
//! and +y along the slow axis. Lengths are in millimetres on the detector,
//! Ångström for wavelengths and Å⁻¹ in reciprocal space.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bragg::CrystalModel;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorGeometry {
    pub n_fast: usize,
    pub n_slow: usize,
    pub pixel_size_mm: f64,
    pub distance_mm: f64,
    /// Beam position in fractional pixel coordinates; `None` means the
    /// centre of the panel.
    pub beam_center: Option<[f64; 2]>,
    /// Subpixels per axis.
    pub oversample: usize,
}

impl Default for DetectorGeometry {
    fn default() -> Self {
        DetectorGeometry {
            n_fast: 512,
            n_slow: 512,
            pixel_size_mm: 0.172,
            distance_mm: 80.0,
            beam_center: None,
            oversample: 2,
        }
    }
}

impl DetectorGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.n_fast == 0 || self.n_slow == 0 {
            return Err(Error::Config(
                "detector must have at least one pixel".into(),
            ));
        }
        if !(self.pixel_size_mm > 0.0) || !(self.distance_mm > 0.0) {
            return Err(Error::Config(
                "pixel size and detector distance must be positive".into(),
            ));
        }
        if self.oversample < 1 {
            return Err(Error::Config("oversample must be at least 1".into()));
        }
        let [bf, bs] = self.beam_center();
        if !(0.0..=self.n_fast as f64).contains(&bf) || !(0.0..=self.n_slow as f64).contains(&bs) {
            return Err(Error::Config(format!(
                "beam centre ({bf}, {bs}) lies outside the panel"
            )));
        }
        Ok(())
    }

    pub fn beam_center(&self) -> [f64; 2] {
        self.beam_center
            .unwrap_or([self.n_fast as f64 / 2.0, self.n_slow as f64 / 2.0])
    }

    /// Fractional coordinates of the centre of subpixel `(sub_fast, sub_slow)`
    /// of pixel `(fast, slow)`.
    #[inline]
    pub fn subpixel_center(
        &self,
        fast: usize,
        slow: usize,
        sub_fast: usize,
        sub_slow: usize,
    ) -> [f64; 2] {
        let os = self.oversample as f64;
        [
            fast as f64 + (sub_fast as f64 + 0.5) / os,
            slow as f64 + (sub_slow as f64 + 0.5) / os,
        ]
    }

    /// Lab-frame position (mm) of a point on the detector.
    #[inline]
    pub fn position(&self, coords: [f64; 2]) -> Vector3<f64> {
        let [bf, bs] = self.beam_center();
        Vector3::new(
            (coords[0] - bf) * self.pixel_size_mm,
            (coords[1] - bs) * self.pixel_size_mm,
            self.distance_mm,
        )
    }

    /// Scattering angle 2θ (radians) at a detector point.
    pub fn two_theta(&self, coords: [f64; 2]) -> f64 {
        let p = self.position(coords);
        (p.x.hypot(p.y)).atan2(p.z)
    }

    /// Solid angle subtended by one full pixel located at `coords`:
    /// `pixel_area · cos³(2θ) / distance²`.
    #[inline]
    pub fn pixel_solid_angle(&self, coords: [f64; 2]) -> f64 {
        let p = self.position(coords);
        let cos2t = p.z / p.norm();
        self.pixel_size_mm * self.pixel_size_mm * cos2t.powi(3)
            / (self.distance_mm * self.distance_mm)
    }

    /// Radial distance in pixels at which resolution `d` (Å) is recorded.
    pub fn radius_for_resolution(&self, d: f64, wavelength: f64) -> Option<f64> {
        let sin_theta = wavelength / (2.0 * d);
        if !(0.0..1.0).contains(&sin_theta) {
            return None;
        }
        let two_theta = 2.0 * sin_theta.asin();
        if two_theta >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        Some(self.distance_mm * two_theta.tan() / self.pixel_size_mm)
    }
}

/// Scattering vector `q = (ŝ − ŝ₀)/λ` for a detector point given in
/// fractional pixel coordinates. `|q| = 2 sin θ / λ`.
#[inline]
pub fn pixel_scattering_vector(
    geom: &DetectorGeometry,
    coords: [f64; 2],
    wavelength: f64,
) -> Vector3<f64> {
    let s = geom.position(coords).normalize();
    (s - Vector3::z()) / wavelength
}

/// Resolution (Å) recorded at a detector point; infinite at the beam centre.
pub fn resolution_at(geom: &DetectorGeometry, coords: [f64; 2], wavelength: f64) -> f64 {
    1.0 / pixel_scattering_vector(geom, coords, wavelength).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamModel {
    /// Photons per pulse.
    pub mean_fluence: f64,
    /// Shot-to-shot RMS fluence as a fraction of the mean.
    pub fluence_rms_fraction: f64,
    /// Å.
    pub mean_wavelength: f64,
    pub wavelength_rms_fraction: f64,
    pub beam_width_um: f64,
    /// Number of wavelengths drawn per shot; rendering averages over them.
    pub spectral_samples: usize,
}

impl Default for BeamModel {
    fn default() -> Self {
        BeamModel {
            mean_fluence: 1e12,
            fluence_rms_fraction: 1.0,
            mean_wavelength: 1.5,
            wavelength_rms_fraction: 0.005,
            beam_width_um: 30.0,
            spectral_samples: 1,
        }
    }
}

impl BeamModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.mean_fluence,
            self.fluence_rms_fraction,
            self.wavelength_rms_fraction,
            self.beam_width_um,
        ];
        if fields.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(
                "beam parameters must be finite and non-negative".into(),
            ));
        }
        if !(self.mean_wavelength > 0.0) {
            return Err(Error::Config("mean wavelength must be positive".into()));
        }
        if self.spectral_samples < 1 {
            return Err(Error::Config("spectral_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// A proper rotation stored as an orthonormal 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Builds a rotation from a quaternion `[w, x, y, z]`; the quaternion is
    /// normalised first.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let uq = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
        Rotation(*uq.to_rotation_matrix().matrix())
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let uq = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Rotation(*uq.to_rotation_matrix().matrix())
    }

    /// Quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.0);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
        [sign * q.w, sign * q.i, sign * q.j, sign * q.k]
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    #[inline]
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Misorientation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Largest deviation from `RᵀR = I` and from `det R = 1`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.0.transpose() * self.0 - Matrix3::identity();
        let det = (self.0.determinant() - 1.0).abs();
        gram.amax().max(det)
    }
}

/// Draws a rotation uniformly with respect to the Haar measure on SO(3)
/// using Shoemake's subgroup algorithm.
pub fn sample_uniform_rotation<R: rand::Rng + ?Sized>(rng: &mut R) -> Rotation {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    Rotation::from_quaternion([
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    ])
}

fn sample_unit_vector<R: rand::Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Draws a rotation uniformly from the cap of SO(3) with misorientation
/// angle at most `diameter / 2` (radians).
///
/// The axis is uniform on the sphere and the angle has density
/// `∝ sin²(α/2)` on `[0, diameter/2]`, sampled by rejection.
pub fn sample_mosaic_rotation<R: rand::Rng + ?Sized>(rng: &mut R, diameter: f64) -> Rotation {
    let half = 0.5 * diameter;
    if half <= 0.0 {
        return Rotation::identity();
    }
    let envelope = (0.5 * half).sin().powi(2);
    let angle = loop {
        let alpha = half * rng.random::<f64>();
        if rng.random::<f64>() * envelope <= (0.5 * alpha).sin().powi(2) {
            break alpha;
        }
    };
    Rotation::from_axis_angle(sample_unit_vector(rng), angle)
}

/// One exposure's sampled parameters. Rendering is a pure function of
/// these values.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotParams {
    /// Photons in the pulse.
    pub fluence: f64,
    /// Mean of `wavelengths`, Å.
    pub wavelength: f64,
    pub wavelengths: Vec<f64>,
    pub base_orientation: Rotation,
    pub mosaic_rotations: Vec<Rotation>,
    pub rng_seed: u64,
}

/// Samples fluence, wavelength(s), crystal orientation and mosaic domain
/// rotations for one shot from a stream derived from `seed`.
pub fn sample_shot(beam: &BeamModel, crystal: &CrystalModel, seed: u64) -> ShotParams {
    let mut rng = rng::stream(seed, &[rng::tag::SHOT]);

    let fluence = Normal::new(
        beam.mean_fluence,
        beam.mean_fluence * beam.fluence_rms_fraction,
    )
    .expect("validated beam model")
    .sample(&mut rng)
    .max(0.0);

    let wl = Normal::new(
        beam.mean_wavelength,
        beam.mean_wavelength * beam.wavelength_rms_fraction,
    )
    .expect("validated beam model");
    let wavelengths: Vec<f64> = (0..beam.spectral_samples.max(1))
        .map(|_| wl.sample(&mut rng).max(f64::MIN_POSITIVE))
        .collect();
    let wavelength = wavelengths.iter().sum::<f64>() / wavelengths.len() as f64;

    let base_orientation = sample_uniform_rotation(&mut rng);
    let diameter = crystal.mosaic_diameter_deg.to_radians();
    let mosaic_rotations = (0..crystal.n_domains)
        .map(|_| sample_mosaic_rotation(&mut rng, diameter))
        .collect();

    ShotParams {
        fluence,
        wavelength,
        wavelengths,
        base_orientation,
        mosaic_rotations,
        rng_seed: seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rng::Rng {
        rng::Rng::seed_from_u64(seed)
    }

    #[test]
    fn beam_centre_maps_to_zero_q() {
        let g = DetectorGeometry::default();
        let q = pixel_scattering_vector(&g, g.beam_center(), 1.5);
        assert!(q.norm() < 1e-15);
    }

    #[test]
    fn q_at_panel_edge_matches_trigonometry() {
        let g = DetectorGeometry::default();
        let [bf, bs] = g.beam_center();
        let q = pixel_scattering_vector(&g, [bf + 256.0, bs], 1.5);
        // oracle: 2θ = atan(44.032 / 80), |q| = 2 sin θ / λ
        let two_theta = (256.0f64 * 0.172 / 80.0).atan();
        let expected = 2.0 * (two_theta / 2.0).sin() / 1.5;
        assert!((q.norm() - expected).abs() < 1e-12);
        assert!((q.norm() - 0.3319).abs() < 1e-4);
        assert!((1.0 / q.norm() - 3.01).abs() < 0.01);

        let far = DetectorGeometry {
            distance_mm: 160.0,
            ..g.clone()
        };
        assert!(pixel_scattering_vector(&far, [bf + 256.0, bs], 1.5).norm() < q.norm());
    }

    #[test]
    fn q_independent_of_oversampling_at_the_same_point() {
        let g1 = DetectorGeometry {
            oversample: 1,
            ..Default::default()
        };
        let g3 = DetectorGeometry {
            oversample: 3,
            ..Default::default()
        };
        // centre subpixel of a 3x3 grid coincides with the pixel centre
        let a = g1.subpixel_center(100, 40, 0, 0);
        let b = g3.subpixel_center(100, 40, 1, 1);
        assert_eq!(a, b);
        assert_eq!(
            pixel_scattering_vector(&g1, a, 1.2),
            pixel_scattering_vector(&g3, b, 1.2)
        );
    }

    #[test]
    fn radius_for_resolution_inverts_q() {
        let g = DetectorGeometry::default();
        let r = g.radius_for_resolution(3.5, 1.5).unwrap();
        let [bf, bs] = g.beam_center();
        let d = resolution_at(&g, [bf + r, bs], 1.5);
        assert!((d - 3.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_geometry() {
        let bad = DetectorGeometry {
            pixel_size_mm: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DetectorGeometry {
            oversample: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DetectorGeometry {
            beam_center: Some([600.0, 10.0]),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(DetectorGeometry::default().validate().is_ok());
    }

    #[test]
    fn uniform_rotation_is_orthonormal_and_deterministic() {
        let a = sample_uniform_rotation(&mut rng(3));
        let b = sample_uniform_rotation(&mut rng(3));
        assert_eq!(a, b);
        assert!(a.orthonormality_error() < 1e-9);
    }

    #[test]
    fn zero_diameter_cap_is_identity() {
        let r = sample_mosaic_rotation(&mut rng(1), 0.0);
        assert_eq!(r, Rotation::identity());
    }

    #[test]
    fn quaternion_round_trip() {
        let r = sample_uniform_rotation(&mut rng(9));
        let back = Rotation::from_quaternion(r.to_quaternion());
        assert!((r.matrix() - back.matrix()).amax() < 1e-12);
    }

    #[test]
    fn zero_rms_fluence_is_constant() {
        let beam = BeamModel {
            fluence_rms_fraction: 0.0,
            ..Default::default()
        };
        let crystal = CrystalModel::default();
        for seed in 0..20 {
            assert_eq!(sample_shot(&beam, &crystal, seed).fluence, 1e12);
        }
    }

    #[test]
    fn shot_sampling_is_deterministic() {
        let beam = BeamModel::default();
        let crystal = CrystalModel {
            n_domains: 5,
            ..Default::default()
        };
        assert_eq!(
            sample_shot(&beam, &crystal, 77),
            sample_shot(&beam, &crystal, 77)
        );
        assert_ne!(
            sample_shot(&beam, &crystal, 77).fluence,
            sample_shot(&beam, &crystal, 78).fluence
        );
    }
}
