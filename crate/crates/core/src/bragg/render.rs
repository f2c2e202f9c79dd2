//! Per-pixel expected Bragg photons.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::table::DenseIntensities;
use super::{CrystalModel, StructureFactorTable, TophatLattice, UnitCell};
use crate::geometry::{DetectorGeometry, Rotation, ShotParams};
use crate::image::ExpectationImage;

/// Fractional Miller coordinates of scattering vector `q` for a crystal with
/// lab-frame orientation `orientation`: `h = (U A)ᵀ q`.
pub fn fractional_miller(
    orientation: &Rotation,
    cell: &UnitCell,
    q: &Vector3<f64>,
) -> Vector3<f64> {
    (orientation.matrix() * cell.real_basis()).transpose() * q
}

/// Renderer with the structure-factor table and lattice prepared once for
/// many shots.
pub struct BraggRenderer {
    geom: DetectorGeometry,
    crystal: CrystalModel,
    intensities: DenseIntensities,
    lattice: TophatLattice,
    gain: f64,
}

impl BraggRenderer {
    pub fn new(
        geom: &DetectorGeometry,
        crystal: &CrystalModel,
        table: &StructureFactorTable,
        gain: f64,
    ) -> Self {
        BraggRenderer {
            geom: geom.clone(),
            crystal: crystal.clone(),
            intensities: table.dense_intensities(),
            lattice: crystal.lattice(),
            gain,
        }
    }

    /// Expected Bragg photons per pixel for one shot.
    ///
    /// Every subpixel sums `|F(round h)|² · L(h − round h)` over mosaic
    /// domains (in index order) and spectral samples, weighted by the
    /// subpixel's solid angle; a pixel is the mean over its subpixels in
    /// raster order. Domains and spectral samples are averaged, and the
    /// total is scaled by fluence, gain and the crystal volume rescale.
    /// Pixels are independent so the result does not depend on the number
    /// of threads.
    pub fn render(&self, shot: &ShotParams) -> ExpectationImage {
        let geom = &self.geom;
        let (width, height) = (geom.n_fast, geom.n_slow);
        let mut image = ExpectationImage::new(width, height);
        if shot.fluence == 0.0 {
            return image;
        }

        let identity = [Rotation::identity()];
        let domains: &[Rotation] = if shot.mosaic_rotations.is_empty() {
            &identity
        } else {
            &shot.mosaic_rotations
        };
        let basis = self.crystal.cell.real_basis();
        let mut transforms: Vec<Matrix3<f64>> =
            Vec::with_capacity(domains.len() * shot.wavelengths.len());
        for &wavelength in &shot.wavelengths {
            for domain in domains {
                let orientation = domain.compose(&shot.base_orientation);
                transforms.push((orientation.matrix() * basis).transpose() / wavelength);
            }
        }

        let os = geom.oversample;
        let n_sub = (os * os) as f64;
        let scale = shot.fluence * self.gain * self.crystal.intensity_rescale()
            / (n_sub * transforms.len() as f64);
        let half = self.lattice.half_widths();
        let peak = self.lattice.peak();

        image
            .as_mut_slice()
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(slow, row)| {
                for (fast, pixel) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for sub_slow in 0..os {
                        for sub_fast in 0..os {
                            let coords = geom.subpixel_center(fast, slow, sub_fast, sub_slow);
                            let dir = geom.position(coords).normalize() - Vector3::z();
                            let mut sub = 0.0;
                            for m in &transforms {
                                sub += self.spot_intensity(m, &dir, half, peak);
                            }
                            if sub > 0.0 {
                                acc += sub * geom.pixel_solid_angle(coords);
                            }
                        }
                    }
                    *pixel = acc * scale;
                }
            });
        image
    }

    #[inline]
    fn spot_intensity(
        &self,
        m: &Matrix3<f64>,
        dir: &Vector3<f64>,
        half: [f64; 3],
        peak: f64,
    ) -> f64 {
        let mut index = [0i64; 3];
        for axis in 0..3 {
            let h = m[(axis, 0)] * dir.x + m[(axis, 1)] * dir.y + m[(axis, 2)] * dir.z;
            let nearest = h.round();
            if (h - nearest).abs() > half[axis] {
                return 0.0;
            }
            index[axis] = nearest as i64;
        }
        self.intensities.get(index) * peak
    }
}

/// One-off convenience wrapper around [`BraggRenderer`].
pub fn render_bragg(
    geom: &DetectorGeometry,
    crystal: &CrystalModel,
    shot: &ShotParams,
    table: &StructureFactorTable,
    gain: f64,
) -> ExpectationImage {
    BraggRenderer::new(geom, crystal, table, gain).render(shot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bragg::{parse_hkl, synth_wilson_table, WilsonProfile};
    use crate::geometry::{sample_shot, sample_uniform_rotation, BeamModel};
    use rand::SeedableRng;

    fn small_geom() -> DetectorGeometry {
        DetectorGeometry {
            n_fast: 64,
            n_slow: 64,
            pixel_size_mm: 0.172 * 8.0,
            ..Default::default()
        }
    }

    fn setup() -> (
        DetectorGeometry,
        CrystalModel,
        StructureFactorTable,
        ShotParams,
    ) {
        let geom = small_geom();
        let crystal = CrystalModel {
            n_domains: 8,
            ..Default::default()
        };
        let mut rng = crate::rng::Rng::seed_from_u64(11);
        let table = synth_wilson_table(&mut rng, &crystal.cell, 2.0, &WilsonProfile::default());
        let shot = sample_shot(&BeamModel::default(), &crystal, 3);
        (geom, crystal, table, shot)
    }

    fn shot_with_fluence(mut shot: ShotParams, fluence: f64) -> ShotParams {
        shot.fluence = fluence;
        shot
    }

    #[test]
    fn zero_fluence_renders_nothing() {
        let (geom, crystal, table, shot) = setup();
        let img = render_bragg(
            &geom,
            &crystal,
            &shot_with_fluence(shot, 0.0),
            &table,
            1e-20,
        );
        assert!(img.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_in_fluence() {
        let (geom, crystal, table, shot) = setup();
        let one = render_bragg(
            &geom,
            &crystal,
            &shot_with_fluence(shot.clone(), 1e12),
            &table,
            1e-20,
        );
        let two = render_bragg(
            &geom,
            &crystal,
            &shot_with_fluence(shot, 2e12),
            &table,
            1e-20,
        );
        assert!(one.sum() > 0.0);
        for (a, b) in one.as_slice().iter().zip(two.as_slice()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn quadratic_in_amplitude() {
        let (geom, crystal, table, shot) = setup();
        let scaled =
            StructureFactorTable::from_entries(table.iter().map(|(h, f)| (h, 3.0 * f))).unwrap();
        let a = render_bragg(&geom, &crystal, &shot, &table, 1e-20);
        let b = render_bragg(&geom, &crystal, &shot, &scaled, 1e-20);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((9.0 * x - y).abs() <= 1e-9 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn deterministic_and_non_negative() {
        let (geom, crystal, table, shot) = setup();
        let a = render_bragg(&geom, &crystal, &shot, &table, 1e-20);
        let b = render_bragg(&geom, &crystal, &shot, &table, 1e-20);
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn joint_rotation_preserves_miller_coordinates() {
        let cell = UnitCell {
            a: 60.0,
            b: 70.0,
            c: 90.0,
            alpha: 90.0,
            beta: 100.0,
            gamma: 90.0,
        };
        let geom = DetectorGeometry::default();
        let mut rng = crate::rng::Rng::seed_from_u64(4);
        let u = sample_uniform_rotation(&mut rng);
        let r = sample_uniform_rotation(&mut rng);
        for coords in [[10.5, 20.5], [300.25, 100.75], [511.5, 0.5]] {
            let q = crate::geometry::pixel_scattering_vector(&geom, coords, 1.5);
            let h = fractional_miller(&u, &cell, &q);
            let h_rot = fractional_miller(&r.compose(&u), &cell, &r.apply(&q));
            assert!((h - h_rot).amax() < 1e-9);
        }
    }

    #[test]
    fn origin_reflection_lands_on_the_direct_beam() {
        let geom = DetectorGeometry {
            pixel_size_mm: 0.01,
            ..small_geom()
        };
        let crystal = CrystalModel {
            n_domains: 4,
            ..Default::default()
        };
        let table = parse_hkl("0 0 0 10\n".as_bytes()).unwrap();
        let shot = sample_shot(&BeamModel::default(), &crystal, 8);
        let shot = shot_with_fluence(shot, 1e12);
        let img = render_bragg(&geom, &crystal, &shot, &table, 1e-20);
        let [bf, bs] = geom.beam_center();
        let lat = crystal.lattice();
        let mut total = 0.0;
        for y in 0..geom.n_slow {
            for x in 0..geom.n_fast {
                let v = img[(x, y)];
                if v > 0.0 {
                    total += v;
                    // some corner of the pixel must lie inside the tophat box
                    let near = (0..4).any(|c| {
                        let coords = [x as f64 + (c & 1) as f64, y as f64 + (c >> 1) as f64];
                        let q = crate::geometry::pixel_scattering_vector(
                            &geom,
                            coords,
                            shot.wavelength,
                        );
                        q.norm() * crystal.cell.a < 2.0 * lat.width[0]
                    });
                    assert!(near, "intensity far from the beam at ({x}, {y})");
                }
            }
        }
        assert!(total > 0.0);
        assert!(img[(bf as usize, bs as usize)] > 0.0);
    }
}
