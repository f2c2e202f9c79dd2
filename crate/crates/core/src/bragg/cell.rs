use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit cell constants: edges in Å, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for UnitCell {
    fn default() -> Self {
        UnitCell::cubic(80.0)
    }
}

impl UnitCell {
    pub fn cubic(edge: f64) -> Self {
        UnitCell {
            a: edge,
            b: edge,
            c: edge,
            alpha: 90.0,
            beta: 90.0,
            gamma: 90.0,
        }
    }

    pub fn edges(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn validate(&self) -> Result<()> {
        if self.volume().is_nan() || !(self.volume() > 0.0) {
            return Err(Error::Config(format!(
                "unit cell {self:?} has no positive volume"
            )));
        }
        Ok(())
    }

    /// Real-space basis: columns are the cell vectors a, b, c with `a`
    /// along x and `b` in the xy plane.
    pub fn real_basis(&self) -> Matrix3<f64> {
        let (al, be, ga) = (
            self.alpha.to_radians(),
            self.beta.to_radians(),
            self.gamma.to_radians(),
        );
        let a = Vector3::new(self.a, 0.0, 0.0);
        let b = Vector3::new(self.b * ga.cos(), self.b * ga.sin(), 0.0);
        let cx = self.c * be.cos();
        let cy = self.c * (al.cos() - be.cos() * ga.cos()) / ga.sin();
        let cz = (self.c * self.c - cx * cx - cy * cy).sqrt();
        let c = Vector3::new(cx, cy, cz);
        Matrix3::from_columns(&[a, b, c])
    }

    /// Reciprocal basis `B = (A⁻¹)ᵀ`, columns a*, b*, c* in Å⁻¹, so that
    /// `Aᵀ B = I`.
    pub fn reciprocal_basis(&self) -> Matrix3<f64> {
        self.real_basis()
            .try_inverse()
            .expect("validated cell is invertible")
            .transpose()
    }

    pub fn volume(&self) -> f64 {
        self.real_basis().determinant()
    }

    /// Interplanar spacing for a Miller index; infinite for (0,0,0).
    pub fn d_spacing(&self, h: [i32; 3]) -> f64 {
        let hv = Vector3::new(h[0] as f64, h[1] as f64, h[2] as f64);
        1.0 / (self.reciprocal_basis() * hv).norm()
    }
}
