//! Bragg scattering: unit cells, structure-factor tables, the tophat
//! lattice factor and the per-pixel expectation renderer.

mod cell;
mod lattice;
mod render;
mod table;

pub use cell::UnitCell;
pub use lattice::{grating_fwhm, grating_intensity, lattice_factor_tophat, TophatLattice};
pub use render::{fractional_miller, render_bragg, BraggRenderer};
pub use table::{
    load_hkl, parse_hkl, synth_wilson_table, write_hkl, Miller, StructureFactorTable, WilsonProfile,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and simulated crystal.
///
/// Rendering uses a crystal of `sim_size_um` whose spots span about a pixel
/// and rescales the intensity by `(target_size_um / sim_size_um)³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrystalModel {
    pub cell: UnitCell,
    pub sim_size_um: f64,
    pub target_size_um: f64,
    pub n_domains: usize,
    pub mosaic_diameter_deg: f64,
}

impl Default for CrystalModel {
    fn default() -> Self {
        CrystalModel {
            cell: UnitCell::default(),
            sim_size_um: 0.1,
            target_size_um: 30.0,
            n_domains: 50,
            mosaic_diameter_deg: 0.5,
        }
    }
}

impl CrystalModel {
    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if !(self.sim_size_um > 0.0) || self.sim_size_um > self.target_size_um {
            return Err(Error::Config(
                "crystal sizes must satisfy 0 < sim_size <= target_size".into(),
            ));
        }
        if self.n_domains < 1 {
            return Err(Error::Config(
                "at least one mosaic domain is required".into(),
            ));
        }
        if !(self.mosaic_diameter_deg >= 0.0) {
            return Err(Error::Config("mosaic diameter must be non-negative".into()));
        }
        Ok(())
    }

    /// Unit cells along each crystal axis of the simulated crystal.
    pub fn cells_per_axis(&self) -> [usize; 3] {
        let size_angstrom = self.sim_size_um * 1e4;
        let [a, b, c] = self.cell.edges();
        [a, b, c].map(|edge| ((size_angstrom / edge).round() as usize).max(1))
    }

    /// Volume scale from the simulated crystal to the target crystal.
    pub fn intensity_rescale(&self) -> f64 {
        (self.target_size_um / self.sim_size_um).powi(3)
    }

    pub fn lattice(&self) -> TophatLattice {
        TophatLattice::new(self.cells_per_axis())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_for_thirty_micron_crystal() {
        let c = CrystalModel::default();
        assert_eq!(c.intensity_rescale(), 2.7e7);
        assert_eq!(c.intensity_rescale(), 300f64.powi(3));
    }

    #[test]
    fn cells_per_axis_from_sim_size() {
        let c = CrystalModel::default();
        // 1000 Å / 80 Å = 12.5, rounded half away from zero
        assert_eq!(c.cells_per_axis(), [13, 13, 13]);
        let tiny = CrystalModel {
            sim_size_um: 0.001,
            ..Default::default()
        };
        assert_eq!(tiny.cells_per_axis(), [1, 1, 1]);
    }

    #[test]
    fn validation() {
        assert!(CrystalModel::default().validate().is_ok());
        let bad = CrystalModel {
            sim_size_um: 50.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CrystalModel {
            n_domains: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
