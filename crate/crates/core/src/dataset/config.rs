//! The run configuration: one JSON document with sections for geometry,
//! beam, crystal, background, detector noise, classes and splits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::classes::{ClassLabel, ClassSpec};
use crate::bragg::{CrystalModel, WilsonProfile};
use crate::error::{Error, Result};
use crate::geometry::{BeamModel, DetectorGeometry};
use crate::scene::{BackgroundConfig, DetectorNoiseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureFactorSource {
    /// Wilson-statistics table drawn from `seed`.
    Synthetic {
        d_min: f64,
        profile: WilsonProfile,
        seed: u64,
    },
    /// `h k l F` text file.
    File { path: PathBuf },
}

impl Default for StructureFactorSource {
    fn default() -> Self {
        StructureFactorSource::Synthetic {
            d_min: 2.0,
            profile: WilsonProfile::default(),
            seed: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.40,
            val: 0.096,
            test: 0.504,
        }
    }
}

impl SplitFractions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.as_array();
        if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(
                "split fractions must be non-negative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// Full simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub geometry: DetectorGeometry,
    pub beam: BeamModel,
    pub crystal: CrystalModel,
    pub background: BackgroundConfig,
    pub noise: DetectorNoiseModel,
    pub structure_factors: StructureFactorSource,
    /// Collapses Thomson cross-section, polarisation and quantum efficiency
    /// into one constant.
    pub bragg_gain: f64,
    /// Allowed range of the illuminated crystal volume relative to the
    /// nominal crystal (log-uniform).
    pub crystal_scale_range: [f64; 2],
    /// Per-shot multiplier on the background (log-uniform).
    pub background_scale_range: [f64; 2],
    /// Beam-on shots below this fraction of the mean fluence are redrawn.
    pub min_beam_on_fluence_fraction: f64,
    pub max_retries: usize,
    pub classes: Vec<ClassSpec>,
    pub splits: SplitFractions,
}

/// Crystal-class budget bands from the pilot calibration (1st/33rd/66th/99th
/// percentiles of 200 unconstrained crystal shots at the desk defaults).
pub(crate) const DEFAULT_BUDGET_EDGES: [f64; 4] = [1.90e5, 1.32e6, 2.14e6, 4.84e6];

impl Default for SimConfig {
    fn default() -> Self {
        let e = DEFAULT_BUDGET_EDGES;
        SimConfig {
            geometry: DetectorGeometry::default(),
            beam: BeamModel::default(),
            crystal: CrystalModel::default(),
            background: BackgroundConfig::default(),
            noise: DetectorNoiseModel::default(),
            structure_factors: StructureFactorSource::default(),
            bragg_gain: 4.49e-23,
            crystal_scale_range: [0.05, 20.0],
            background_scale_range: [0.7, 1.4],
            min_beam_on_fluence_fraction: 0.05,
            max_retries: 64,
            classes: vec![
                ClassSpec::blank(200),
                ClassSpec::no_crystal(200),
                ClassSpec::crystal(ClassLabel::Weak, [e[0], e[1]], 200),
                ClassSpec::crystal(ClassLabel::Good, [e[1], e[2]], 200),
                ClassSpec::crystal(ClassLabel::Strong, [e[2], e[3]], 200),
            ],
            splits: SplitFractions::default(),
        }
    }
}

impl SimConfig {
    /// Full 300-domain mosaic model; slower than the desk default.
    pub fn full_mosaic() -> Self {
        let mut c = SimConfig::default();
        c.crystal.n_domains = 300;
        c
    }

    /// Named presets: `desk` and `full-mosaic`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(SimConfig::default()),
            "full-mosaic" => Ok(SimConfig::full_mosaic()),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.beam.validate()?;
        self.crystal.validate()?;
        self.background.validate()?;
        self.noise.validate()?;
        self.splits.validate()?;
        ClassSpec::validate_all(&self.classes)?;
        for (name, [lo, hi]) in [
            ("crystal_scale_range", self.crystal_scale_range),
            ("background_scale_range", self.background_scale_range),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} must satisfy 0 < low <= high"
                )));
            }
        }
        if !(self.bragg_gain >= 0.0) {
            return Err(Error::Config("bragg_gain must be non-negative".into()));
        }
        if let StructureFactorSource::Synthetic { d_min, .. } = self.structure_factors {
            if !(d_min > 0.0) {
                return Err(Error::Config("d_min must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: SimConfig = serde_json::from_str(&text)?;
        // relative HKL paths resolve against the config file
        if let StructureFactorSource::File { path: hkl } = &mut cfg.structure_factors {
            if hkl.is_relative() {
                if let Some(dir) = path.parent() {
                    *hkl = dir.join(&*hkl);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn class_spec(&self, label: ClassLabel) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.name == label)
    }

    /// Sets the weak/good/strong budget bands to `[e0, e1)`, `[e1, e2)` and
    /// `[e2, e3)`.
    pub fn set_budget_edges(&mut self, edges: [f64; 4]) {
        for class in &mut self.classes {
            let band = match class.name {
                ClassLabel::Weak => [edges[0], edges[1]],
                ClassLabel::Good => [edges[1], edges[2]],
                ClassLabel::Strong => [edges[2], edges[3]],
                _ => continue,
            };
            class.bragg_budget = Some(band);
        }
    }

    /// Total images across classes.
    pub fn total_count(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Spreads `total` images over the configured classes as evenly as
    /// possible (earlier classes take the remainder).
    pub fn set_total_count(&mut self, total: usize) {
        let n = self.classes.len().max(1);
        for (i, c) in self.classes.iter_mut().enumerate() {
            c.count = total / n + usize::from(i < total % n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let c = SimConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: SimConfig = serde_json::from_str(r#"{"crystal": {"n_domains": 7}}"#).unwrap();
        assert_eq!(c.crystal.n_domains, 7);
        assert_eq!(c.geometry, DetectorGeometry::default());
    }

    #[test]
    fn total_count_distribution() {
        let mut c = SimConfig::default();
        c.set_total_count(12);
        let counts: Vec<usize> = c.classes.iter().map(|s| s.count).collect();
        assert_eq!(counts, vec![3, 3, 2, 2, 2]);
        assert_eq!(c.total_count(), 12);
    }

    #[test]
    fn presets() {
        assert_eq!(
            SimConfig::preset("full-mosaic").unwrap().crystal.n_domains,
            300
        );
        assert_eq!(SimConfig::preset("desk").unwrap().crystal.n_domains, 50);
        assert!(SimConfig::preset("nope").is_err());
    }
}
