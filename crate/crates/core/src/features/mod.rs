//! Global texture descriptors and feature tables.
//!
//! A [`FeatureExtractor`] turns an 8-bit image into a fixed-length
//! [`FeatureVector`] tagged with a schema id that encodes the extractor and
//! all of its parameters. Classifiers refuse vectors whose schema id
//! differs from the one they were trained on.

mod glcm;
mod lbp;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;

pub use glcm::{
    glcm, glcm_feature_names, glcm_features, glcm_offset, haralick, Glcm, GlcmParams, GLCM_ANGLES,
    HARALICK_NAMES,
};
pub use lbp::{lbp_feature_names, lbp_histogram, Interpolation, LbpParams};
pub use table::{extract_manifest, FeatureRow, FeatureTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureExtractor {
    Glcm(GlcmParams),
    Lbp(LbpParams),
}

/// Feature values plus the schema id of the extractor that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: String,
    pub values: Vec<f64>,
}

impl FeatureExtractor {
    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureExtractor::Glcm(p) => p.validate(),
            FeatureExtractor::Lbp(p) => p.validate(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureExtractor::Glcm(p) => p.len(),
            FeatureExtractor::Lbp(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_names(&self) -> Vec<String> {
        match self {
            FeatureExtractor::Glcm(p) => glcm_feature_names(p),
            FeatureExtractor::Lbp(p) => lbp_feature_names(p),
        }
    }

    /// Canonical, human-readable id of the extractor and its parameters,
    /// e.g. `glcm:d=1,2,5,8;a=45,135;l=256;sym=1;norm=1`.
    pub fn schema_id(&self) -> String {
        let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        match self {
            FeatureExtractor::Glcm(p) => format!(
                "glcm:d={};a={};l={};sym={};norm={}",
                join(&p.distances),
                join(&p.angles),
                p.levels,
                u8::from(p.symmetric),
                u8::from(p.normalized)
            ),
            FeatureExtractor::Lbp(p) => format!(
                "lbp:p={};r={};interp={}",
                p.points,
                p.radius,
                match p.interpolation {
                    Interpolation::Bilinear => "bilinear",
                    Interpolation::Nearest => "nearest",
                }
            ),
        }
    }

    pub fn extract(&self, img: &Image8) -> Result<FeatureVector> {
        let values = match self {
            FeatureExtractor::Glcm(p) => glcm_features(img, p)?,
            FeatureExtractor::Lbp(p) => lbp_histogram(img, p)?,
        };
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("feature {pos} is not finite")));
        }
        Ok(FeatureVector {
            schema: self.schema_id(),
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_ids() {
        let g = FeatureExtractor::Glcm(GlcmParams::new(&[1, 2, 5, 8], &[45, 135]));
        assert_eq!(g.schema_id(), "glcm:d=1,2,5,8;a=45,135;l=256;sym=1;norm=1");
        let l = FeatureExtractor::Lbp(LbpParams::new(24, 3.0));
        assert_eq!(l.schema_id(), "lbp:p=24;r=3;interp=bilinear");
        assert_ne!(
            g.schema_id(),
            FeatureExtractor::Glcm(GlcmParams::new(&[1, 2, 5], &[45, 135])).schema_id()
        );
    }

    #[test]
    fn lengths_match_names() {
        let img = Image8::from_fn(32, 32, |x, y| ((x * 7 + y * 13) % 256) as u8);
        for ex in [
            FeatureExtractor::Glcm(GlcmParams::new(&[1, 5, 8], &[0, 90, 135])),
            FeatureExtractor::Lbp(LbpParams::new(16, 2.0)),
        ] {
            let v = ex.extract(&img).unwrap();
            assert_eq!(v.values.len(), ex.len());
            assert_eq!(ex.feature_names().len(), ex.len());
        }
    }

    #[test]
    fn json_round_trip() {
        let ex = FeatureExtractor::Lbp(LbpParams::new(8, 1.0));
        let s = serde_json::to_string(&ex).unwrap();
        assert!(s.contains("\"kind\":\"lbp\""));
        assert_eq!(serde_json::from_str::<FeatureExtractor>(&s).unwrap(), ex);
    }
}
