//! Gray-level co-occurrence matrices and Haralick features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;

pub const GLCM_ANGLES: [u32; 4] = [0, 45, 90, 135];

pub const HARALICK_NAMES: [&str; 6] = [
    "contrast",
    "dissimilarity",
    "homogeneity",
    "asm",
    "energy",
    "correlation",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcmParams {
    /// Pixel distances, each at least 1.
    pub distances: Vec<u32>,
    /// Angles in degrees, from [`GLCM_ANGLES`].
    pub angles: Vec<u32>,
    pub levels: u32,
    pub symmetric: bool,
    pub normalized: bool,
}

impl Default for GlcmParams {
    fn default() -> Self {
        GlcmParams {
            distances: vec![5],
            angles: vec![0],
            levels: 256,
            symmetric: true,
            normalized: true,
        }
    }
}

impl GlcmParams {
    pub fn new(distances: &[u32], angles: &[u32]) -> Self {
        GlcmParams {
            distances: distances.to_vec(),
            angles: angles.to_vec(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() || self.angles.is_empty() {
            return Err(Error::InvalidInput(
                "GLCM needs at least one distance and one angle".into(),
            ));
        }
        if self.distances.contains(&0) {
            return Err(Error::InvalidInput(
                "GLCM distances must be at least 1".into(),
            ));
        }
        if let Some(a) = self.angles.iter().find(|a| !GLCM_ANGLES.contains(a)) {
            return Err(Error::InvalidInput(format!(
                "GLCM angle {a} is not one of 0, 45, 90, 135"
            )));
        }
        if !(2..=256).contains(&self.levels) {
            return Err(Error::InvalidInput(format!(
                "GLCM levels {} outside [2, 256]",
                self.levels
            )));
        }
        Ok(())
    }

    /// Feature-vector length: six features per (distance, angle).
    pub fn len(&self) -> usize {
        6 * self.distances.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `(row, column)` displacement for distance `d` along `angle` degrees:
/// `(round(d·sin θ), round(d·cos θ))`, rows pointing down.
pub fn glcm_offset(distance: u32, angle: u32) -> (i64, i64) {
    let theta = (angle as f64).to_radians();
    let d = distance as f64;
    (
        (d * theta.sin()).round() as i64,
        (d * theta.cos()).round() as i64,
    )
}

/// One co-occurrence matrix, row-major `levels × levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub distance: u32,
    pub angle: u32,
    pub levels: usize,
    pub data: Vec<f64>,
}

impl Glcm {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.levels + j]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

fn cooccurrence(
    img: &Image8,
    levels: usize,
    distance: u32,
    angle: u32,
    symmetric: bool,
    normalized: bool,
) -> Glcm {
    let (dr, dc) = glcm_offset(distance, angle);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut counts = vec![0u32; levels * levels];
    let px = img.as_slice();
    let rows = (-dr).max(0)..(h - dr.max(0));
    let cols = (-dc).max(0)..(w - dc.max(0));
    for r in rows {
        let a = &px[(r * w) as usize..((r + 1) * w) as usize];
        let b = &px[((r + dr) * w) as usize..((r + dr + 1) * w) as usize];
        for c in cols.clone() {
            let i = a[c as usize] as usize;
            let j = b[(c + dc) as usize] as usize;
            counts[i * levels + j] += 1;
        }
    }
    let mut data: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    if symmetric {
        for i in 0..levels {
            for j in i..levels {
                let s = data[i * levels + j] + data[j * levels + i];
                data[i * levels + j] = s;
                data[j * levels + i] = s;
            }
        }
    }
    if normalized {
        let total: f64 = data.iter().sum();
        if total > 0.0 {
            data.iter_mut().for_each(|v| *v /= total);
        }
    }
    Glcm {
        distance,
        angle,
        levels,
        data,
    }
}

/// Co-occurrence matrices for every (distance, angle), distances outer.
pub fn glcm(img: &Image8, params: &GlcmParams) -> Result<Vec<Glcm>> {
    params.validate()?;
    let max_d = *params.distances.iter().max().unwrap() as usize;
    if max_d >= img.width() || max_d >= img.height() {
        return Err(Error::InvalidInput(format!(
            "GLCM distance {max_d} does not fit a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let levels = params.levels as usize;
    if let Some(&v) = img.as_slice().iter().find(|&&v| v as usize >= levels) {
        return Err(Error::InvalidInput(format!(
            "pixel value {v} exceeds {levels} GLCM levels"
        )));
    }
    let mut out = Vec::with_capacity(params.distances.len() * params.angles.len());
    for &d in &params.distances {
        for &a in &params.angles {
            out.push(cooccurrence(
                img,
                levels,
                d,
                a,
                params.symmetric,
                params.normalized,
            ));
        }
    }
    Ok(out)
}

/// Contrast, dissimilarity, homogeneity, ASM, energy and correlation of a
/// normalised matrix. Correlation is 1 when either marginal has zero spread.
pub fn haralick(m: &Glcm) -> [f64; 6] {
    let n = m.levels;
    let (mut contrast, mut dissimilarity, mut homogeneity, mut asm) = (0.0, 0.0, 0.0, 0.0);
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for i in 0..n {
        let row = &m.data[i * n..(i + 1) * n];
        for (j, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let diff = i as f64 - j as f64;
            contrast += diff * diff * p;
            dissimilarity += diff.abs() * p;
            homogeneity += p / (1.0 + diff * diff);
            asm += p * p;
            mu_i += i as f64 * p;
            mu_j += j as f64 * p;
        }
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let row = &m.data[i * n..(i + 1) * n];
        let di = i as f64 - mu_i;
        for (j, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let dj = j as f64 - mu_j;
            var_i += di * di * p;
            var_j += dj * dj * p;
            cov += di * dj * p;
        }
    }
    let (sd_i, sd_j) = (var_i.sqrt(), var_j.sqrt());
    let correlation = if sd_i < 1e-15 || sd_j < 1e-15 {
        1.0
    } else {
        cov / (sd_i * sd_j)
    };
    [
        contrast,
        dissimilarity,
        homogeneity,
        asm,
        asm.sqrt(),
        correlation,
    ]
}

/// Haralick features of every matrix, distances outer, angles inner,
/// features innermost.
pub fn glcm_features(img: &Image8, params: &GlcmParams) -> Result<Vec<f64>> {
    Ok(glcm(img, params)?.iter().flat_map(haralick).collect())
}

pub fn glcm_feature_names(params: &GlcmParams) -> Vec<String> {
    let mut names = Vec::with_capacity(params.len());
    for d in &params.distances {
        for a in &params.angles {
            for f in HARALICK_NAMES {
                names.push(format!("{f}_d{d}_a{a}"));
            }
        }
    }
    names
}
