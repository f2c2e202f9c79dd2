//! Preprocessing of real detector frames: brightness normalisation and
//! area-average downsampling with a crop that avoids the beamstop shadow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;

/// Multiplies every pixel by `target_mean / mean(img)`, rounding half away
/// from zero and clamping at 255. The factor is computed before clamping,
/// so saturated pixels pull the output mean below the target.
pub fn preprocess_real(img: &Image8, target_mean: f64) -> Result<Image8> {
    if img.is_empty() {
        return Err(Error::InvalidInput("empty image".into()));
    }
    let mean = img.mean();
    if mean <= 0.0 {
        return Err(Error::InvalidInput(
            "image mean is zero; normalisation factor is undefined".into(),
        ));
    }
    let factor = target_mean / mean;
    Ok(img.map(|&v| (v as f64 * factor).round().clamp(0.0, 255.0) as u8))
}

/// Integer-factor area average; trailing rows/columns that do not fill a
/// block are dropped.
pub fn downsample_area(img: &Image8, factor: usize) -> Result<Image8> {
    if factor == 0 {
        return Err(Error::InvalidInput(
            "downsample factor must be at least 1".into(),
        ));
    }
    let (w, h) = (img.width() / factor, img.height() / factor);
    let area = (factor * factor) as f64;
    Ok(Image8::from_fn(w, h, |x, y| {
        let mut sum = 0u64;
        for dy in 0..factor {
            for dx in 0..factor {
                sum += img[(x * factor + dx, y * factor + dy)] as u64;
            }
        }
        (sum as f64 / area).round() as u8
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropParams {
    pub factor: usize,
    /// Output edge length in pixels.
    pub size: usize,
    /// Top-left corner `[x, y]` of the crop in downsampled coordinates;
    /// centred when absent.
    pub origin: Option<[usize; 2]>,
    /// Rows `[start, end)` of the downsampled frame that the crop must not
    /// touch (the beamstop shadow).
    pub exclusion_band: Option<[usize; 2]>,
}

impl Default for CropParams {
    fn default() -> Self {
        CropParams {
            factor: 2,
            size: 512,
            origin: None,
            exclusion_band: None,
        }
    }
}

/// Downsamples by `params.factor` and crops a `size × size` window.
pub fn crop_downsample_real(img: &Image8, params: &CropParams) -> Result<Image8> {
    let small = downsample_area(img, params.factor)?;
    let size = params.size;
    if small.width() < size || small.height() < size {
        return Err(Error::InvalidInput(format!(
            "downsampled frame {}x{} is smaller than the {size}x{size} crop",
            small.width(),
            small.height()
        )));
    }
    let [x0, y0] = params
        .origin
        .unwrap_or([(small.width() - size) / 2, (small.height() - size) / 2]);
    if x0 + size > small.width() || y0 + size > small.height() {
        return Err(Error::InvalidInput(format!(
            "crop window at ({x0}, {y0}) leaves the {}x{} frame",
            small.width(),
            small.height()
        )));
    }
    if let Some([start, end]) = params.exclusion_band {
        if y0 < end && start < y0 + size {
            return Err(Error::InvalidInput(format!(
                "crop rows {y0}..{} overlap the excluded band {start}..{end}",
                y0 + size
            )));
        }
    }
    Ok(Image8::from_fn(size, size, |x, y| small[(x0 + x, y0 + y)]))
}
