//! Rotation-invariant uniform local binary pattern histograms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image8;

/// Neighbour sampling between pixel centres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbpParams {
    pub points: usize,
    pub radius: f64,
    pub interpolation: Interpolation,
}

impl Default for LbpParams {
    fn default() -> Self {
        LbpParams {
            points: 24,
            radius: 3.0,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl LbpParams {
    pub fn new(points: usize, radius: f64) -> Self {
        LbpParams {
            points,
            radius,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 4 || self.points > 64 {
            return Err(Error::InvalidInput(format!(
                "LBP points {} outside [4, 64]",
                self.points
            )));
        }
        if !(self.radius >= 1.0) || !self.radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "LBP radius {} must be at least 1",
                self.radius
            )));
        }
        Ok(())
    }

    /// Histogram length: `P + 1` uniform codes plus one non-uniform bin.
    pub fn len(&self) -> usize {
        self.points + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One neighbour sample as up to four weighted pixel offsets.
struct Tap {
    offsets: [(i64, i64); 4],
    weights: [f64; 4],
}

fn taps(params: &LbpParams) -> Vec<Tap> {
    let round5 = |v: f64| (v * 1e5).round() / 1e5;
    (0..params.points)
        .map(|p| {
            let phi = 2.0 * std::f64::consts::PI * p as f64 / params.points as f64;
            let dr = round5(-params.radius * phi.sin());
            let dc = round5(params.radius * phi.cos());
            match params.interpolation {
                Interpolation::Nearest => Tap {
                    offsets: [(dr.round() as i64, dc.round() as i64); 4],
                    weights: [1.0, 0.0, 0.0, 0.0],
                },
                Interpolation::Bilinear => {
                    let (r0, c0) = (dr.floor(), dc.floor());
                    let (fr, fc) = (dr - r0, dc - c0);
                    let (r0, c0) = (r0 as i64, c0 as i64);
                    Tap {
                        offsets: [(r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)],
                        weights: [
                            (1.0 - fr) * (1.0 - fc),
                            (1.0 - fr) * fc,
                            fr * (1.0 - fc),
                            fr * fc,
                        ],
                    }
                }
            }
        })
        .collect()
}

/// Normalised histogram of rotation-invariant uniform LBP codes over the
/// pixels whose whole neighbourhood lies inside the image.
///
/// A neighbour counts as set when it exceeds the centre by more than
/// `1e-12`, so flat regions map to code 0. Uniform patterns (at most two
/// 0/1 transitions around the circle) map to their number of set bits;
/// all others share bin `P + 1`.
pub fn lbp_histogram(img: &Image8, params: &LbpParams) -> Result<Vec<f64>> {
    params.validate()?;
    let border = params.radius.ceil() as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    if w <= 2 * border || h <= 2 * border {
        return Err(Error::InvalidInput(format!(
            "{w}x{h} image has no interior for LBP radius {}",
            params.radius
        )));
    }
    let taps = taps(params);
    let px = img.as_slice();
    let p = params.points;
    let mut hist = vec![0u64; p + 2];
    let mut bits = vec![false; p];
    for r in border..h - border {
        for c in border..w - border {
            let center = px[(r * w + c) as usize] as f64;
            for (bit, tap) in bits.iter_mut().zip(&taps) {
                let mut v = 0.0;
                for ((dr, dc), wgt) in tap.offsets.iter().zip(tap.weights) {
                    if wgt != 0.0 {
                        v += wgt * px[((r + dr) * w + c + dc) as usize] as f64;
                    }
                }
                *bit = v - center > 1e-12;
            }
            let transitions = (0..p).filter(|&i| bits[i] != bits[(i + 1) % p]).count();
            let code = if transitions <= 2 {
                bits.iter().filter(|&&b| b).count()
            } else {
                p + 1
            };
            hist[code] += 1;
        }
    }
    let total: u64 = hist.iter().sum();
    Ok(hist.into_iter().map(|n| n as f64 / total as f64).collect())
}

pub fn lbp_feature_names(params: &LbpParams) -> Vec<String> {
    let mut names: Vec<String> = (0..=params.points).map(|k| format!("lbp_{k}")).collect();
    names.push("lbp_nonuniform".into());
    names
}
