//! Tophat replacement for the Fraunhofer grating factor.
//!
//! Along one axis a crystal of `N` cells scatters with
//! `sin²(πNx) / sin²(πx)`, where `x` is the offset from the nearest integer
//! Miller index. Its main peak has height `N²` and its integral over one
//! period is `N`. The tophat keeps the FWHM of that main peak and the
//! per-period integral: width `w(N)`, height `N / w(N)`.

use serde::{Deserialize, Serialize};

/// Exact one-axis grating intensity `sin²(πNx) / sin²(πx)`.
pub fn grating_intensity(x: f64, n: usize) -> f64 {
    let n = n as f64;
    let s = (std::f64::consts::PI * x).sin();
    if s.abs() < 1e-12 {
        return n * n;
    }
    let num = (std::f64::consts::PI * n * x).sin();
    num * num / (s * s)
}

/// Full width at half maximum of the grating main peak, in Miller-index
/// units. For a single cell the grating is flat and the whole period is
/// returned.
pub fn grating_fwhm(n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let half = 0.5 * (n * n) as f64;
    // grating_intensity is strictly decreasing on (0, 1/N)
    let (mut lo, mut hi) = (0.0f64, 1.0 / n as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if grating_intensity(mid, n) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * 0.5 * (lo + hi)
}

/// Separable tophat lattice factor for a crystal of `cells` unit cells per
/// axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TophatLattice {
    pub cells: [usize; 3],
    pub width: [f64; 3],
    pub height: [f64; 3],
}

impl TophatLattice {
    pub fn new(cells: [usize; 3]) -> Self {
        let width = cells.map(grating_fwhm);
        let height = [0, 1, 2].map(|i| cells[i] as f64 / width[i]);
        TophatLattice {
            cells,
            width,
            height,
        }
    }

    /// Factor at fractional offset `delta` from the nearest lattice point.
    #[inline]
    pub fn factor(&self, delta: [f64; 3]) -> f64 {
        let mut value = 1.0;
        for axis in 0..3 {
            if delta[axis].abs() > 0.5 * self.width[axis] {
                return 0.0;
            }
            value *= self.height[axis];
        }
        value
    }

    #[inline]
    pub(crate) fn half_widths(&self) -> [f64; 3] {
        self.width.map(|w| 0.5 * w)
    }

    /// Product of the per-axis heights: the factor anywhere inside the box.
    #[inline]
    pub(crate) fn peak(&self) -> f64 {
        self.height.iter().product()
    }
}

/// Tophat factor for offset `delta` with `n` cells along every axis.
pub fn lattice_factor_tophat(delta: [f64; 3], n: usize) -> f64 {
    TophatLattice::new([n; 3]).factor(delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_index_offset_is_dark() {
        for n in 2..20 {
            assert_eq!(lattice_factor_tophat([0.5, 0.0, 0.0], n), 0.0);
        }
    }

    #[test]
    fn ten_cells() {
        let w = grating_fwhm(10);
        assert!((w - 0.0886).abs() < 5e-4, "{w}");
        let lat = TophatLattice::new([10; 3]);
        assert!((lat.height[0] - 112.4).abs() < 0.1, "{}", lat.height[0]);
        assert!((lat.height[0] * lat.width[0] - 10.0).abs() < 1e-9);
        assert_eq!(lattice_factor_tophat([0.0; 3], 10), lat.height[0].powi(3));
    }

    #[test]
    fn fwhm_is_half_maximum() {
        for n in [2, 5, 13, 50] {
            let w = grating_fwhm(n);
            let at_edge = grating_intensity(w / 2.0, n);
            assert!((at_edge / (n * n) as f64 - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn single_cell_is_flat() {
        let lat = TophatLattice::new([1, 1, 1]);
        assert_eq!(lat.factor([0.5, -0.5, 0.2]), 1.0);
    }
}
