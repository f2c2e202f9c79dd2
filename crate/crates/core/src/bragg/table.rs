//! Structure-factor amplitudes indexed by Miller triples.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::UnitCell;
use crate::error::{Error, Result};

pub type Miller = [i32; 3];

fn friedel(h: Miller) -> Miller {
    [-h[0], -h[1], -h[2]]
}

/// `|F(h)|` in electrons. Friedel mates always carry equal amplitudes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructureFactorTable {
    amplitudes: BTreeMap<Miller, f64>,
    d_min: Option<f64>,
}

impl StructureFactorTable {
    /// Builds a table from `(h, |F|)` pairs, symmetrising Friedel mates to
    /// the larger of the two amplitudes.
    pub fn from_entries(entries: impl IntoIterator<Item = (Miller, f64)>) -> Result<Self> {
        let mut amplitudes = BTreeMap::new();
        for (h, f) in entries {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::InvalidInput(format!("amplitude {f} for {h:?}")));
            }
            for key in [h, friedel(h)] {
                let slot = amplitudes.entry(key).or_insert(0.0f64);
                *slot = slot.max(f);
            }
        }
        Ok(StructureFactorTable {
            amplitudes,
            d_min: None,
        })
    }

    pub fn with_d_min(mut self, d_min: f64) -> Self {
        self.d_min = Some(d_min);
        self
    }

    pub fn d_min(&self) -> Option<f64> {
        self.d_min
    }

    pub fn get(&self, h: Miller) -> Option<f64> {
        self.amplitudes.get(&h).copied()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Miller, f64)> + '_ {
        self.amplitudes.iter().map(|(h, f)| (*h, *f))
    }

    /// Largest |index| along each axis.
    pub fn index_bounds(&self) -> [i32; 3] {
        self.amplitudes.keys().fold([0; 3], |acc, h| {
            [
                acc[0].max(h[0].abs()),
                acc[1].max(h[1].abs()),
                acc[2].max(h[2].abs()),
            ]
        })
    }

    /// Dense `|F|²` lookup used by the renderer.
    pub(crate) fn dense_intensities(&self) -> DenseIntensities {
        let bounds = self.index_bounds();
        let dims = bounds.map(|b| (2 * b + 1) as usize);
        let mut data = vec![0.0; dims[0] * dims[1] * dims[2]];
        for (h, f) in self.iter() {
            let idx = ((h[0] + bounds[0]) as usize * dims[1] + (h[1] + bounds[1]) as usize)
                * dims[2]
                + (h[2] + bounds[2]) as usize;
            data[idx] = f * f;
        }
        DenseIntensities { bounds, dims, data }
    }
}

pub(crate) struct DenseIntensities {
    bounds: [i32; 3],
    dims: [usize; 3],
    data: Vec<f64>,
}

impl DenseIntensities {
    /// `|F|²`, zero for indices absent from the table.
    #[inline]
    pub fn get(&self, h: [i64; 3]) -> f64 {
        let mut idx = 0usize;
        for axis in 0..3 {
            let shifted = h[axis] + self.bounds[axis] as i64;
            if shifted < 0 || shifted as usize >= self.dims[axis] {
                return 0.0;
            }
            idx = idx * self.dims[axis] + shifted as usize;
        }
        self.data[idx]
    }
}

/// Parses `h k l F` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_hkl(reader: impl BufRead) -> Result<StructureFactorTable> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `h k l F`, found {} fields", fields.len()),
            });
        }
        let mut h = [0i32; 3];
        for (slot, text) in h.iter_mut().zip(&fields[..3]) {
            *slot = text.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid Miller index `{text}`"),
            })?;
        }
        let f: f64 = fields[3].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid amplitude `{}`", fields[3]),
        })?;
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("amplitude must be non-negative, got {f}"),
            });
        }
        entries.push((h, f));
    }
    StructureFactorTable::from_entries(entries)
}

pub fn load_hkl(path: impl AsRef<Path>) -> Result<StructureFactorTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_hkl(BufReader::new(file))
}

pub fn write_hkl(table: &StructureFactorTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (h, f) in table.iter() {
        writeln!(w, "{} {} {} {}", h[0], h[1], h[2], f).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Resolution-dependent mean intensity `⟨|F|²⟩(d) = mean_intensity · exp(−B / (2 d²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonProfile {
    pub mean_intensity: f64,
    /// Overall temperature factor in Å².
    pub b_factor: f64,
}

impl Default for WilsonProfile {
    fn default() -> Self {
        WilsonProfile {
            mean_intensity: 1.0e6,
            b_factor: 20.0,
        }
    }
}

impl WilsonProfile {
    pub fn mean_at(&self, d: f64) -> f64 {
        if d.is_infinite() {
            return self.mean_intensity;
        }
        self.mean_intensity * (-self.b_factor / (2.0 * d * d)).exp()
    }
}

/// Synthesises an acentric table: for each index with `d ≥ d_min`,
/// `|F|² = ⟨|F|²⟩(d) · E` with `E ~ Exp(1)`. The (0,0,0) reflection is kept
/// with zero amplitude since it coincides with the direct beam.
pub fn synth_wilson_table<R: rand::Rng + ?Sized>(
    rng: &mut R,
    cell: &UnitCell,
    d_min: f64,
    profile: &WilsonProfile,
) -> StructureFactorTable {
    assert!(d_min > 0.0, "d_min must be positive");
    let reciprocal = cell.reciprocal_basis();
    let max_q = 1.0 / d_min;
    // |h_i| = |a_i · q| <= |a_i| |q|
    let real = cell.real_basis();
    let bounds: Vec<i32> = (0..3)
        .map(|i| (real.column(i).norm() * max_q).floor() as i32)
        .collect();

    let mut amplitudes = BTreeMap::new();
    amplitudes.insert([0, 0, 0], 0.0);
    for h in -bounds[0]..=bounds[0] {
        for k in -bounds[1]..=bounds[1] {
            for l in -bounds[2]..=bounds[2] {
                let idx = [h, k, l];
                // canonical half: first non-zero component positive
                let first = idx.iter().copied().find(|&v| v != 0);
                if first.is_none_or(|v| v < 0) {
                    continue;
                }
                let q = reciprocal * nalgebra::Vector3::new(h as f64, k as f64, l as f64);
                let d = 1.0 / q.norm();
                if d < d_min {
                    continue;
                }
                let e: f64 = Exp1.sample(rng);
                let f = (profile.mean_at(d) * e).sqrt();
                amplitudes.insert(idx, f);
                amplitudes.insert(friedel(idx), f);
            }
        }
    }
    StructureFactorTable {
        amplitudes,
        d_min: Some(d_min),
    }
}
