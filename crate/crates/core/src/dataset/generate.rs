//! Per-class image generation and dataset orchestration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::classes::{label_image, ClassLabel, ClassSpec};
use super::config::{SimConfig, SplitFractions, StructureFactorSource};
use super::manifest::{write_manifest, ManifestRecord, Split};
use super::pgm::write_pgm;
use crate::bragg::{load_hkl, synth_wilson_table, BraggRenderer, StructureFactorTable};
use crate::error::{Error, Result};
use crate::geometry::{sample_shot, ShotParams};
use crate::image::{ExpectationImage, Image8, RawImage16};
use crate::rng::{self, tag};
use crate::scene::{apply_psf, background_expectation, compress_sqrt, Detector};

pub const GENERATOR_VERSION: &str = concat!("diffract/", env!("CARGO_PKG_VERSION"));

/// Every intermediate of one generated image.
#[derive(Debug, Clone)]
pub struct GeneratedImage {
    /// Bragg plus background expectation after the point spread.
    pub expectation: ExpectationImage,
    pub raw: RawImage16,
    pub image: Image8,
    /// `index`, `path` and `split` are left for the caller to fill in.
    pub record: ManifestRecord,
}

/// Pilot-run distribution of crystal-shot Bragg budgets.
#[derive(Debug, Clone)]
pub struct BudgetCalibration {
    /// Sorted total expected Bragg photons per pilot shot.
    pub budgets: Vec<f64>,
    /// 1st, 33rd, 66th and 99th percentiles.
    pub edges: [f64; 4],
}

/// Prepared simulator: structure factors, renderer and detector gain map
/// are built once and shared by all images.
pub struct Simulator {
    config: SimConfig,
    table: StructureFactorTable,
    renderer: BraggRenderer,
    detector: Detector,
}

fn log_uniform<R: rand::Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        return lo;
    }
    let u: f64 = rng.random();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let table = match &config.structure_factors {
            StructureFactorSource::Synthetic {
                d_min,
                profile,
                seed,
            } => {
                let mut rng = rng::stream(*seed, &[tag::WILSON]);
                synth_wilson_table(&mut rng, &config.crystal.cell, *d_min, profile)
            }
            StructureFactorSource::File { path } => load_hkl(path)?,
        };
        if table.is_empty() {
            return Err(Error::Config("structure-factor table is empty".into()));
        }
        let renderer =
            BraggRenderer::new(&config.geometry, &config.crystal, &table, config.bragg_gain);
        let detector = Detector::new(
            config.noise.clone(),
            config.geometry.n_fast,
            config.geometry.n_slow,
        );
        Ok(Simulator {
            config,
            table,
            renderer,
            detector,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn table(&self) -> &StructureFactorTable {
        &self.table
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn render_bragg(&self, shot: &ShotParams) -> ExpectationImage {
        self.renderer.render(shot)
    }

    fn beam_on_shot(&self, seed: u64, attempt: u64) -> Option<ShotParams> {
        let shot = sample_shot(
            &self.config.beam,
            &self.config.crystal,
            rng::derive_seed(seed, &[tag::SHOT, attempt]),
        );
        let floor = self.config.min_beam_on_fluence_fraction * self.config.beam.mean_fluence;
        (shot.fluence > 0.0 && shot.fluence >= floor).then_some(shot)
    }

    /// Draws a beam-on crystal shot and its Bragg image at unit crystal
    /// scale, without any class constraint.
    pub fn unconstrained_crystal_shot(&self, seed: u64) -> Result<(ShotParams, ExpectationImage)> {
        (0..self.config.max_retries as u64)
            .find_map(|attempt| self.beam_on_shot(seed, attempt))
            .map(|shot| {
                let bragg = self.render_bragg(&shot);
                (shot, bragg)
            })
            .ok_or_else(|| {
                Error::Generation(format!(
                    "no usable beam-on shot within {} retries",
                    self.config.max_retries
                ))
            })
    }

    /// Generates one labelled image of class `spec` from `image_seed`.
    ///
    /// Crystal classes draw a target Bragg budget log-uniformly from the
    /// class range and scale the rendered Bragg image to it; shots whose
    /// required crystal scale falls outside `crystal_scale_range` are
    /// redrawn up to `max_retries` times.
    pub fn generate(&self, spec: &ClassSpec, image_seed: u64) -> Result<GeneratedImage> {
        let cfg = &self.config;
        let geom = &cfg.geometry;
        let mut bg_rng = rng::stream(image_seed, &[tag::IMAGE]);
        let background_scale = log_uniform(&mut bg_rng, cfg.background_scale_range);

        let (shot, crystal_scale, bragg_photons, mut expectation) = if !spec.beam_on {
            let mut shot = sample_shot(
                &cfg.beam,
                &cfg.crystal,
                rng::derive_seed(image_seed, &[tag::SHOT, 0]),
            );
            shot.fluence = 0.0;
            (
                shot,
                0.0,
                0.0,
                ExpectationImage::new(geom.n_fast, geom.n_slow),
            )
        } else if !spec.crystal_on {
            let shot = (0..cfg.max_retries as u64)
                .find_map(|attempt| self.beam_on_shot(image_seed, attempt))
                .ok_or_else(|| Error::Generation("no usable beam-on shot".into()))?;
            (
                shot,
                0.0,
                0.0,
                ExpectationImage::new(geom.n_fast, geom.n_slow),
            )
        } else {
            self.crystal_component(spec, image_seed)?
        };

        if spec.beam_on {
            let mut bg = background_expectation(geom, &shot, &cfg.background);
            bg.scale(background_scale);
            expectation.add_assign(&bg);
        }
        let expectation = apply_psf(&expectation, cfg.noise.psf_fwhm_px);
        let raw = self
            .detector
            .read(&expectation, rng::derive_seed(image_seed, &[tag::READOUT]));
        let image = compress_sqrt(&raw);

        let label = label_image(spec.beam_on, spec.crystal_on, bragg_photons, &cfg.classes)?;
        if label != spec.name {
            return Err(Error::Labeling(format!(
                "generated parameters label as {label}, requested {}",
                spec.name
            )));
        }
        let record = ManifestRecord {
            index: 0,
            path: String::new(),
            label,
            split: Split::Train,
            image_seed,
            beam_on: spec.beam_on,
            crystal_on: spec.crystal_on,
            fluence: shot.fluence,
            wavelength: shot.wavelength,
            orientation: shot.base_orientation.to_quaternion(),
            crystal_scale,
            background_scale: if spec.beam_on { background_scale } else { 0.0 },
            bragg_photons,
            generator_version: GENERATOR_VERSION.to_string(),
        };
        Ok(GeneratedImage {
            expectation,
            raw,
            image,
            record,
        })
    }

    fn crystal_component(
        &self,
        spec: &ClassSpec,
        seed: u64,
    ) -> Result<(ShotParams, f64, f64, ExpectationImage)> {
        let range = spec
            .bragg_budget
            .ok_or_else(|| Error::Config(format!("class {} has no budget range", spec.name)))?;
        let [min_scale, max_scale] = self.config.crystal_scale_range;
        for attempt in 0..self.config.max_retries as u64 {
            let Some(shot) = self.beam_on_shot(seed, attempt) else {
                continue;
            };
            let mut bragg = self.render_bragg(&shot);
            let natural = bragg.sum();
            if !(natural > 0.0) {
                continue;
            }
            let mut rng = rng::stream(seed, &[tag::BUDGET, attempt]);
            let target = log_uniform(&mut rng, range);
            if !spec.contains_budget(target) {
                continue;
            }
            let scale = target / natural;
            if !(min_scale..=max_scale).contains(&scale) {
                continue;
            }
            bragg.scale(scale);
            return Ok((shot, scale, target, bragg));
        }
        Err(Error::Generation(format!(
            "class {}: Bragg budget not reachable within {} retries",
            spec.name, self.config.max_retries
        )))
    }

    /// Pilot run: Bragg budgets of `n_shots` unconstrained crystal shots
    /// and their 1st/33rd/66th/99th percentiles.
    pub fn calibrate_budgets(&self, n_shots: usize, seed: u64) -> Result<BudgetCalibration> {
        if n_shots == 0 {
            return Err(Error::InvalidInput("pilot needs at least one shot".into()));
        }
        let mut budgets = (0..n_shots)
            .into_par_iter()
            .map(|i| {
                let (_, bragg) = self
                    .unconstrained_crystal_shot(rng::derive_seed(seed, &[tag::PILOT, i as u64]))?;
                Ok(bragg.sum())
            })
            .collect::<Result<Vec<f64>>>()?;
        budgets.sort_by(f64::total_cmp);
        let pick = |p: f64| budgets[((p / 100.0) * (budgets.len() - 1) as f64).round() as usize];
        let edges = [pick(1.0), pick(33.0), pick(66.0), pick(99.0)];
        Ok(BudgetCalibration { budgets, edges })
    }
}

/// Builds a simulator for `config` and generates one image. Prefer
/// [`Simulator::generate`] when producing many images.
pub fn generate_image(
    spec: &ClassSpec,
    config: &SimConfig,
    image_seed: u64,
) -> Result<(Image8, ManifestRecord)> {
    let sim = Simulator::new(config.clone())?;
    let out = sim.generate(spec, image_seed)?;
    Ok((out.image, out.record))
}

pub fn calibrate_budget_ranges(
    config: &SimConfig,
    n_shots: usize,
    seed: u64,
) -> Result<BudgetCalibration> {
    Simulator::new(config.clone())?.calibrate_budgets(n_shots, seed)
}

/// Largest-remainder apportionment of `n` items over `fractions`. Ties in
/// the remainder go to the earlier slot.
pub fn apportion(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let total: f64 = fractions.iter().sum();
    let quotas = fractions.map(|f| n as f64 * f / total);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut left = n - counts.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &slot in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[slot] += 1;
        left -= 1;
    }
    counts
}

/// Stratified split assignment: within each class, images are ordered by a
/// hash of `(master_seed, index)` and the first `train` go to training, the
/// next `val` to validation and the rest to test.
pub fn assign_splits(
    items: &[(usize, ClassLabel)],
    fractions: &SplitFractions,
    master_seed: u64,
) -> Vec<Split> {
    let mut splits = vec![Split::Test; items.len()];
    for class in ClassLabel::ALL {
        let mut members: Vec<(u64, usize)> = items
            .iter()
            .enumerate()
            .filter(|(_, (_, label))| *label == class)
            .map(|(pos, (index, _))| {
                (
                    rng::derive_seed(master_seed, &[tag::SPLIT, *index as u64]),
                    pos,
                )
            })
            .collect();
        members.sort();
        let [train, val, _] = apportion(members.len(), fractions.as_array());
        for (rank, (_, pos)) in members.into_iter().enumerate() {
            splits[pos] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    splits
}

/// Generates every configured image under `out_dir` and writes
/// `manifest.jsonl` (one record per image, ordered by index) and the
/// resolved `config.json`. Images are rendered in parallel on the current
/// rayon pool; the output bytes do not depend on its size.
pub fn generate_dataset(
    config: &SimConfig,
    master_seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let sim = Simulator::new(config.clone())?;
    let jobs: Vec<(usize, &ClassSpec)> = config
        .classes
        .iter()
        .flat_map(|spec| std::iter::repeat_n(spec, spec.count))
        .enumerate()
        .collect();

    let mut records = jobs
        .par_iter()
        .map(|&(index, spec)| {
            let image_seed = rng::derive_seed(master_seed, &[tag::IMAGE, index as u64]);
            let generated = sim.generate(spec, image_seed)?;
            let rel = format!("images/{index:06}.pgm");
            write_pgm(&generated.image, out_dir.join(&rel))?;
            let mut record = generated.record;
            record.index = index;
            record.path = rel;
            Ok(record)
        })
        .collect::<Result<Vec<ManifestRecord>>>()?;

    let items: Vec<(usize, ClassLabel)> = records.iter().map(|r| (r.index, r.label)).collect();
    for (record, split) in
        records
            .iter_mut()
            .zip(assign_splits(&items, &config.splits, master_seed))
    {
        record.split = split;
    }

    config.save(out_dir.join("config.json"))?;
    let manifest = out_dir.join("manifest.jsonl");
    write_manifest(&records, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder() {
        let f = SplitFractions::default().as_array();
        assert_eq!(apportion(100, f), [40, 10, 50]);
        assert_eq!(apportion(20, f), [8, 2, 10]);
        assert_eq!(apportion(200, f), [80, 19, 101]);
        assert_eq!(apportion(0, f), [0, 0, 0]);
        for n in 0..300 {
            assert_eq!(apportion(n, f).iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn splits_are_stratified() {
        let items: Vec<(usize, ClassLabel)> =
            (0..100).map(|i| (i, ClassLabel::ALL[i % 5])).collect();
        let splits = assign_splits(&items, &SplitFractions::default(), 7);
        for class in ClassLabel::ALL {
            let count = |s: Split| {
                items
                    .iter()
                    .zip(&splits)
                    .filter(|((_, c), sp)| *c == class && **sp == s)
                    .count()
            };
            assert_eq!(
                [count(Split::Train), count(Split::Val), count(Split::Test)],
                [8, 2, 10]
            );
        }
        assert_eq!(splits, assign_splits(&items, &SplitFractions::default(), 7));
    }
}
