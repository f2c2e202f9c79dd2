//! Statistical checks of the stochastic sampling layers.

use diffract::bragg::{synth_wilson_table, CrystalModel, UnitCell, WilsonProfile};
use diffract::geometry::{sample_mosaic_rotation, sample_shot, sample_uniform_rotation, BeamModel};
use diffract::image::ExpectationImage;
use diffract::rng;
use diffract::scene::{detector_readout, DetectorNoiseModel};
use statrs::distribution::{ContinuousCDF, Normal};

const DRAWS: usize = 100_000;

/// Two-sided one-sample Kolmogorov–Smirnov test; returns `(D, p)`.
fn ks_test(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

#[test]
fn uniform_rotation_angles_follow_haar_measure() {
    let mut r = rng::stream(101, &[]);
    let rots: Vec<_> = (0..DRAWS)
        .map(|_| sample_uniform_rotation(&mut r))
        .collect();
    // Haar measure: angle density (1 − cos θ)/π, CDF (θ − sin θ)/π
    let (_, p) = ks_test(rots.iter().map(|q| q.angle()).collect(), |t| {
        (t - t.sin()) / std::f64::consts::PI
    });
    assert!(p > 0.01, "KS p = {p}");
    // E[R] = 0 entrywise; each entry has variance 1/3
    let tol = 5.0 * (1.0 / 3.0 / DRAWS as f64).sqrt();
    for i in 0..3 {
        for j in 0..3 {
            let mean = rots.iter().map(|q| q.matrix()[(i, j)]).sum::<f64>() / DRAWS as f64;
            assert!(mean.abs() < tol, "E[R]({i},{j}) = {mean}");
        }
    }
}

#[test]
fn mosaic_rotations_fill_the_cap() {
    let diameter = 0.5f64.to_radians();
    let half = diameter / 2.0;
    let mut r = rng::stream(102, &[]);
    let rots: Vec<_> = (0..DRAWS)
        .map(|_| sample_mosaic_rotation(&mut r, diameter))
        .collect();
    let angles: Vec<f64> = rots.iter().map(|q| q.angle()).collect();
    assert!(angles.iter().all(|&a| a <= half + 1e-12));
    // density ∝ sin²(α/2) on [0, half]: CDF (α − sin α)/(half − sin half)
    let norm = half - half.sin();
    let (_, p) = ks_test(angles, |a| (a - a.sin()) / norm);
    assert!(p > 0.01, "KS p = {p}");
    // rotation axes are isotropic
    let mut axis_sum = [0.0; 3];
    for q in &rots {
        let [w, x, y, z] = q.to_quaternion();
        let s = (1.0 - w * w).sqrt().max(1e-300);
        for (acc, c) in axis_sum.iter_mut().zip([x, y, z]) {
            *acc += c / s;
        }
    }
    let tol = 5.0 * (1.0 / 3.0 / DRAWS as f64).sqrt();
    assert!(
        axis_sum.iter().all(|s| (s / DRAWS as f64).abs() < tol),
        "{axis_sum:?}"
    );
}

#[test]
fn fluence_clamps_at_zero_with_normal_tail_probability() {
    let beam = BeamModel::default();
    let crystal = CrystalModel {
        n_domains: 0,
        ..Default::default()
    };
    let zero = (0..DRAWS as u64)
        .filter(|&s| sample_shot(&beam, &crystal, s).fluence == 0.0)
        .count() as f64
        / DRAWS as f64;
    let oracle = Normal::new(0.0, 1.0).unwrap().cdf(-1.0);
    assert!((oracle - 0.1587).abs() < 1e-4);
    assert!((zero - oracle).abs() < 0.01, "clamped fraction {zero}");
}

#[test]
fn wilson_intensities_are_exponential_within_a_shell() {
    let cell = UnitCell::cubic(80.0);
    let profile = WilsonProfile::default();
    let table = synth_wilson_table(&mut rng::stream(103, &[]), &cell, 2.0, &profile);
    let canonical = |h: [i32; 3]| h > [0, 0, 0];
    let normalised: Vec<f64> = table
        .iter()
        .filter(|&(h, _)| canonical(h))
        .filter_map(|(h, f)| {
            let d = cell.d_spacing(h);
            (2.0..2.1).contains(&d).then(|| f * f / profile.mean_at(d))
        })
        .take(10_000)
        .collect();
    assert_eq!(normalised.len(), 10_000);
    let mean = normalised.iter().sum::<f64>() / normalised.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    let (_, p) = ks_test(normalised, |x| 1.0 - (-x).exp());
    assert!(p > 0.01, "KS p = {p}");
}

fn noise_free_gains() -> DetectorNoiseModel {
    DetectorNoiseModel {
        calibration_rms: 0.0,
        ..Default::default()
    }
}

#[test]
fn readout_mean_and_variance_match_poisson_plus_read_noise() {
    let model = noise_free_gains();
    let img = ExpectationImage::filled(400, 250, 100.0);
    let raw = detector_readout(&img, &model, 104);
    let values: Vec<f64> = raw
        .as_slice()
        .iter()
        .map(|&v| v as f64 - model.offset)
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    // Poisson(100) plus N(0, 3²), then rounding (adds 1/12)
    assert!((mean - 100.0).abs() < 0.5, "mean {mean}");
    assert!((var / 109.0 - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn brighter_expectation_reads_brighter_on_average() {
    let model = DetectorNoiseModel::default();
    let mean_at = |lambda: f64| {
        let raw = detector_readout(&ExpectationImage::filled(400, 250, lambda), &model, 105);
        raw.as_slice().iter().map(|&v| v as f64).sum::<f64>() / raw.len() as f64
    };
    let levels = [0.0, 1.0, 5.0, 50.0, 51.0, 500.0];
    let means: Vec<f64> = levels.iter().map(|&l| mean_at(l)).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}
