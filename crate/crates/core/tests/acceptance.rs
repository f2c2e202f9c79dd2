//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::time::Instant;

use diffract::bragg::{CrystalModel, TophatLattice};
use diffract::classifiers::{MaxFeatures, RandomForest, RfParams, SvmModel, SvmParams};
use diffract::dataset::{generate_dataset, SimConfig, Simulator, Split};
use diffract::features::{
    extract_manifest, glcm, haralick, lbp_histogram, GlcmParams, Interpolation, LbpParams,
};
use diffract::geometry::{sample_shot, BeamModel};
use diffract::image::{ExpectationImage, Image8, RawImage16};
use diffract::pipeline::{evaluate_model, train_model, PipelineSpec};
use diffract::scene::{compress_sqrt, detector_readout, DetectorNoiseModel};
use diffract::search::{
    random_search, successive_halving, ConfusionMatrix, Dimension, HalvingSchedule, SearchSpace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{what}: {got} vs {want}"),
    )
}

fn metric_oracle() -> Check {
    let start = Instant::now();
    let classes = ["blank", "no-crystal", "weak", "good", "strong"]
        .map(String::from)
        .to_vec();
    let counts = vec![
        vec![2069, 0, 0, 0, 0],
        vec![0, 3266, 2, 0, 0],
        vec![1, 18, 3280, 47, 0],
        vec![0, 0, 38, 2368, 38],
        vec![0, 0, 0, 44, 1428],
    ];
    let m = ConfusionMatrix::from_counts(classes, counts).map_err(|e| e.to_string())?;
    let round2 = |v: Option<f64>| (v.unwrap_or(f64::NAN) * 10_000.0).round() / 100.0;
    close(round2(m.accuracy()), 98.51, 1e-9, "accuracy")?;
    let recall = [100.0, 99.94, 98.03, 96.89, 97.01];
    let precision = [99.95, 99.45, 98.80, 96.30, 97.41];
    for c in 0..5 {
        close(round2(m.recall(c)), recall[c], 1e-9, &format!("recall {c}"))?;
        close(
            round2(m.precision(c)),
            precision[c],
            1e-9,
            &format!("precision {c}"),
        )?;
    }
    close(round2(m.binary_collapse(&[0, 1])), 99.83, 1e-9, "binary")?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("accuracy 98.51%, binary 99.83%, {secs:.4} s"))
}

fn desk_end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = SimConfig::default();
    cfg.set_total_count(1000);
    let manifest = generate_dataset(&cfg, 2024, dir.path()).map_err(|e| e.to_string())?;
    let spec = PipelineSpec::rf_glcm_best(2024);
    let table = extract_manifest(&manifest, &spec.extractor).map_err(|e| e.to_string())?;
    let model = train_model(&table, &spec.classifier, Split::Train).map_err(|e| e.to_string())?;
    let report = evaluate_model(&model, &table, Split::Test).map_err(|e| e.to_string())?;
    let acc = report.accuracy.unwrap_or(0.0);
    let binary = report.binary_accuracy.unwrap_or(0.0);
    let secs = start.elapsed().as_secs_f64();
    let summary = format!(
        "accuracy {:.2}%, binary {:.2}% on {} test images, {secs:.0} s",
        100.0 * acc,
        100.0 * binary,
        report.confusion.total()
    );
    ensure(
        acc >= 0.90 && binary >= 0.98 && secs <= 1800.0,
        summary.clone(),
    )?;
    Ok(summary)
}

fn fejer(x: f64, n: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x == 0.0 {
        n * n
    } else {
        ((pi * n * x).sin() / (pi * x).sin()).powi(2)
    }
}

fn physics() -> Check {
    for n in [5usize, 10, 50] {
        let nf = n as f64;
        let step = 1e-6 / nf;
        let mut x = 0.0;
        while fejer(x + step, nf) > nf * nf / 2.0 {
            x += step;
        }
        let (a, b) = (fejer(x, nf), fejer(x + step, nf));
        let fwhm = 2.0 * (x + step * (a - nf * nf / 2.0) / (a - b));
        let m = 200_000;
        let h = 1.0 / m as f64;
        let integral = (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * fejer(-0.5 + i as f64 * h, nf)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let lat = TophatLattice::new([n; 3]);
        close(lat.width[0] / fwhm, 1.0, 0.01, &format!("N={n} width"))?;
        close(
            lat.width[0] * lat.height[0] / integral,
            1.0,
            0.01,
            &format!("N={n} area"),
        )?;
    }
    ensure(
        CrystalModel::default().intensity_rescale() == 2.7e7,
        "rescale factor",
    )?;

    let beam = BeamModel::default();
    let crystal = CrystalModel {
        n_domains: 0,
        ..Default::default()
    };
    let clamped = (0..100_000u64)
        .filter(|&s| sample_shot(&beam, &crystal, s).fluence == 0.0)
        .count() as f64
        / 1e5;
    close(clamped, 0.1587, 0.01, "zero-fluence fraction")?;

    let model = DetectorNoiseModel {
        calibration_rms: 0.0,
        ..Default::default()
    };
    let raw = detector_readout(&ExpectationImage::filled(400, 250, 100.0), &model, 1);
    let v: Vec<f64> = raw
        .as_slice()
        .iter()
        .map(|&a| a as f64 - model.offset)
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    close(mean, 100.0, 0.5, "readout mean")?;
    close(var / 109.0, 1.0, 0.05, "readout variance")?;

    let ramp = RawImage16::from_fn(256, 256, |x, y| (y * 256 + x) as u16);
    let out = compress_sqrt(&ramp);
    ensure(
        out.as_slice().windows(2).all(|w| w[0] <= w[1]),
        "compression order",
    )?;
    ensure(out.as_slice()[65025] == 255, "65025 must map to 255")?;
    Ok(format!(
        "zero-fluence {:.2}%, readout mean {mean:.2} var {var:.1}",
        100.0 * clamped
    ))
}

fn hash_dir(dir: &Path) -> u64 {
    let mut h = DefaultHasher::new();
    for sub in ["manifest.jsonl", "images"] {
        let p = dir.join(sub);
        let mut files = if p.is_dir() {
            std::fs::read_dir(&p)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect()
        } else {
            vec![p]
        };
        files.sort();
        for f in files {
            f.file_name().hash(&mut h);
            std::fs::read(&f).unwrap().hash(&mut h);
        }
    }
    h.finish()
}

fn determinism() -> Check {
    let mut cfg = SimConfig::default();
    cfg.set_total_count(20);
    let hashes: Vec<u64> = [1, 8]
        .into_iter()
        .map(|threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let dir = tempfile::tempdir().unwrap();
            pool.install(|| generate_dataset(&cfg, 99, dir.path()))
                .map_err(|e| e.to_string())?;
            Ok(hash_dir(dir.path()))
        })
        .collect::<Result<_, String>>()?;
    ensure(
        hashes[0] == hashes[1],
        format!("hashes differ: {hashes:x?}"),
    )?;

    let sim = Simulator::new(SimConfig::default()).map_err(|e| e.to_string())?;
    let strong = sim.config().classes[4].clone();
    let start = Instant::now();
    sim.generate(&strong, 5).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 10.0, format!("one image took {secs:.2} s"))?;
    Ok(format!(
        "hash {:016x} on 1 and 8 threads, one image {secs:.2} s",
        hashes[0]
    ))
}

fn feature_and_learner_properties() -> Check {
    let board = Image8::from_fn(16, 16, |x, y| ((x + y) % 2) as u8);
    let m = &glcm(&board, &GlcmParams::new(&[1], &[0])).map_err(|e| e.to_string())?[0];
    let f = haralick(m);
    for (got, want, name) in [
        (f[0], 1.0, "contrast"),
        (f[1], 1.0, "dissimilarity"),
        (f[2], 0.5, "homogeneity"),
        (f[3], 0.5, "asm"),
        (f[4], 0.5f64.sqrt(), "energy"),
        (f[5], -1.0, "correlation"),
    ] {
        close(got, want, 1e-12, name)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let img = Image8::from_fn(24, 24, |_, _| rng.random_range(0..128u8));
        let remapped = img.map(|&v| 2 * v + 1);
        for p in [4, 8, 16, 24] {
            let params = LbpParams {
                interpolation: Interpolation::Nearest,
                ..LbpParams::new(p, 3.0)
            };
            ensure(
                lbp_histogram(&img, &params).unwrap() == lbp_histogram(&remapped, &params).unwrap(),
                format!("LBP remap P={p}"),
            )?;
        }
    }

    let x: Vec<Vec<f64>> = (0..100)
        .map(|i| vec![i as f64, (i * 37 % 11) as f64])
        .collect();
    let y: Vec<usize> = (0..100).map(|i| usize::from(i >= 50)).collect();
    let rf = RandomForest::fit(
        &x,
        &y,
        2,
        &RfParams {
            max_features: MaxFeatures::Sqrt,
            ..RfParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(
        rf.predict(&x).unwrap() == y,
        "RF training accuracy below 100%",
    )?;

    let xor = vec![
        vec![1.0, 1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
        vec![-1.0, 1.0],
    ];
    let p = SvmParams {
        c: 10.0,
        gamma: 1.0,
        standardize: false,
        tolerance: 1e-6,
        ..SvmParams::default()
    };
    let svm = SvmModel::fit(&xor, &[0, 0, 1, 1], 2, &p).map_err(|e| e.to_string())?;
    let alpha = 1.0 / (1.0 - (-4.0f64).exp()).powi(2);
    for a in &svm.machines[0].alpha {
        close(*a, alpha, 1e-5, "XOR multiplier")?;
    }

    let noisy: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let labels: Vec<usize> = noisy
        .iter()
        .map(|r| usize::from(r[0] + 0.4 * rng.random::<f64>() > 0.7))
        .collect();
    let svm =
        SvmModel::fit(&noisy, &labels, 2, &SvmParams { c: 8.0, ..p }).map_err(|e| e.to_string())?;
    let obj = &svm.machines[0].trace.objective;
    ensure(obj.len() >= 3, "trace too short")?;
    ensure(
        obj.windows(2).all(|w| w[1] >= w[0] - 1e-9),
        "dual objective decreased",
    )?;
    Ok(format!(
        "XOR α = {alpha:.6}, {} dual checkpoints",
        obj.len()
    ))
}

fn search_harness() -> Check {
    let space = SearchSpace::new(vec![
        Dimension::ordinal("a", (0..5).map(|v| json!(v)).collect(), json!(0)),
        Dimension::ordinal("b", (0..5).map(|v| json!(v)).collect(), json!(0)),
    ])
    .map_err(|e| e.to_string())?;
    let score = |c: &diffract::search::Config| {
        let (a, b) = (c["a"].as_f64().unwrap(), c["b"].as_f64().unwrap());
        -(a - 3.0).powi(2) - (b - 1.0).powi(2) + 0.01 * a
    };
    let sh = successive_halving(
        &space,
        |c, _| Ok(score(c)),
        &HalvingSchedule::new(9, 3, 1.0),
        42,
    )
    .map_err(|e| e.to_string())?;
    let sizes: Vec<usize> = (0..3)
        .map(|r| sh.trials.iter().filter(|t| t.round == r).count())
        .collect();
    ensure(sizes == [9, 3, 1], format!("round sizes {sizes:?}"))?;
    let rs = random_search(&space, |c| Ok(score(c)), 9, 42).map_err(|e| e.to_string())?;
    ensure(
        sh.best.config == rs.best.config,
        "argmax differs from random search",
    )?;
    Ok(format!("rounds 9/3/1, best {:?}", sh.best.config))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("1 metric oracle", metric_oracle),
        ("2 desk-scale end-to-end", desk_end_to_end),
        ("3 physics micro-oracles", physics),
        ("4 determinism and runtime", determinism),
        (
            "5 feature and learner properties",
            feature_and_learner_properties,
        ),
        ("6 search harness", search_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
