//! Independent numeric oracles for the lattice factor, crystal rescale and
//! 16→8 bit compression.

use diffract::bragg::{lattice_factor_tophat, parse_hkl, CrystalModel, TophatLattice};
use diffract::image::RawImage16;
use diffract::scene::compress_sqrt;
use diffract::Error;

fn fejer(x: f64, n: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if x == 0.0 {
        return n * n;
    }
    ((pi * n * x).sin() / (pi * x).sin()).powi(2)
}

/// FWHM by a fine forward scan from the peak with linear interpolation.
fn scanned_fwhm(n: usize) -> f64 {
    let nf = n as f64;
    let half = nf * nf / 2.0;
    let step = 1e-6 / nf;
    let mut x = 0.0;
    let mut prev = fejer(0.0, nf);
    loop {
        let next_x = x + step;
        let v = fejer(next_x, nf);
        if v <= half {
            let t = (prev - half) / (prev - v);
            return 2.0 * (x + t * step);
        }
        x = next_x;
        prev = v;
    }
}

/// Composite Simpson integral of the grating over one period.
fn period_integral(n: usize) -> f64 {
    let m = 200_000;
    let h = 1.0 / m as f64;
    let f = |i: usize| fejer(-0.5 + i as f64 * h, n as f64);
    let mut s = f(0) + f(m);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    s * h / 3.0
}

#[test]
fn tophat_matches_grating_fwhm_and_area() {
    for n in [5, 10, 50] {
        let lat = TophatLattice::new([n; 3]);
        let fwhm = scanned_fwhm(n);
        let area = period_integral(n);
        assert!(
            (lat.width[0] / fwhm - 1.0).abs() < 0.01,
            "N={n}: width {} vs {fwhm}",
            lat.width[0]
        );
        let tophat_area = lat.width[0] * lat.height[0];
        assert!(
            (tophat_area / area - 1.0).abs() < 0.01,
            "N={n}: area {tophat_area} vs {area}"
        );
    }
}

#[test]
fn ten_cell_tophat() {
    let lat = TophatLattice::new([10; 3]);
    assert!((lat.width[0] - 0.0886).abs() < 0.001);
    assert!((lat.height[0] - 112.9).abs() / 112.9 < 0.01);
    assert!((lat.width[0] * lat.height[0] - 10.0).abs() < 0.1);
    for n in 2..60 {
        assert_eq!(lattice_factor_tophat([0.5, 0.0, 0.0], n), 0.0);
    }
}

#[test]
fn thirty_micron_rescale() {
    let c = CrystalModel::default();
    assert_eq!(c.intensity_rescale(), 2.7e7);
    assert_eq!(300f64.powi(3), 2.7e7);
}

#[test]
fn sqrt_compression_oracle() {
    let raw = RawImage16::from_vec(6, 1, vec![0, 99, 100, 65025, 65535, 12]);
    assert_eq!(compress_sqrt(&raw).as_slice(), &[0, 10, 10, 255, 255, 3]);
    // nearest integer to √v by exact integer arithmetic
    let oracle = |v: u32| -> u8 {
        let r = (0..=255u32)
            .min_by_key(|&k| (4 * k * k).abs_diff(4 * v))
            .unwrap();
        // a tie at k + ½ cannot happen for integers: (2k+1)² is odd, 4v even
        r as u8
    };
    let all = RawImage16::from_fn(256, 256, |x, y| (y * 256 + x).min(65025) as u16);
    let out = compress_sqrt(&all);
    for (v, c) in all.as_slice().iter().zip(out.as_slice()) {
        assert_eq!(*c, oracle(*v as u32), "v = {v}");
    }
    assert!(out.as_slice().windows(2).all(|w| w[0] <= w[1]));
    let mut seen = [false; 256];
    out.as_slice().iter().for_each(|&c| seen[c as usize] = true);
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn hkl_file_examples() {
    let t = parse_hkl("0 0 0 100.0\n".as_bytes()).unwrap();
    assert_eq!(t.len(), 1);
    let t = parse_hkl("1 2 3 50\n".as_bytes()).unwrap();
    assert_eq!(t.get([-1, -2, -3]), Some(50.0));
    match parse_hkl("1 2 x 5\n".as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
