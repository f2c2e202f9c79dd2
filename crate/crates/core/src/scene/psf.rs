use crate::image::ExpectationImage;

/// Normalised one-dimensional Gaussian for the given FWHM, truncated at
/// 4σ. Index 0 is the centre tap.
pub fn gaussian_kernel(fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let radius = (4.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = taps.iter().sum();
    let radius = radius as usize;
    taps[radius..].iter().map(|t| t / norm).collect()
}

fn convolve_line(input: &[f64], stride: usize, len: usize, kernel: &[f64], out: &mut Vec<f64>) {
    let r = kernel.len() as isize - 1;
    out.clear();
    for i in 0..len as isize {
        let mut acc = 0.0;
        for k in -r..=r {
            let j = i + k;
            if j < 0 || j >= len as isize {
                continue;
            }
            acc += kernel[k.unsigned_abs()] * input[j as usize * stride];
        }
        out.push(acc);
    }
}

/// Convolves with a normalised 2-D Gaussian of the given FWHM (pixels).
/// Pixels outside the image are treated as zero. `psf_fwhm == 0` returns
/// the input unchanged.
pub fn apply_psf(img: &ExpectationImage, psf_fwhm: f64) -> ExpectationImage {
    if psf_fwhm <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(psf_fwhm);
    let (w, h) = (img.width(), img.height());
    let mut tmp = vec![0.0; w * h];
    let mut line = Vec::with_capacity(w.max(h));
    let src = img.as_slice();
    for y in 0..h {
        convolve_line(&src[y * w..], 1, w, &kernel, &mut line);
        tmp[y * w..(y + 1) * w].copy_from_slice(&line);
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        convolve_line(&tmp[x..], w, h, &kernel, &mut line);
        for (y, v) in line.iter().enumerate() {
            out[y * w + x] = *v;
        }
    }
    ExpectationImage::from_vec(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize, value: f64) -> ExpectationImage {
        let mut img = ExpectationImage::new(n, n);
        img[(n / 2, n / 2)] = value;
        img
    }

    #[test]
    fn zero_width_is_identity() {
        let img = impulse(9, 3.0);
        assert_eq!(apply_psf(&img, 0.0), img);
    }

    #[test]
    fn impulse_is_conserved() {
        let out = apply_psf(&impulse(65, 1000.0), 1.5);
        assert!((out.sum() - 1000.0).abs() < 1.0);
        let wide = apply_psf(&impulse(65, 1000.0), 6.0);
        assert!((wide.sum() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn centre_value_is_discrete_gaussian_peak() {
        let fwhm = 2.5;
        let out = apply_psf(&impulse(41, 1.0), fwhm);
        // oracle: evaluate the truncated, normalised 2-D kernel directly
        let sigma = fwhm / (2.0 * (2.0f64 * 2.0f64.ln()).sqrt());
        let r = (4.0 * sigma).ceil() as i64;
        let mut norm = 0.0;
        for i in -r..=r {
            for j in -r..=r {
                norm += (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        assert!((out[(20, 20)] - 1.0 / norm).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_normalised() {
        let k = gaussian_kernel(1.5);
        let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
