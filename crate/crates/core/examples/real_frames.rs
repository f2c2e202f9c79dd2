//! Prepares a full-resolution detector frame for the classifiers:
//! area-average downsampling, a crop clear of the beamstop shadow and
//! brightness normalisation.
//!
//! Without an input path a synthetic 1024x1024 frame with a dark band is
//! used.
//!
//! ```text
//! cargo run --release --example real_frames -- [frame.pgm] [out.pgm]
//! ```

use diffract::dataset::{crop_downsample_real, preprocess_real, read_pgm, write_pgm, CropParams};
use diffract::Image8;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let frame = match args.next() {
        Some(path) => read_pgm(path)?,
        None => Image8::from_fn(1024, 1024, |x, y| {
            if (500..560).contains(&y) && x < 540 {
                0
            } else {
                (40 + (x * 13 + y * 7) % 50) as u8
            }
        }),
    };
    let out = args.next().unwrap_or_else(|| "frame_crop.pgm".into());

    let params = CropParams {
        factor: 1,
        size: 400,
        origin: Some([300, 60]),
        exclusion_band: Some([500, 560]),
    };
    let cropped = crop_downsample_real(&frame, &params)?;
    let normalised = preprocess_real(&cropped, 26.0)?;
    println!(
        "{}x{} frame, mean {:.1} -> {}x{} crop, mean {:.1}",
        frame.width(),
        frame.height(),
        frame.mean(),
        normalised.width(),
        normalised.height(),
        normalised.mean()
    );
    write_pgm(&normalised, &out)?;
    println!("wrote {out}");

    let overlapping = CropParams {
        origin: Some([300, 300]),
        ..params
    };
    if let Err(e) = crop_downsample_real(&frame, &overlapping) {
        println!("rejected crop: {e}");
    }
    Ok(())
}
