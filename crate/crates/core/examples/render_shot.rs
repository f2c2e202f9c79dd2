//! Renders one image of every class and writes them as PGM files.
//!
//! ```text
//! cargo run --release --example render_shot -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use diffract::dataset::{write_pgm, SimConfig, Simulator};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "shots".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    std::fs::create_dir_all(&out)?;

    let sim = Simulator::new(SimConfig::default())?;
    println!(
        "{} structure factors, detector {}x{}",
        sim.table().len(),
        sim.config().geometry.n_fast,
        sim.config().geometry.n_slow
    );
    for spec in &sim.config().classes {
        let shot = sim.generate(spec, seed)?;
        let r = &shot.record;
        let peak = shot
            .expectation
            .as_slice()
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let path = out.join(format!("{}.pgm", r.label));
        write_pgm(&shot.image, &path)?;
        println!(
            "{:<10} fluence {:9.3e}  bragg photons {:9.3e}  peak {:8.0}  8-bit mean {:5.1}  -> {}",
            r.label.as_str(),
            r.fluence,
            r.bragg_photons,
            peak,
            shot.image.mean(),
            path.display()
        );
    }
    Ok(())
}
