//! Synthesises a Wilson-statistics structure-factor table, writes it as an
//! `h k l F` file, reads it back and prints the tophat lattice factor of
//! the nominal crystal.
//!
//! ```text
//! cargo run --example structure_factors -- [out.hkl] [d_min]
//! ```

use diffract::bragg::{
    grating_fwhm, load_hkl, synth_wilson_table, write_hkl, CrystalModel, WilsonProfile,
};
use diffract::rng;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "wilson.hkl".into());
    let d_min: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3.0);

    let crystal = CrystalModel::default();
    let cell = crystal.cell;
    let profile = WilsonProfile::default();
    let table = synth_wilson_table(&mut rng::stream(4, &[]), &cell, d_min, &profile);
    write_hkl(&table, &out)?;
    let back = load_hkl(&out)?;
    println!(
        "{} reflections to {d_min} Å written to {out}, {} read back",
        table.len(),
        back.len()
    );

    for d in [20.0, 8.0, 4.0, d_min] {
        println!("  mean |F|^2 at d = {d:5.1} Å: {:.3e}", profile.mean_at(d));
    }
    let lattice = crystal.lattice();
    println!(
        "cells per axis {:?}, tophat width {:.5}, height {:.1}, exact FWHM {:.5}",
        crystal.cells_per_axis(),
        lattice.width[0],
        lattice.height[0],
        grating_fwhm(crystal.cells_per_axis()[0])
    );
    println!(
        "rescale to the full crystal: {:e}",
        crystal.intensity_rescale()
    );
    Ok(())
}
