//! Pilot calibration of the Bragg gain and the crystal-class budget bands.
//!
//! Renders unconstrained crystal shots at the configured gain, reports the
//! budget percentiles, the typical peak expectation of a strong shot and the
//! mean 8-bit level of no-crystal images.
//!
//! ```text
//! cargo run --release --example calibrate -- [n_shots] [seed]
//! ```

use diffract::dataset::{ClassLabel, SimConfig, Simulator};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_shots: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let config = SimConfig::default();
    let sim = Simulator::new(config.clone())?;
    let start = std::time::Instant::now();
    let cal = sim.calibrate_budgets(n_shots, seed)?;
    println!("pilot of {n_shots} shots took {:.1?}", start.elapsed());
    println!("budget edges (p1, p33, p66, p99): {:?}", cal.edges);

    let mut calibrated = config.clone();
    calibrated.set_budget_edges(cal.edges);
    let sim = Simulator::new(calibrated)?;
    let strong = sim.config().class_spec(ClassLabel::Strong).unwrap().clone();
    let mut peaks = Vec::new();
    for i in 0..16u64 {
        let out = sim.generate(&strong, 1000 + i)?;
        peaks.push(
            out.expectation
                .as_slice()
                .iter()
                .cloned()
                .fold(0.0, f64::max),
        );
    }
    peaks.sort_by(f64::total_cmp);
    let median_peak = peaks[peaks.len() / 2];
    let target = 0.5 * config.noise.saturation as f64;
    println!("median strong peak expectation: {median_peak:.0} photons (target {target:.0})");
    println!(
        "suggested bragg_gain: {:e}",
        config.bragg_gain * target / median_peak
    );

    let none = config.class_spec(ClassLabel::NoCrystal).unwrap().clone();
    let mut means = Vec::new();
    for i in 0..8u64 {
        means.push(sim.generate(&none, 2000 + i)?.image.mean());
    }
    println!("no-crystal 8-bit means: {means:.1?}");
    Ok(())
}
