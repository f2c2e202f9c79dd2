//! Generates a labelled dataset with a manifest and stratified splits.
//!
//! ```text
//! cargo run --release --example generate_dataset -- [out_dir] [count] [seed]
//! ```

use std::collections::BTreeMap;

use diffract::dataset::{generate_dataset, read_manifest, SimConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "dataset".into());
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let mut config = SimConfig::default();
    config.set_total_count(count);
    let start = std::time::Instant::now();
    let manifest = generate_dataset(&config, seed, &out)?;
    println!(
        "{count} images in {:.1?} -> {}",
        start.elapsed(),
        manifest.display()
    );

    let mut table: BTreeMap<_, [usize; 3]> = BTreeMap::new();
    for r in read_manifest(&manifest)? {
        table.entry(r.label).or_default()[r.split as usize] += 1;
    }
    println!("{:<12}{:>6}{:>6}{:>6}", "class", "train", "val", "test");
    for (label, [train, val, test]) in table {
        println!("{:<12}{train:>6}{val:>6}{test:>6}", label.as_str());
    }
    Ok(())
}
