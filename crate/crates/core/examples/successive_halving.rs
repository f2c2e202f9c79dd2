//! Successive-halving search over feature extractors and classifiers on a
//! small generated dataset. Budget is the fraction of training images.
//!
//! ```text
//! cargo run --release --example successive_halving -- [n_configs] [eta] [count] [seed]
//! ```

use diffract::dataset::{generate_dataset, SimConfig, Split};
use diffract::pipeline::{load_split, SearchObjective};
use diffract::search::{successive_halving, HalvingSchedule, SearchSpace};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(9);
    let eta: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(250);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let dir = tempfile::tempdir()?;
    let mut config = SimConfig::default();
    config.set_total_count(count);
    let manifest = generate_dataset(&config, seed, dir.path())?;
    let objective = SearchObjective::new(
        load_split(&manifest, Split::Train)?,
        load_split(&manifest, Split::Val)?,
        seed,
    )?;

    // the largest forests are slow on a desk machine
    let mut space = SearchSpace::texture_classifiers(None)?;
    if let Some(d) = space.dimensions.iter_mut().find(|d| d.name == "rf.n_trees") {
        d.values.retain(|v| v.as_u64() != Some(1000));
    }
    let schedule = HalvingSchedule::new(n, eta, 1.0);
    println!(
        "rounds {:?} at budgets {:?}",
        schedule.round_sizes(),
        schedule.budgets()
    );
    let result = successive_halving(&space, objective.objective(), &schedule, seed)?;
    for t in &result.trials {
        let score = t.score.map_or_else(
            || format!("failed: {}", t.error.as_deref().unwrap_or("")),
            |s| format!("{s:.3}"),
        );
        println!(
            "round {} budget {:.3} config {:2}  {}  {}",
            t.round,
            t.budget,
            t.config_id,
            score,
            serde_json::to_string(&t.config)?
        );
    }
    println!("best: {}", serde_json::to_string(&result.best.config)?);
    Ok(())
}
