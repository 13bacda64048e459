//! Recursive feature elimination with gradient boosted trees on a fully
//! observed replication: the cross-validated loss along the elimination
//! path and the feature set it settles on.
//!
//! cargo run --release --example rfe_gbt -- [seed] [noise]

use std::time::Instant;

use rrbart::sim::{generate_with, GeneratorConfig};
use rrbart::trees::{rfe_select, RfeParams};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(4);
    let noise: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);

    let data = generate_with(1000, noise, &GeneratorConfig::default(), seed)?.data;
    let start = Instant::now();
    let res = rfe_select(&data, data.outcome_index(), &RfeParams::default(), seed)?;
    println!("{} steps in {:.2?}", res.steps.len(), start.elapsed());
    for s in &res.steps {
        let bar = "#".repeat(((s.cv_loss - 0.15).max(0.0) * 400.0) as usize);
        println!(
            "{:>3} features  loss {:.4}  rounds {:>3} {bar}",
            s.features.len(),
            s.cv_loss,
            s.rounds
        );
    }
    let names: Vec<&str> = res
        .selected
        .iter()
        .map(|&c| data.column_meta(c).name.as_str())
        .collect();
    println!("selected: {names:?}");
    Ok(())
}
