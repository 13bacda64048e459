//! Multiply impute an amputed benchmark replication with chained random
//! forests and report accuracy on the removed cells.
//!
//! cargo run --release --example impute_multiple -- [m] [seed]

use std::time::Instant;

use rrbart::impute::{multiple_impute, ImputeParams};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let spec = ScenarioSpec::new(1000, 40, MissingPreset::Y40Overall60, seed);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default())?;
    let start = Instant::now();
    let sets = multiple_impute(&sc.amputed, m, &ImputeParams::default(), seed)?;
    println!("{m} imputations in {:.2?}", start.elapsed());

    let truth = &sc.complete.data;
    for (i, set) in sets.iter().enumerate() {
        let mut line = format!(
            "imputation {i}: {} iterations (kept {})",
            set.iterations, set.used_iteration
        );
        for p in &sc.patterns {
            let j = p.target;
            let holes: Vec<usize> = (0..truth.n_rows()).filter(|&r| !sc.amputed.is_observed(r, j)).collect();
            let err = holes
                .iter()
                .map(|&r| (set.completed.column(j)[r] - truth.column(j)[r]).powi(2))
                .sum::<f64>()
                / holes.len() as f64;
            let label = if j == truth.outcome_index() {
                "y misclass"
            } else {
                "rmse"
            };
            let value = if j == truth.outcome_index() { err } else { err.sqrt() };
            line.push_str(&format!("  {} {label} {value:.3}", truth.column_meta(j).name));
        }
        println!("{line}");
    }
    Ok(())
}
