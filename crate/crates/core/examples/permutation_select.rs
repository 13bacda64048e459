//! BART permutation selection on fully observed benchmark data: refit on
//! permuted outcomes to build a null for every predictor's inclusion
//! proportion and keep predictors that beat their own null quantile.
//!
//! cargo run --release --example permutation_select -- [seed] [n_perm]

use std::time::Instant;

use rrbart::selection::{select_single, Engine, SelectionParams};
use rrbart::sim::{generate_with, GeneratorConfig};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let n_perm: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);

    let sim = generate_with(1000, 40, &GeneratorConfig::default(), seed)?;
    let mut params = SelectionParams {
        n_perm,
        ..SelectionParams::default()
    };
    params.bart.n_draws = 500;
    let y = sim.data.column(sim.data.outcome_index());
    println!("event rate {:.3}", y.iter().sum::<f64>() / y.len() as f64);

    let start = Instant::now();
    let res = select_single(&sim.data, Engine::Bart, false, &params, seed)?;
    println!("{n_perm} permutations: {:.2?}", start.elapsed());
    let useful = res.selected.iter().filter(|&&k| k < 10).count();
    println!(
        "selected {} ({useful} useful): {:?}",
        res.selected.len(),
        res.selected_names()
    );
    Ok(())
}
