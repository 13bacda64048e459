//! Bootstrap imputation: resample rows B times, impute each resample once,
//! run the base selector on every completed dataset, then keep predictors
//! chosen in at least a share `pi` of them. One run serves every threshold.
//!
//! cargo run --release --example bi_select -- [bart|xgb] [b] [seed]

use std::time::Instant;

use rrbart::selection::{bi_run_from_data, Engine, SelectionParams};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let engine = match args.first().map(String::as_str) {
        Some("bart") => Engine::Bart,
        _ => Engine::Gbt,
    };
    let b: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);

    let sc = simulate_scenario(
        &ScenarioSpec::new(1000, 40, MissingPreset::Y40Overall60, seed),
        &GeneratorConfig::default(),
    )?;
    let mut params = SelectionParams {
        b_bootstrap: b,
        n_perm: 20,
        ..SelectionParams::default()
    };
    params.bart.n_draws = 200;

    let start = Instant::now();
    let run = bi_run_from_data(&sc.amputed, engine, &params, seed)?;
    println!("{engine:?}: {b} bootstrap datasets in {:.2?}", start.elapsed());

    let freq = run.frequencies();
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[b].total_cmp(&freq[a]));
    for &k in order.iter().take(15) {
        println!("  {:>4} {:.2}", run.predictor_names[k], freq[k]);
    }
    println!();
    for step in 1..=10 {
        let pi = step as f64 / 10.0;
        let res = run.threshold(pi)?;
        let useful = res.selected.iter().filter(|&&k| k < 10).count();
        println!("pi = {pi:.1}: {:>2} selected, {useful} useful", res.selected.len());
    }
    Ok(())
}
