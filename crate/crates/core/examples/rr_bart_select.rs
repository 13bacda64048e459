//! RR-BART on one amputed benchmark replication: impute M times, fit BART to
//! each completed dataset, pool inclusion proportions with Rubin's rules,
//! and compare the selection with the true useful set. The median and
//! pooled-draws variants reuse the same draws.
//!
//! cargo run --release --example rr_bart_select -- [seed] [m] [preset]

use std::time::Instant;

use rrbart::selection::{
    rr_bart_draws, rr_bart_from_draws, rr_median_baseline, rr_pooled_draws_select, SelectionParams, SelectionResult,
};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn score(label: &str, r: &SelectionResult) {
    let useful = r.selected.iter().filter(|&&k| k < 10).count();
    println!(
        "{label:>14}: {} selected, {useful} useful, all_selected={} -> {:?}",
        r.selected.len(),
        r.all_selected,
        r.selected_names()
    );
}

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let m: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let preset: MissingPreset = match args.get(2) {
        Some(s) => s.parse()?,
        None => MissingPreset::Y40Overall60,
    };

    let spec = ScenarioSpec::new(1000, 40, preset, seed);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default())?;
    let mut params = SelectionParams {
        m_imputations: m,
        ..SelectionParams::default()
    };
    params.bart.n_draws = 500;

    let start = Instant::now();
    let draws = rr_bart_draws(&sc.amputed, &params, seed)?;
    println!("{m} imputations + fits: {:.2?}", start.elapsed());

    let rr = rr_bart_from_draws(&draws, params.alpha, params.within_divisor, sc.amputed.n_rows(), seed)?;
    score("rr-bart", &rr);
    score("median", &rr_median_baseline(&draws)?);
    score("pooled-draws", &rr_pooled_draws_select(&draws, params.alpha)?);
    println!();
    print!("{}", rr.report());
    Ok(())
}
