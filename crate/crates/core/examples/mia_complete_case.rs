//! The comparison methods that skip imputation of covariates: MIA splits
//! (missing values routed inside the trees) with the outcome holes either
//! imputed or dropped, and complete-case analysis. Scored against the truth.
//!
//! cargo run --release --example mia_complete_case -- [seed]

use std::time::Instant;

use rrbart::evaluation::selection_metrics;
use rrbart::selection::{Method, OutcomeMode, Selector};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn main() -> rrbart::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let sc = simulate_scenario(
        &ScenarioSpec::new(1000, 40, MissingPreset::Y40Overall60, seed),
        &GeneratorConfig::default(),
    )?;
    let dm = &sc.amputed;
    println!("{} rows, {} complete", dm.n_rows(), dm.complete_rows().len());

    let truth: Vec<usize> = (0..10).collect();
    let mut selectors = Vec::new();
    for method in [Method::MiaBart, Method::MiaXgb] {
        for mode in [OutcomeMode::ImputeY, OutcomeMode::ExcludeY] {
            selectors.push(Selector {
                outcome_mode: mode,
                ..Selector::new(method)
            });
        }
    }
    selectors.push(Selector::new(Method::CompleteCaseBart));
    selectors.push(Selector::new(Method::CompleteCaseXgb));

    for mut s in selectors {
        s.params.n_perm = 50;
        s.params.bart.n_draws = 300;
        let start = Instant::now();
        match s.run(dm, seed) {
            Ok(res) => {
                let m = selection_metrics(&res.selected, &truth, dm.n_predictors())?;
                println!(
                    "{:>22}: {:>2} selected  precision {}  recall {}  F1 {:.2}  ({:.1?})",
                    s.label(),
                    res.selected.len(),
                    m.precision.map_or("  - ".into(), |p| format!("{p:.2}")),
                    m.recall.map_or("  - ".into(), |r| format!("{r:.2}")),
                    m.f1,
                    start.elapsed()
                );
            }
            Err(e) => println!("{:>22}: {e}", s.label()),
        }
    }
    Ok(())
}
