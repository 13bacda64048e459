//! Split-half predictive check of a selection: select on one stratified
//! half, impute both halves once, fit a predictive model on the selected
//! predictors and score the held-out rows with an observed outcome. Also
//! prints a calibration table from one held-out split.
//!
//! cargo run --release --example cv_auc -- [method] [repeats] [seed]

use rrbart::evaluation::{cv_auc, holdout_calibration, PredictParams};
use rrbart::selection::{Method, Selector};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let method: Method = match args.first() {
        Some(s) => s.parse()?,
        None => Method::RrBart,
    };
    let repeats: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);

    let sc = simulate_scenario(
        &ScenarioSpec::new(1000, 20, MissingPreset::Y20Overall40, seed),
        &GeneratorConfig::default(),
    )?;
    let mut selector = Selector::new(method);
    if matches!(method, Method::BiBart | Method::BiXgb) {
        selector = selector.with_pi(0.3);
    }
    selector.params.m_imputations = 5;
    selector.params.b_bootstrap = 10;
    selector.params.n_perm = 30;
    selector.params.bart.n_draws = 300;
    let predict = PredictParams::default();

    let dist = cv_auc(&sc.amputed, &selector, &predict, repeats, seed)?;
    for (r, (auc, k)) in dist.values.iter().zip(&dist.n_selected).enumerate() {
        println!("repeat {r}: AUC {auc:.3} with {k} predictors");
    }
    println!(
        "{}: mean {:.3}, 95% range [{:.3}, {:.3}], {} empty",
        selector.label(),
        dist.mean,
        dist.lower,
        dist.upper,
        dist.empty_count()
    );

    let (sel, bins) = holdout_calibration(&sc.amputed, &selector, &predict, 10, seed)?;
    println!("\ncalibration on {:?}", sel.selected_names());
    println!("{:>10} {:>10} {:>6}", "predicted", "observed", "rows");
    for b in &bins {
        println!("{:>10.3} {:>10.3} {:>6}", b.mean_predicted, b.observed_rate, b.count);
    }
    Ok(())
}
