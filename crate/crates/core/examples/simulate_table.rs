//! A small Monte Carlo comparison through the same code path as
//! `rrbart simulate`: replications of one scenario, several methods per
//! replication on matched data, then mean metrics with Monte Carlo SEs.
//!
//! cargo run --release --example simulate_table -- [replications] [seed]

use rrbart::run::{simulate, MethodConfig, RunConfig, ScenarioConfig};
use rrbart::selection::Method;
use rrbart::sim::MissingPreset;

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut cfg = RunConfig {
        seed: Some(seed),
        replications: Some(reps),
        scenario: ScenarioConfig {
            n: 650,
            n_noise: 20,
            preset: MissingPreset::Y40Overall60,
            grid: false,
        },
        methods: vec![
            MethodConfig::default(),
            MethodConfig {
                method: Method::BiXgb,
                pi: vec![0.1, 0.3, 0.5],
                ..MethodConfig::default()
            },
            MethodConfig {
                method: Method::CompleteCaseBart,
                ..MethodConfig::default()
            },
        ],
        ..RunConfig::default()
    };
    cfg.selection.m_imputations = 5;
    cfg.selection.b_bootstrap = 10;
    cfg.selection.n_perm = 30;
    cfg.selection.bart.n_draws = 300;

    let out = simulate(&cfg, true)?;
    println!(
        "{:>22} {:>6} {:>14} {:>14} {:>14} {:>14}",
        "method", "failed", "AUC", "precision", "recall", "F1"
    );
    let cell = |m: Option<f64>, se: Option<f64>| match (m, se) {
        (Some(m), Some(se)) => format!("{m:.2} ({se:.2})"),
        (Some(m), None) => format!("{m:.2}"),
        _ => "-".into(),
    };
    for row in &out.metrics {
        println!(
            "{:>22} {:>6} {:>14} {:>14} {:>14} {:>14}",
            row.method,
            row.failed,
            cell(row.auc_mean, row.auc_se),
            cell(row.precision_mean, row.precision_se),
            cell(row.recall_mean, row.recall_se),
            cell(row.f1_mean, row.f1_se),
        );
    }
    Ok(())
}
