//! Generate one benchmark replication, ampute it, and print the diagnostics
//! the generator is calibrated against.
//!
//! cargo run --release --example simulate_scenario -- [n] [preset] [seed]

use rrbart::data::{mar_strength_auc, missingness_summary, pearson_correlations};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(5000);
    let preset: MissingPreset = match args.get(1) {
        Some(s) => s.parse()?,
        None => MissingPreset::Y40Overall60,
    };
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(7);

    let spec = ScenarioSpec::new(n, 40, preset, seed);
    let cfg = GeneratorConfig::default();
    let sc = simulate_scenario(&spec, &cfg)?;
    let full = &sc.complete.data;

    let y = full.column(full.outcome_index());
    println!("scenario {}", spec.label());
    println!("event rate {:.3}", y.iter().sum::<f64>() / n as f64);

    let corr = pearson_correlations(full);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in 2..10 {
        for b in (a + 1)..10 {
            let r = corr.get(a, b).unwrap_or(0.0);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    println!("x3..x10 correlation range [{lo:.3}, {hi:.3}]");

    let summary = missingness_summary(&sc.amputed);
    println!("incomplete rows {:.3}", summary.incomplete_rows);
    let drivers: Vec<usize> = (0..6).collect();
    for p in &sc.patterns {
        let name = &full.column_meta(p.target).name;
        let auc = mar_strength_auc(&sc.amputed, p.target, &drivers)?;
        println!(
            "{name:>4}: target {:.3}  realized {:.3}  MAR AUC {auc:.3}",
            p.proportion, summary.per_column[p.target]
        );
    }
    Ok(())
}
