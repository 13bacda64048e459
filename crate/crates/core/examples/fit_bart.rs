//! Fit probit BART to a fully observed benchmark replication and print the
//! posterior mean inclusion proportions with acceptance rates.
//!
//! cargo run --release --example fit_bart -- [n] [n_noise] [seed]

use std::time::Instant;

use rrbart::bart::{fit_bart_probit, BartParams};
use rrbart::sim::{generate_with, GeneratorConfig};

fn main() -> rrbart::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let n_noise: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let sim = generate_with(n, n_noise, &GeneratorConfig::default(), seed)?;
    let dm = &sim.data;
    let params = BartParams::selection();
    let start = Instant::now();
    let post = fit_bart_probit(dm, dm.outcome_index(), &params, seed)?;
    println!(
        "{} trees, {} draws after {} burn-in: {:.2?}",
        params.n_trees,
        params.n_draws,
        params.burn_in,
        start.elapsed()
    );
    let a = &post.acceptance;
    println!(
        "acceptance grow {:.3} prune {:.3} change {:.3}; fallback draws {}",
        a.grow.rate(),
        a.prune.rate(),
        a.change.rate(),
        post.fallback_draws()
    );
    let mut vip: Vec<(String, f64)> = post.predictor_names.iter().cloned().zip(post.mean_vip()).collect();
    vip.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("uniform share 1/K = {:.4}", 1.0 / vip.len() as f64);
    for (name, v) in vip.iter().take(15) {
        println!("{name:>8} {v:.4}");
    }
    Ok(())
}
