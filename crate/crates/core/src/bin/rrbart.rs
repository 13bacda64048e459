use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rrbart::run::{
    cmd_ampute, cmd_evaluate, cmd_generate, cmd_impute, cmd_select, cmd_simulate, load_config, MethodConfig, RunConfig,
};
use rrbart::selection::{Method, OutcomeMode};
use rrbart::sim::MissingPreset;

#[derive(Parser)]
#[command(
    name = "rrbart",
    version,
    about = "Variable selection on incomplete data with pooled BART inclusion proportions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write complete simulated data with a truth sidecar.
    Generate,
    /// Remove values under the configured MAR preset.
    Ampute,
    /// Write M forest imputations of the data.
    Impute,
    /// Run selectors and write their reports.
    Select,
    /// Replicate scenarios and aggregate selection metrics.
    Simulate,
    /// Cross-validated AUC and calibration data.
    Evaluate,
}

#[derive(clap::Args)]
struct Flags {
    /// TOML run config, or a manifest to replay.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Data CSV; needs --schema.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Comma-separated method codes, e.g. rr-bart,bi-bart.
    #[arg(long, global = true, value_delimiter = ',')]
    method: Vec<Method>,
    /// Comma-separated thresholds for bi-bart / bi-xgb.
    #[arg(long, global = true, value_delimiter = ',')]
    pi: Vec<f64>,
    #[arg(long, global = true)]
    outcome_mode: Option<OutcomeModeArg>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    m_imputations: Option<usize>,
    #[arg(long, global = true)]
    b_bootstrap: Option<usize>,
    #[arg(long, global = true)]
    n_perm: Option<usize>,
    /// BART posterior draws kept per fit.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Cross-validation repeats (evaluate).
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Cross-validation repeats per replication (simulate); 0 skips AUC.
    #[arg(long, global = true)]
    cv_repeats: Option<usize>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    noise: Option<usize>,
    #[arg(long, global = true)]
    preset: Option<MissingPreset>,
    /// Use the whole scenario grid.
    #[arg(long, global = true)]
    grid: bool,
    #[arg(long, global = true)]
    bins: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OutcomeModeArg {
    ImputeY,
    ExcludeY,
}

fn resolve(f: &Flags) -> rrbart::Result<RunConfig> {
    let mut cfg = match &f.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag.clone() {
                $field = v;
            }
        };
    }
    if f.seed.is_some() {
        cfg.seed = f.seed;
    }
    set!(f.workers, cfg.workers);
    set!(f.out, cfg.out);
    if f.input.is_some() {
        cfg.input = f.input.clone();
    }
    if f.schema.is_some() {
        cfg.schema = f.schema.clone();
    }
    if f.replications.is_some() {
        cfg.replications = f.replications;
    }
    set!(f.alpha, cfg.selection.alpha);
    set!(f.m_imputations, cfg.selection.m_imputations);
    set!(f.b_bootstrap, cfg.selection.b_bootstrap);
    set!(f.n_perm, cfg.selection.n_perm);
    set!(f.draws, cfg.selection.bart.n_draws);
    set!(f.repeats, cfg.repeats);
    set!(f.cv_repeats, cfg.cv_repeats);
    set!(f.n, cfg.scenario.n);
    set!(f.noise, cfg.scenario.n_noise);
    set!(f.preset, cfg.scenario.preset);
    set!(f.bins, cfg.bins);
    if f.grid {
        cfg.scenario.grid = true;
    }
    let mode = f.outcome_mode.map(|m| match m {
        OutcomeModeArg::ImputeY => OutcomeMode::ImputeY,
        OutcomeModeArg::ExcludeY => OutcomeMode::ExcludeY,
    });
    if !f.method.is_empty() {
        cfg.methods = f
            .method
            .iter()
            .map(|&method| MethodConfig {
                method,
                pi: Vec::new(),
                outcome_mode: OutcomeMode::ImputeY,
            })
            .collect();
    }
    for mc in cfg.methods.iter_mut() {
        if !f.pi.is_empty() && matches!(mc.method, Method::BiBart | Method::BiXgb) {
            mc.pi = f.pi.clone();
        }
        if let Some(m) = mode {
            mc.outcome_mode = m;
        }
    }
    cfg.master_seed()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli.flags).and_then(|cfg| match cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Ampute => cmd_ampute(&cfg),
        Command::Impute => cmd_impute(&cfg),
        Command::Select => cmd_select(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Evaluate => cmd_evaluate(&cfg),
    });
    match result {
        Ok(m) => {
            println!(
                "{} done; manifest in {}",
                m.command,
                m.config.out.join("manifest.toml").display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
