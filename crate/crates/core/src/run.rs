//! Batch jobs behind the command-line tool: resolved run configuration,
//! manifests, and the generate, ampute, impute, select, simulate and
//! evaluate commands.
//!
//! Every random stream hangs off the master seed through fixed tags, so a
//! manifest is enough to replay a run and the worker count never changes
//! the numbers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{format_schema, load_csv, load_schema, write_csv, DataMatrix};
use crate::error::{Error, Result};
use crate::evaluation::{
    cv_auc_with, holdout_calibration, selection_metrics, write_calibration_csv, write_metric_table, write_rows,
    MetricReport, MetricRow, PowerRow, PredictParams,
};
use crate::impute::multiple_impute;
use crate::rng::{derive_path, derive_seed, tag_of};
use crate::selection::{
    bi_run_from_data, rr_bart_draws, rr_bart_from_draws, rr_median_baseline, rr_pooled_draws_select, Diagnostics,
    Engine, Method, OutcomeMode, SelectionParams, SelectionResult, Selector, VipDraws,
};
use crate::sim::{
    ampute, preset_patterns, scenario_presets, simulate_scenario, GeneratorConfig, MissingPreset, ScenarioData,
    ScenarioSpec, N_USEFUL,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which simulated scenarios a command works on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub n_noise: usize,
    pub preset: MissingPreset,
    /// Use the full preset grid instead of the single cell above.
    pub grid: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            n_noise: 40,
            preset: MissingPreset::Y40Overall60,
            grid: false,
        }
    }
}

impl ScenarioConfig {
    /// Scenario cells with placeholder seeds; replications derive their own.
    pub fn specs(&self) -> Result<Vec<ScenarioSpec>> {
        let specs = if self.grid {
            scenario_presets(0)
        } else {
            vec![ScenarioSpec::new(self.n, self.n_noise, self.preset, 0)]
        };
        for s in &specs {
            s.validate()?;
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub method: Method,
    /// Thresholds for the bootstrap-imputation methods; one output row each.
    pub pi: Vec<f64>,
    pub outcome_mode: OutcomeMode,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            method: Method::RrBart,
            pi: Vec::new(),
            outcome_mode: OutcomeMode::ImputeY,
        }
    }
}

/// Fully resolved settings of one run. Serialized into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; required.
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
    /// Data CSV for ampute, impute, select and evaluate. Without it those
    /// commands draw the first replication of the configured scenario.
    pub input: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub generator: GeneratorConfig,
    pub methods: Vec<MethodConfig>,
    pub selection: SelectionParams,
    pub predict: PredictParams,
    /// Replications per scenario; defaults to 1 for generate and ampute, 50
    /// for simulate.
    pub replications: Option<usize>,
    /// Cross-validation repeats for evaluate.
    pub repeats: usize,
    /// Cross-validation repeats per replication in simulate; 0 skips AUC.
    pub cv_repeats: usize,
    /// Calibration bins for evaluate.
    pub bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            workers: 0,
            out: PathBuf::from("out"),
            input: None,
            schema: None,
            scenario: ScenarioConfig::default(),
            generator: GeneratorConfig::default(),
            methods: vec![MethodConfig::default()],
            selection: SelectionParams::default(),
            predict: PredictParams::default(),
            replications: None,
            repeats: 100,
            cv_repeats: 1,
            bins: 10,
        }
    }
}

impl RunConfig {
    pub fn master_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a master seed is required (--seed or `seed` in the config)".into()))
    }

    /// Expands the method list into runnable selectors, one per `pi`.
    pub fn selectors(&self) -> Result<Vec<Selector>> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        let mut out = Vec::new();
        for mc in &self.methods {
            let base = Selector {
                method: mc.method,
                pi: None,
                outcome_mode: mc.outcome_mode,
                params: self.selection.clone(),
            };
            match mc.method {
                Method::BiBart | Method::BiXgb => {
                    if mc.pi.is_empty() {
                        return Err(Error::Config(format!("method {} requires --pi", mc.method)));
                    }
                    for &pi in &mc.pi {
                        let s = base.clone().with_pi(pi);
                        s.validate()?;
                        out.push(s);
                    }
                }
                _ => {
                    base.validate()?;
                    out.push(base);
                }
            }
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Runtime(format!("cannot serialize config: {e}")))
    }
}

/// Reads a run config, or the config echoed inside a manifest.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
    if value.contains_key("command") && value.contains_key("config") {
        let m: RunManifest = toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        Ok(m.config)
    } else {
        toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub scenario: String,
    pub replication: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// What a run did: the resolved config, the seed of every replication and
/// the time spent per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seeds: Vec<SeedRecord>,
    pub stages: Vec<StageTime>,
    pub config: RunConfig,
}

impl RunManifest {
    fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            seeds: Vec::new(),
            stages: Vec::new(),
            config: config.clone(),
        }
    }

    fn stage(&mut self, stage: impl Into<String>, start: Instant) {
        self.stages.push(StageTime {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let path = dir.as_ref().join("manifest.toml");
        let text = toml::to_string(self).map_err(|e| Error::Runtime(format!("cannot serialize manifest: {e}")))?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Seed of replication `r` of a scenario.
pub fn replication_seed(master: u64, scenario: &str, r: usize) -> u64 {
    derive_path(master, &[tag_of(scenario), r as u64])
}

/// File-name form of a selector label, e.g. `bi-bart_pi0.3`.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            '(' => Some('_'),
            ')' | '=' => None,
            c => Some(c),
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs `f` on a pool of `workers` threads (all cores when 0).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn input_data(cfg: &RunConfig) -> Result<Option<DataMatrix>> {
    match (&cfg.input, &cfg.schema) {
        (Some(input), Some(schema)) => Ok(Some(load_csv(input, &load_schema(schema)?)?)),
        (Some(_), None) => Err(Error::Config("--input needs a --schema file".into())),
        (None, _) => Ok(None),
    }
}

/// First replication of the configured scenario.
fn default_scenario(cfg: &RunConfig, master: u64) -> Result<(ScenarioData, SeedRecord)> {
    let specs = cfg.scenario.specs()?;
    let mut spec = specs[0].clone();
    let label = spec.label();
    spec.seed = replication_seed(master, &label, 0);
    let record = SeedRecord {
        scenario: label,
        replication: 0,
        seed: spec.seed,
    };
    Ok((simulate_scenario(&spec, &cfg.generator)?, record))
}

/// Selectors that share their expensive part: RR variants share VIP draws,
/// bootstrap selectors of one engine share the per-dataset selections.
#[derive(Debug, Clone)]
pub struct SelectorGroup {
    pub selectors: Vec<Selector>,
}

impl SelectorGroup {
    fn key(method: Method) -> &'static str {
        match method {
            Method::RrBart | Method::RrMedian | Method::RrPooledDraws => "rr",
            m => m.code(),
        }
    }

    pub fn engine(&self) -> Engine {
        self.selectors[0].method.engine()
    }

    /// Fully observed baselines see the complete data; the rest the amputed.
    pub fn needs_complete_data(&self) -> bool {
        matches!(self.selectors[0].method, Method::Bart | Method::Xgb)
    }

    /// Groups in first-appearance order. MIA selectors with different
    /// outcome modes stay apart.
    pub fn partition(selectors: &[Selector]) -> Vec<SelectorGroup> {
        let mut groups: Vec<SelectorGroup> = Vec::new();
        for s in selectors {
            let key = Self::key(s.method);
            let shared = matches!(key, "rr" | "bi-bart" | "bi-xgb");
            match groups
                .iter_mut()
                .find(|g| shared && Self::key(g.selectors[0].method) == key)
            {
                Some(g) => g.selectors.push(s.clone()),
                None => groups.push(SelectorGroup {
                    selectors: vec![s.clone()],
                }),
            }
        }
        groups
    }

    fn seed(&self, seed: u64) -> u64 {
        let s = &self.selectors[0];
        let mut tag = Self::key(s.method).to_string();
        if matches!(s.method, Method::MiaBart | Method::MiaXgb) && s.outcome_mode == OutcomeMode::ExcludeY {
            tag.push_str("/exclude-y");
        }
        derive_seed(seed, tag_of(&tag))
    }

    /// Runs every member on `dm`. Also returns the VIP draws of an RR group.
    pub fn run(&self, dm: &DataMatrix, seed: u64) -> Result<(Vec<SelectionResult>, Option<VipDraws>)> {
        let seed = self.seed(seed);
        let first = &self.selectors[0];
        let p = &first.params;
        match SelectorGroup::key(first.method) {
            "rr" => {
                let v = rr_bart_draws(dm, p, seed)?;
                let out = self
                    .selectors
                    .iter()
                    .map(|s| {
                        let mut r = match s.method {
                            Method::RrBart => {
                                rr_bart_from_draws(&v, s.params.alpha, s.params.within_divisor, dm.n_rows(), seed)?
                            }
                            Method::RrMedian => rr_median_baseline(&v)?,
                            _ => rr_pooled_draws_select(&v, s.params.alpha)?,
                        };
                        r.seed = seed;
                        r.n_rows = dm.n_rows();
                        Ok(r)
                    })
                    .collect::<Result<_>>()?;
                Ok((out, Some(v)))
            }
            "bi-bart" | "bi-xgb" => {
                let run = bi_run_from_data(dm, first.method.engine(), p, seed)?;
                let out = self
                    .selectors
                    .iter()
                    .map(|s| {
                        s.pi.ok_or_else(|| Error::Config("missing pi".into()))
                            .and_then(|pi| run.threshold(pi))
                    })
                    .collect::<Result<_>>()?;
                Ok((out, None))
            }
            _ => Ok((vec![first.run(dm, seed)?], None)),
        }
    }
}

/// Writes complete data for every scenario and replication.
pub fn cmd_generate(cfg: &RunConfig) -> Result<RunManifest> {
    let master = cfg.master_seed()?;
    let reps = cfg.replications.unwrap_or(1);
    let mut manifest = RunManifest::new("generate", cfg);
    create_dir(&cfg.out)?;
    let start = Instant::now();
    for spec in cfg.scenario.specs()? {
        let label = spec.label();
        let dir = cfg.out.join(&label);
        create_dir(&dir)?;
        for r in 0..reps {
            let seed = replication_seed(master, &label, r);
            let s = ScenarioSpec { seed, ..spec.clone() };
            let data = crate::sim::generate_complete(&s, &cfg.generator)?;
            if r == 0 {
                let schema = dir.join("schema.txt");
                std::fs::write(&schema, format_schema(data.data.columns())).map_err(|e| Error::io(&schema, e))?;
            }
            data.write(dir.join(format!("rep{}.csv", r + 1)))?;
            manifest.seeds.push(SeedRecord {
                scenario: label.clone(),
                replication: r,
                seed,
            });
        }
    }
    manifest.stage("generate", start);
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

/// Amputes the input data with the configured preset, or generates and
/// amputes the configured scenarios.
pub fn cmd_ampute(cfg: &RunConfig) -> Result<RunManifest> {
    let master = cfg.master_seed()?;
    let mut manifest = RunManifest::new("ampute", cfg);
    create_dir(&cfg.out)?;
    let start = Instant::now();
    if let Some(dm) = input_data(cfg)? {
        let patterns = preset_patterns(&dm, cfg.scenario.preset, &cfg.generator)?;
        let seed = derive_seed(master, 0xa3);
        write_csv(&ampute(&dm, &patterns, seed)?, cfg.out.join("amputed.csv"))?;
        manifest.seeds.push(SeedRecord {
            scenario: "input".into(),
            replication: 0,
            seed,
        });
    } else {
        let reps = cfg.replications.unwrap_or(1);
        for spec in cfg.scenario.specs()? {
            let label = spec.label();
            let dir = cfg.out.join(&label);
            create_dir(&dir)?;
            for r in 0..reps {
                let seed = replication_seed(master, &label, r);
                let sc = simulate_scenario(&ScenarioSpec { seed, ..spec.clone() }, &cfg.generator)?;
                if r == 0 {
                    let schema = dir.join("schema.txt");
                    std::fs::write(&schema, format_schema(sc.amputed.columns())).map_err(|e| Error::io(&schema, e))?;
                }
                sc.complete.write(dir.join(format!("rep{}_complete.csv", r + 1)))?;
                write_csv(&sc.amputed, dir.join(format!("rep{}_amputed.csv", r + 1)))?;
                manifest.seeds.push(SeedRecord {
                    scenario: label.clone(),
                    replication: r,
                    seed,
                });
            }
        }
    }
    manifest.stage("ampute", start);
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

/// Writes `m_imputations` completed copies of the data.
pub fn cmd_impute(cfg: &RunConfig) -> Result<RunManifest> {
    let master = cfg.master_seed()?;
    let mut manifest = RunManifest::new("impute", cfg);
    create_dir(&cfg.out)?;
    let dm = match input_data(cfg)? {
        Some(dm) => dm,
        None => {
            let (sc, rec) = default_scenario(cfg, master)?;
            manifest.seeds.push(rec);
            sc.amputed
        }
    };
    let start = Instant::now();
    let seed = derive_seed(master, 1);
    let sets = with_workers(cfg.workers, || {
        multiple_impute(&dm, cfg.selection.m_imputations, &cfg.selection.impute, seed)
    })??;
    for (m, set) in sets.iter().enumerate() {
        set.write(cfg.out.join(format!("imputation_{}.csv", m + 1)))?;
    }
    manifest.stage("impute", start);
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

/// Runs the configured selectors and writes one report each, plus the VIP
/// draws of RR runs.
pub fn cmd_select(cfg: &RunConfig) -> Result<RunManifest> {
    let master = cfg.master_seed()?;
    let selectors = cfg.selectors()?;
    let mut manifest = RunManifest::new("select", cfg);
    create_dir(&cfg.out)?;
    let (amputed, complete) = match input_data(cfg)? {
        Some(dm) => (dm.clone(), dm),
        None => {
            let (sc, rec) = default_scenario(cfg, master)?;
            manifest.seeds.push(rec);
            (sc.amputed, sc.complete.data)
        }
    };
    for group in SelectorGroup::partition(&selectors) {
        let start = Instant::now();
        let dm = if group.needs_complete_data() {
            &complete
        } else {
            &amputed
        };
        let (results, draws) = with_workers(cfg.workers, || group.run(dm, master))??;
        for (s, r) in group.selectors.iter().zip(&results) {
            let path = cfg.out.join(format!("report_{}.txt", file_stem(&s.label())));
            std::fs::write(&path, r.report()).map_err(|e| Error::io(&path, e))?;
        }
        if let Some(v) = draws {
            v.write_csv(cfg.out.join("vip_draws.csv"))?;
        }
        let labels: Vec<String> = group.selectors.iter().map(Selector::label).collect();
        manifest.stage(format!("select {}", labels.join(" ")), start);
    }
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

/// One method's outcome on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub scenario: String,
    pub replication: usize,
    pub seed: u64,
    pub method: String,
    pub status: String,
    pub error: String,
    pub n_selected: Option<usize>,
    pub selected: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub type_i: Option<f64>,
    pub auc: Option<f64>,
    pub all_selected: Option<bool>,
    /// RR-BART only: smallest mean VIP and whether the guard fired.
    pub min_mean_vip: Option<f64>,
    pub guard_fired: Option<bool>,
    /// Selection wall-clock of the method group that produced this row.
    pub seconds: f64,
    /// Wall-clock of the group's cross-validated AUC.
    pub cv_seconds: f64,
}

impl ReplicationRow {
    fn ok(&self) -> bool {
        self.status != "failed"
    }

    fn report(&self) -> Option<MetricReport> {
        self.f1.filter(|_| self.ok()).map(|f1| MetricReport {
            precision: self.precision,
            recall: self.recall,
            f1,
            type_i: self.type_i,
        })
    }
}

fn failed_row(scenario: &str, r: usize, seed: u64, method: String, err: &Error, seconds: f64) -> ReplicationRow {
    ReplicationRow {
        scenario: scenario.into(),
        replication: r,
        seed,
        method,
        status: "failed".into(),
        error: err.to_string(),
        n_selected: None,
        selected: String::new(),
        precision: None,
        recall: None,
        f1: None,
        type_i: None,
        auc: None,
        all_selected: None,
        min_mean_vip: None,
        guard_fired: None,
        seconds,
        cv_seconds: 0.0,
    }
}

/// Runs every selector group on one replication. Failures become rows.
pub fn run_replication(
    sc: &ScenarioData,
    r: usize,
    groups: &[SelectorGroup],
    predict: &PredictParams,
    cv_repeats: usize,
) -> Vec<(ReplicationRow, Option<SelectionResult>)> {
    let label = sc.spec.label();
    let seed = sc.spec.seed;
    let names = sc.amputed.predictor_names();
    let truth: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| sc.complete.useful.contains(n))
        .map(|(k, _)| k)
        .collect();
    let mut out = Vec::new();
    for group in groups {
        let start = Instant::now();
        let dm = if group.needs_complete_data() {
            &sc.complete.data
        } else {
            &sc.amputed
        };
        let run = group.run(dm, seed);
        let seconds = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let aucs: Option<Result<Vec<f64>>> = (cv_repeats > 0 && run.is_ok()).then(|| {
            let dists = cv_auc_with(
                dm,
                group.engine(),
                predict,
                cv_repeats,
                derive_seed(seed, 0xc0),
                |train, s| Ok(group.run(train, s)?.0.into_iter().map(|r| r.selected).collect()),
            )?;
            Ok(dists.iter().map(|d| d.mean).collect())
        });
        let cv_seconds = start.elapsed().as_secs_f64();
        match run {
            Err(e) => {
                for s in &group.selectors {
                    out.push((failed_row(&label, r, seed, s.label(), &e, seconds), None));
                }
            }
            Ok((results, _)) => {
                for (i, (s, res)) in group.selectors.iter().zip(results).enumerate() {
                    let m = selection_metrics(&res.selected, &truth, names.len());
                    let (auc, auc_err) = match &aucs {
                        Some(Ok(a)) => (Some(a[i]), String::new()),
                        Some(Err(e)) => (None, format!("auc: {e}")),
                        None => (None, String::new()),
                    };
                    let (min_mean_vip, guard_fired) = match &res.diagnostics {
                        Diagnostics::Pooled {
                            mean_vip,
                            argmin,
                            pooled,
                            ..
                        } => (Some(mean_vip[*argmin]), Some(pooled.is_empty())),
                        _ => (None, None),
                    };
                    let row = match m {
                        Err(e) => failed_row(&label, r, seed, s.label(), &e, seconds),
                        Ok(m) => ReplicationRow {
                            scenario: label.clone(),
                            replication: r,
                            seed,
                            method: s.label(),
                            status: if auc_err.is_empty() { "ok" } else { "auc-failed" }.into(),
                            error: auc_err,
                            n_selected: Some(res.selected.len()),
                            selected: res.selected_names().join(";"),
                            precision: m.precision,
                            recall: m.recall,
                            f1: Some(m.f1),
                            type_i: m.type_i,
                            auc,
                            all_selected: Some(res.all_selected),
                            min_mean_vip,
                            guard_fired,
                            seconds,
                            cv_seconds,
                        },
                    };
                    out.push((row, Some(res)));
                }
            }
        }
    }
    out
}

/// Output of [`simulate`]: per-replication rows, aggregated metrics and
/// per-predictor power.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub rows: Vec<ReplicationRow>,
    pub metrics: Vec<MetricRow>,
    pub power: Vec<(String, String, PowerRow)>,
    pub seeds: Vec<SeedRecord>,
}

#[derive(Serialize)]
struct PowerCsvRow<'a> {
    scenario: &'a str,
    method: &'a str,
    predictor: &'a str,
    useful: bool,
    frequency: f64,
}

/// Replications of every scenario, each run through every selector.
/// Parallel over replications; results are reduced in a fixed order.
pub fn simulate(cfg: &RunConfig, progress: bool) -> Result<SimulationOutput> {
    let master = cfg.master_seed()?;
    let reps = cfg.replications.unwrap_or(50);
    if reps < 2 {
        return Err(Error::Config("simulate needs at least 2 replications".into()));
    }
    let selectors = cfg.selectors()?;
    let groups = SelectorGroup::partition(&selectors);
    let specs = cfg.scenario.specs()?;
    let tasks: Vec<(ScenarioSpec, usize)> = specs
        .iter()
        .flat_map(|s| {
            (0..reps).map(move |r| {
                let seed = replication_seed(master, &s.label(), r);
                (ScenarioSpec { seed, ..s.clone() }, r)
            })
        })
        .collect();
    let per_task: Vec<Vec<(ReplicationRow, Option<SelectionResult>)>> = with_workers(cfg.workers, || {
        tasks
            .par_iter()
            .map(|(spec, r)| {
                let rows = match simulate_scenario(spec, &cfg.generator) {
                    Ok(sc) => run_replication(&sc, *r, &groups, &cfg.predict, cfg.cv_repeats),
                    Err(e) => selectors
                        .iter()
                        .map(|s| (failed_row(&spec.label(), *r, spec.seed, s.label(), &e, 0.0), None))
                        .collect(),
                };
                if progress {
                    eprintln!("{} replication {} done", spec.label(), r + 1);
                }
                rows
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut power = Vec::new();
    for spec in &specs {
        let label = spec.label();
        for s in &selectors {
            let method = s.label();
            let mine: Vec<&(ReplicationRow, Option<SelectionResult>)> = per_task
                .iter()
                .flatten()
                .filter(|(row, _)| row.scenario == label && row.method == method)
                .collect();
            let reports: Vec<MetricReport> = mine.iter().filter_map(|(row, _)| row.report()).collect();
            let aucs: Vec<f64> = mine
                .iter()
                .filter_map(|(row, _)| row.auc.filter(|_| row.ok()))
                .collect();
            let failed = mine.iter().filter(|(row, _)| !row.ok()).count();
            metrics.push(MetricRow::aggregate(&label, &method, &reports, &aucs, failed));
            let results: Vec<SelectionResult> = mine.iter().filter_map(|(_, res)| res.clone()).collect();
            if results.len() >= 2 {
                let useful: Vec<String> = (1..=N_USEFUL).map(|j| format!("x{j}")).collect();
                let truth: Vec<usize> = results[0]
                    .predictor_names
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| useful.contains(n))
                    .map(|(k, _)| k)
                    .collect();
                for p in crate::evaluation::power_table(&results, &truth)? {
                    power.push((label.clone(), method.clone(), p));
                }
            }
        }
    }
    for task in &per_task {
        rows.extend(task.iter().map(|(row, _)| row.clone()));
    }
    let seeds = tasks
        .iter()
        .map(|(s, r)| SeedRecord {
            scenario: s.label(),
            replication: *r,
            seed: s.seed,
        })
        .collect();
    Ok(SimulationOutput {
        rows,
        metrics,
        power,
        seeds,
    })
}

/// Writes `replications.csv`, `metrics.csv` and `power.csv`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("simulate", cfg);
    create_dir(&cfg.out)?;
    let start = Instant::now();
    let sim = simulate(cfg, true)?;
    manifest.stage("simulate", start);
    write_rows(&sim.rows, cfg.out.join("replications.csv"))?;
    write_metric_table(&sim.metrics, cfg.out.join("metrics.csv"))?;
    let power: Vec<PowerCsvRow> = sim
        .power
        .iter()
        .map(|(s, m, p)| PowerCsvRow {
            scenario: s,
            method: m,
            predictor: &p.predictor,
            useful: p.useful,
            frequency: p.frequency,
        })
        .collect();
    write_rows(&power, cfg.out.join("power.csv"))?;
    manifest.seeds = sim.seeds;
    manifest.write(&cfg.out)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRow {
    pub method: String,
    pub repeats: usize,
    pub auc_mean: f64,
    /// Percentile interval over repeats.
    pub auc_lower: f64,
    pub auc_upper: f64,
    pub empty_selections: usize,
    pub mean_selected: f64,
    pub calibration: String,
}

/// Cross-validated AUC and held-out calibration per selector.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<RunManifest> {
    let master = cfg.master_seed()?;
    let selectors = cfg.selectors()?;
    let mut manifest = RunManifest::new("evaluate", cfg);
    create_dir(&cfg.out)?;
    let (amputed, complete) = match input_data(cfg)? {
        Some(dm) => (dm.clone(), dm),
        None => {
            let (sc, rec) = default_scenario(cfg, master)?;
            manifest.seeds.push(rec);
            (sc.amputed, sc.complete.data)
        }
    };
    let mut summary = Vec::new();
    for group in SelectorGroup::partition(&selectors) {
        let start = Instant::now();
        let dm = if group.needs_complete_data() {
            &complete
        } else {
            &amputed
        };
        let dists = with_workers(cfg.workers, || {
            cv_auc_with(
                dm,
                group.engine(),
                &cfg.predict,
                cfg.repeats,
                derive_seed(master, 0xc0),
                |train, s| Ok(group.run(train, s)?.0.into_iter().map(|r| r.selected).collect()),
            )
        })??;
        for (s, d) in group.selectors.iter().zip(&dists) {
            let stem = file_stem(&s.label());
            d.write_csv(cfg.out.join(format!("cv_auc_{stem}.csv")))?;
            let calib = with_workers(cfg.workers, || {
                holdout_calibration(dm, s, &cfg.predict, cfg.bins, derive_seed(master, 0xca1))
            })?;
            let calibration = match calib {
                Ok((_, bins)) => {
                    write_calibration_csv(&bins, cfg.out.join(format!("calibration_{stem}.csv")))?;
                    format!("calibration_{stem}.csv")
                }
                Err(e) => format!("failed: {e}"),
            };
            summary.push(EvaluateRow {
                method: s.label(),
                repeats: d.repeats(),
                auc_mean: d.mean,
                auc_lower: d.lower,
                auc_upper: d.upper,
                empty_selections: d.empty_count(),
                mean_selected: d.n_selected.iter().sum::<usize>() as f64 / d.repeats() as f64,
                calibration,
            });
        }
        let labels: Vec<String> = group.selectors.iter().map(Selector::label).collect();
        manifest.stage(format!("evaluate {}", labels.join(" ")), start);
    }
    write_rows(&summary, cfg.out.join("evaluate.csv"))?;
    manifest.write(&cfg.out)?;
    Ok(manifest)
}
