//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Scale comes from `RRBART_ACCEPTANCE`: `smoke` (default) shrinks
//! replications and MCMC/bootstrap sizes so the whole report runs in
//! minutes on one core; `desk` uses 50/25 replications, M = 10, B = 50,
//! P = 500. Criteria 1-7 and 9 are reported, and only fail the test when
//! `RRBART_ACCEPTANCE_STRICT=1`. Criterion 8 always asserts.
//!
//! `RRBART_ACCEPTANCE_GENERATOR=high-prevalence` swaps in x7/x8 mean
//! intercepts of 2 and 1 (event rate near 25% instead of 6%) for a
//! sensitivity comparison; the default generator is the reference.
//!
//! The report is also written to `$CARGO_TARGET_TMPDIR/acceptance.txt`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use rrbart::bart::{fit_bart_probit, BartParams};
use rrbart::evaluation::{auc, PredictParams};
use rrbart::impute::{multiple_impute, ImputeParams};
use rrbart::run::{simulate, MethodConfig, ReplicationRow, RunConfig, ScenarioConfig, SimulationOutput};
use rrbart::selection::{argmin_mean_vip, pool_rubins, BiRun, Engine, Method, SelectionParams, VipDraws};
use rrbart::sim::{generate_with, simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};
use rrbart::trees::{route, ForestParams, MissingDirection, Side, SplitRule};

const MASTER: u64 = 20_240_611;
const PIS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

struct Scale {
    name: &'static str,
    /// Criteria 1, 2, 7 (50 at desk scale).
    reps: usize,
    /// Criterion 6, matched RR-BART / BI-XGB replications (50).
    reps_power: usize,
    /// Criterion 3 (50).
    reps_low: usize,
    /// Criterion 4 (25).
    reps_sweep: usize,
    /// Criterion 5 (25).
    reps_extreme: usize,
    selection: SelectionParams,
    predict: PredictParams,
    generator: GeneratorConfig,
}

impl Scale {
    fn from_env() -> Self {
        let mut scale = match std::env::var("RRBART_ACCEPTANCE").as_deref() {
            Ok("desk") => Self::desk(),
            Ok("smoke") | Err(_) => Self::smoke(),
            Ok(other) => panic!("RRBART_ACCEPTANCE={other}: expected smoke or desk"),
        };
        match std::env::var("RRBART_ACCEPTANCE_GENERATOR").as_deref() {
            Ok("high-prevalence") => {
                scale.generator.intercepts = [2.0, 1.0, 0.0, 0.0];
                scale.name = match scale.name {
                    "desk" => "desk+high-prevalence",
                    _ => "smoke+high-prevalence",
                };
            }
            Ok("default") | Err(_) => {}
            Ok(other) => panic!("RRBART_ACCEPTANCE_GENERATOR={other}: expected default or high-prevalence"),
        }
        scale
    }

    fn desk() -> Self {
        let mut selection = SelectionParams {
            m_imputations: 10,
            b_bootstrap: 50,
            n_perm: 100,
            ..SelectionParams::default()
        };
        selection.bart.n_draws = 500;
        Self {
            name: "desk",
            reps: 50,
            reps_power: 50,
            reps_low: 50,
            reps_sweep: 25,
            reps_extreme: 25,
            selection,
            predict: PredictParams::default(),
            generator: GeneratorConfig::default(),
        }
    }

    fn smoke() -> Self {
        let light = ImputeParams {
            max_iter: 5,
            forest: ForestParams {
                n_trees: 50,
                ..ForestParams::default()
            },
        };
        let mut selection = SelectionParams {
            m_imputations: 5,
            b_bootstrap: 10,
            n_perm: 20,
            impute: light.clone(),
            ..SelectionParams::default()
        };
        selection.bart.n_draws = 200;
        selection.bart.burn_in = 100;
        selection.rfe.gbt.rounds = 100;
        let mut predict = PredictParams {
            impute: light,
            ..PredictParams::default()
        };
        predict.bart.n_draws = 200;
        predict.bart.burn_in = 100;
        Self {
            name: "smoke",
            reps: 4,
            reps_power: 2,
            reps_low: 3,
            reps_sweep: 2,
            reps_extreme: 3,
            selection,
            predict,
            generator: GeneratorConfig::default(),
        }
    }

    fn config(
        &self,
        n_noise: usize,
        preset: MissingPreset,
        reps: usize,
        cv: usize,
        methods: Vec<MethodConfig>,
    ) -> RunConfig {
        RunConfig {
            seed: Some(MASTER),
            workers: 0,
            scenario: ScenarioConfig {
                n: 1000,
                n_noise,
                preset,
                grid: false,
            },
            generator: self.generator.clone(),
            methods,
            selection: self.selection.clone(),
            predict: self.predict.clone(),
            replications: Some(reps),
            cv_repeats: cv,
            ..RunConfig::default()
        }
    }
}

fn method(m: Method) -> MethodConfig {
    MethodConfig {
        method: m,
        ..MethodConfig::default()
    }
}

fn sweep(m: Method) -> MethodConfig {
    MethodConfig {
        method: m,
        pi: PIS.to_vec(),
        ..MethodConfig::default()
    }
}

struct Report {
    scale: &'static str,
    lines: Vec<String>,
    failed: Vec<String>,
}

impl Report {
    fn emit(&mut self, line: String) {
        // straight to the handle so the line shows without --nocapture
        let _ = writeln!(std::io::stderr(), "{line}");
        self.lines.push(line);
    }

    fn check(&mut self, id: &str, pass: bool, detail: impl AsRef<str>) {
        let tag = if pass { "PASS" } else { "FAIL" };
        self.emit(format!("acceptance {id} [{}] {tag}: {}", self.scale, detail.as_ref()));
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    fn note(&mut self, text: impl AsRef<str>) {
        self.emit(format!("    {}", text.as_ref()));
    }
}

fn by_method(out: &SimulationOutput) -> BTreeMap<String, Vec<&ReplicationRow>> {
    let mut map: BTreeMap<String, Vec<&ReplicationRow>> = BTreeMap::new();
    for row in &out.rows {
        map.entry(row.method.clone()).or_default().push(row);
    }
    map
}

fn metric<'a>(out: &'a SimulationOutput, label: &str) -> &'a rrbart::evaluation::MetricRow {
    out.metrics
        .iter()
        .find(|m| m.method == label)
        .unwrap_or_else(|| panic!("no metric row for {label}"))
}

fn within(x: Option<f64>, target: f64, tol: f64) -> bool {
    x.is_some_and(|x| (x - target).abs() <= tol + 1e-12)
}

fn show(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |x| format!("{x:.3}"))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn selection_frequency(rows: &[&ReplicationRow], name: &str) -> f64 {
    let ok: Vec<_> = rows.iter().filter(|r| r.status != "failed").collect();
    let hits = ok.iter().filter(|r| r.selected.split(';').any(|s| s == name)).count();
    hits as f64 / ok.len() as f64
}

fn timed<T>(r: &mut Report, what: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    r.note(format!("{what}: {:.1?}", start.elapsed()));
    out
}

#[test]
fn acceptance_report() {
    let scale = Scale::from_env();
    let strict = std::env::var("RRBART_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut r = Report {
        scale: scale.name,
        lines: Vec::new(),
        failed: Vec::new(),
    };
    r.emit(format!(
        "acceptance scale {}: reps {}/{}/{}/{}/{}, M = {}, B = {}, P = {}, n_perm = {}",
        scale.name,
        scale.reps,
        scale.reps_power,
        scale.reps_low,
        scale.reps_sweep,
        scale.reps_extreme,
        scale.selection.m_imputations,
        scale.selection.b_bootstrap,
        scale.selection.bart.n_draws,
        scale.selection.n_perm
    ));

    property_suite(&mut r);

    let preset = MissingPreset::Y40Overall60;
    let main_cfg = scale.config(
        40,
        preset,
        scale.reps,
        0,
        vec![
            method(Method::RrBart),
            method(Method::Bart),
            method(Method::MiaBart),
            method(Method::MiaXgb),
            method(Method::CompleteCaseBart),
            method(Method::CompleteCaseXgb),
        ],
    );
    let main = timed(&mut r, "main scenario run", || simulate(&main_cfg, false).unwrap());
    let bi_cfg = scale.config(
        40,
        preset,
        scale.reps_sweep.max(scale.reps_power),
        1,
        vec![sweep(Method::BiBart), sweep(Method::BiXgb)],
    );
    let bi = timed(&mut r, "bootstrap-imputation sweep", || {
        simulate(&bi_cfg, false).unwrap()
    });
    let main_rows = by_method(&main);
    let bi_rows = by_method(&bi);

    // 1. fully observed baseline
    let m = metric(&main, "bart");
    r.check(
        "1",
        m.precision_mean.is_some_and(|p| p >= 0.95)
            && within(m.recall_mean, 0.87, 0.08)
            && within(m.f1_mean, 0.93, 0.07),
        format!(
            "full-data BART precision {} (>= 0.95), recall {} (0.87 +- 0.08), F1 {} (0.93 +- 0.07)",
            show(m.precision_mean),
            show(m.recall_mean),
            show(m.f1_mean)
        ),
    );

    // 2. RR-BART headline
    let m = metric(&main, "rr-bart");
    let guard = main_rows["rr-bart"]
        .iter()
        .filter(|x| x.guard_fired == Some(true))
        .count();
    r.check(
        "2",
        within(m.precision_mean, 0.87, 0.10)
            && within(m.recall_mean, 0.80, 0.10)
            && within(m.f1_mean, 0.83, 0.10)
            && m.type_i_mean.is_some_and(|t| t <= 0.05),
        format!(
            "RR-BART precision {} (0.87 +- 0.10), recall {} (0.80 +- 0.10), F1 {} (0.83 +- 0.10), type I {} (<= 0.05)",
            show(m.precision_mean),
            show(m.recall_mean),
            show(m.f1_mean),
            show(m.type_i_mean)
        ),
    );
    r.note(format!(
        "guard fired in {guard}/{} replications; min mean VIP {:?}",
        m.replications,
        main_rows["rr-bart"]
            .iter()
            .map(|x| x.min_mean_vip.map(|v| (v * 1e4).round() / 1e4))
            .collect::<Vec<_>>()
    ));

    // 3. lower-missingness preset
    let low_cfg = scale.config(
        40,
        MissingPreset::Y20Overall40,
        scale.reps_low,
        0,
        vec![method(Method::RrBart)],
    );
    let low = timed(&mut r, "lower-missingness run", || simulate(&low_cfg, false).unwrap());
    let m = metric(&low, "rr-bart");
    r.check(
        "3",
        within(m.f1_mean, 0.87, 0.10),
        format!(
            "RR-BART at Y20_overall40 F1 {} (0.87 +- 0.10); precision {}, recall {}",
            show(m.f1_mean),
            show(m.precision_mean),
            show(m.recall_mean)
        ),
    );

    // 4. pi-sweep shape on matched seeds
    let sweep_auc = |code: &str| -> Vec<f64> {
        PIS.iter()
            .map(|pi| {
                let rows = &bi_rows[&format!("{code}(pi={pi})")];
                mean(rows.iter().take(scale.reps_sweep).filter_map(|x| x.auc))
            })
            .collect()
    };
    let bart_auc = sweep_auc("bi-bart");
    let xgb_auc = sweep_auc("bi-xgb");
    let best = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bart_top = bart_auc[0] >= best(&bart_auc);
    let bart_monotone = bart_auc[2..].windows(2).all(|w| w[1] <= w[0]);
    let xgb_top = xgb_auc[1].max(xgb_auc[2]) >= best(&xgb_auc);
    r.check(
        "4",
        bart_top && bart_monotone && xgb_top,
        format!(
            "BI-BART max at pi=0.1: {bart_top}, nonincreasing from 0.3: {bart_monotone}; BI-XGB max at pi in {{0.2, 0.3}}: {xgb_top}"
        ),
    );
    r.note(format!("BI-BART mean AUC by pi: {:.3?}", bart_auc));
    r.note(format!("BI-XGB  mean AUC by pi: {:.3?}", xgb_auc));

    // 5. all-useful scenario and the 1/(2K) guard
    let ext_cfg = scale.config(0, preset, scale.reps_extreme, 0, vec![method(Method::RrBart)]);
    let ext = timed(&mut r, "all-useful run", || simulate(&ext_cfg, false).unwrap());
    let rows: Vec<&ReplicationRow> = ext.rows.iter().filter(|x| x.status != "failed").collect();
    let fired = rows.iter().filter(|x| x.guard_fired == Some(true)).count() as f64 / rows.len() as f64;
    let all_sel: Vec<_> = rows.iter().filter(|x| x.all_selected == Some(true)).collect();
    let all_ok = !all_sel.is_empty() && all_sel.iter().all(|x| x.recall == Some(1.0) && x.f1 == Some(1.0));
    let min_vip = mean(rows.iter().filter_map(|x| x.min_mean_vip));
    r.check(
        "5",
        fired >= 0.8 && all_ok && (0.05..=0.11).contains(&min_vip),
        format!(
            "guard fired in {:.0}% (>= 80%), all-selected recall = F1 = 1: {all_ok}, mean min VIP {min_vip:.4} (in [0.05, 0.11])",
            100.0 * fired
        ),
    );

    // 6. discrete-predictor power
    let reps6 = scale.reps_power;
    let rr6: Vec<&ReplicationRow> = main_rows["rr-bart"].iter().take(reps6).copied().collect();
    let bx6: Vec<&ReplicationRow> = bi_rows["bi-xgb(pi=0.3)"].iter().take(reps6).copied().collect();
    let (f_rr, f_bx) = (selection_frequency(&rr6, "x2"), selection_frequency(&bx6, "x2"));
    r.check(
        "6",
        f_rr - f_bx >= 0.10,
        format!("x2 selection frequency RR-BART {f_rr:.2} vs BI-XGB(pi=0.3) {f_bx:.2}; gap >= 0.10"),
    );

    // 7. method ordering on matched replications
    let rr_f1: BTreeMap<usize, f64> = main_rows["rr-bart"]
        .iter()
        .filter_map(|x| x.f1.map(|f| (x.replication, f)))
        .collect();
    let mut parts = Vec::new();
    let mut all7 = true;
    for label in [
        "complete-case-bart",
        "complete-case-xgb",
        "mia-bart(impute-y)",
        "mia-xgb(impute-y)",
    ] {
        let rows = &main_rows[label];
        let paired: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|x| Some((x.f1?, *rr_f1.get(&x.replication)?)))
            .collect();
        let wins = paired.iter().filter(|(f, rr)| f < rr).count() as f64 / paired.len().max(1) as f64;
        all7 &= !paired.is_empty() && wins >= 0.6;
        parts.push(format!("{label} {:.0}%", 100.0 * wins));
    }
    r.check(
        "7",
        all7,
        format!(
            "share of reps with F1 below RR-BART (>= 60% each): {}",
            parts.join(", ")
        ),
    );

    // 9. wall-clock ordering
    let secs = |rows: &[&ReplicationRow]| mean(rows.iter().map(|x| x.seconds));
    let t_rr = secs(&main_rows["rr-bart"]);
    let t_bi = secs(&bi_rows["bi-bart(pi=0.1)"]);
    r.check(
        "9",
        t_rr < t_bi,
        format!("mean selection wall-clock RR-BART {t_rr:.1}s < BI-BART {t_bi:.1}s"),
    );

    let failed: Vec<String> = r.failed.clone();
    r.emit(format!(
        "acceptance summary [{}]: {} of 9 criteria pass; failing: {:?}",
        scale.name,
        9 - failed.len(),
        failed
    ));
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance.txt");
    std::fs::write(&path, r.lines.join("\n") + "\n").unwrap();
    assert!(!failed.contains(&"8".to_string()), "property suite failed");
    if strict {
        assert!(failed.is_empty(), "criteria failed: {failed:?}");
    }
}

/// Criterion 8. Every check asserts; the summary line is printed first.
fn property_suite(r: &mut Report) {
    let start = Instant::now();
    type Check = fn() -> Result<(), String>;
    let checks: Vec<(&str, Check)> = vec![
        ("VIP simplex over 1000 draws", vip_simplex),
        ("pool_rubins vs brute force, 100 inputs", rubin_oracle),
        ("bi_select nested in pi", bi_nested),
        ("amputation proportions at n=5000", amputation_targets),
        ("observed cells kept by imputation", observed_cells_kept),
        ("MIA routing truth table", routing_table),
        ("AUC antisymmetry", auc_antisymmetry),
        ("tiny pipeline replay", pipeline_replay),
    ];
    let mut bad = Vec::new();
    for (name, f) in checks {
        if let Err(e) = f() {
            bad.push(format!("{name}: {e}"));
        }
    }
    r.check(
        "8",
        bad.is_empty(),
        format!("{} property checks in {:.1?}", 8 - bad.len(), start.elapsed()),
    );
    for b in &bad {
        r.note(b);
    }
    assert!(bad.is_empty(), "property suite: {bad:?}");
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn vip_simplex() -> Result<(), String> {
    let data = generate_with(300, 10, &GeneratorConfig::default(), 17)
        .map_err(|e| e.to_string())?
        .data;
    let params = BartParams {
        n_draws: 1000,
        burn_in: 100,
        keep_trees: false,
        ..BartParams::default()
    };
    let post = fit_bart_probit(&data, data.outcome_index(), &params, 3).map_err(|e| e.to_string())?;
    ensure(post.vip.len() == 1000, || format!("{} draws", post.vip.len()))?;
    for (p, s) in post.vip.iter().enumerate() {
        let sum: f64 = s.values.iter().sum();
        ensure((sum - 1.0).abs() <= 1e-12, || format!("draw {p} sums to {sum}"))?;
        ensure(s.values.iter().all(|v| (0.0..=1.0).contains(v)), || {
            format!("draw {p} outside [0, 1]")
        })?;
    }
    Ok(())
}

fn rubin_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let (k, m, p) = (rng.random_range(2..6), rng.random_range(2..6), rng.random_range(2..8));
        let n_eff = rng.random_range(20.0..2000.0);
        let alpha = 0.05;
        let slices: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|x| x / s).collect()
                    })
                    .collect()
            })
            .collect();
        let names = (0..k).map(|j| format!("v{j}")).collect();
        let v = VipDraws::new(names, &slices).map_err(|e| e.to_string())?;
        let got = pool_rubins(&v, alpha, n_eff).map_err(|e| e.to_string())?;

        // oracle, written out from the combining rules
        let avg = |j: usize| slices.iter().flatten().map(|s| s[j]).sum::<f64>() / (m * p) as f64;
        let mut floor = avg(0);
        let mut kmin = 0;
        for j in 1..k {
            if avg(j) < floor {
                floor = avg(j);
                kmin = j;
            }
        }
        ensure(argmin_mean_vip(&v) == kmin, || format!("case {case}: argmin"))?;
        for j in 0..k {
            let mut qs = Vec::new();
            let mut us = Vec::new();
            for imp in &slices {
                let d: Vec<f64> = imp.iter().map(|s| s[j] - floor).collect();
                let q = d.iter().sum::<f64>() / p as f64;
                let s2 = d.iter().map(|x| (x - q) * (x - q)).sum::<f64>() / (p - 1) as f64;
                qs.push(q);
                us.push(s2 / n_eff);
            }
            let mf = m as f64;
            let q = qs.iter().sum::<f64>() / mf;
            let w = us.iter().sum::<f64>() / mf;
            let b = qs.iter().map(|x| (x - q) * (x - q)).sum::<f64>() / (mf - 1.0);
            let t = w + (1.0 + 1.0 / mf) * b;
            let df = (mf - 1.0) / ((b + b / mf) / t).powi(2);
            let g = &got[j];
            for (what, a, e) in [
                ("Q", g.q_bar, q),
                ("W", g.within, w),
                ("B", g.between, b),
                ("T", g.total, t),
            ] {
                ensure((a - e).abs() <= 1e-12, || {
                    format!("case {case} k {j}: {what} {a} vs {e}")
                })?;
            }
            ensure(
                (g.total - g.within - (1.0 + 1.0 / mf) * g.between).abs() <= 1e-12,
                || format!("case {case} k {j}: T - W != (1 + 1/M) B"),
            )?;
            ensure(((g.df - df) / df).abs() <= 1e-9, || {
                format!("case {case} k {j}: df {} vs {df}", g.df)
            })?;
            if df <= 1e5 {
                let tq = StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(1.0 - alpha);
                ensure((g.lower - (q - tq * t.sqrt())).abs() <= 1e-9, || {
                    format!("case {case} k {j}: lower")
                })?;
            }
        }
        ensure(got[kmin].q_bar.abs() <= 1e-15, || {
            format!("case {case}: reference Q = {}", got[kmin].q_bar)
        })?;
    }
    Ok(())
}

fn bi_nested() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let k = rng.random_range(3..12);
        let b = rng.random_range(1..30);
        let per_dataset: Vec<Vec<usize>> = (0..b)
            .map(|_| (0..k).filter(|_| rng.random_bool(0.4)).collect())
            .collect();
        let run = BiRun {
            engine: Engine::Gbt,
            predictor_names: (0..k).map(|j| format!("v{j}")).collect(),
            per_dataset,
            seed: 0,
            n_rows: 100,
        };
        let mut prev: Option<Vec<usize>> = None;
        for pi in PIS {
            let sel = run.threshold(pi).map_err(|e| e.to_string())?.selected;
            if let Some(p) = &prev {
                ensure(sel.iter().all(|x| p.contains(x)), || {
                    format!("pi {pi}: {sel:?} not within {p:?}")
                })?;
            }
            prev = Some(sel);
        }
    }
    Ok(())
}

fn amputation_targets() -> Result<(), String> {
    for (preset, seed) in [(MissingPreset::Y40Overall60, 31), (MissingPreset::Y20Overall40, 32)] {
        let sc = simulate_scenario(&ScenarioSpec::new(5000, 40, preset, seed), &GeneratorConfig::default())
            .map_err(|e| e.to_string())?;
        let dm = &sc.amputed;
        let y = dm.outcome_index();
        let n = dm.n_rows() as f64;
        let y_miss = (0..dm.n_rows()).filter(|&i| !dm.is_observed(i, y)).count() as f64 / n;
        let incomplete = 1.0 - dm.complete_rows().len() as f64 / n;
        ensure((y_miss - preset.outcome_proportion()).abs() <= 0.02, || {
            format!("{preset}: outcome missing {y_miss:.3}")
        })?;
        ensure((incomplete - preset.overall_proportion()).abs() <= 0.02, || {
            format!("{preset}: incomplete rows {incomplete:.3}")
        })?;
    }
    Ok(())
}

fn observed_cells_kept() -> Result<(), String> {
    let sc = simulate_scenario(
        &ScenarioSpec::new(300, 10, MissingPreset::Y40Overall60, 5),
        &GeneratorConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let params = ImputeParams {
        max_iter: 3,
        forest: ForestParams {
            n_trees: 20,
            ..ForestParams::default()
        },
    };
    let dm = &sc.amputed;
    for set in multiple_impute(dm, 2, &params, 6).map_err(|e| e.to_string())? {
        let c = &set.completed;
        for j in 0..dm.n_cols() {
            for i in 0..dm.n_rows() {
                ensure(c.is_observed(i, j), || format!("cell ({i}, {j}) still missing"))?;
                if let Some(x) = dm.get(i, j) {
                    ensure(c.get(i, j).map(f64::to_bits) == Some(x.to_bits()), || {
                        format!("observed cell ({i}, {j}) changed")
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn routing_table() -> Result<(), String> {
    use MissingDirection::*;
    use Side::{Left as L, Right as R};
    // value below, at and above the threshold, then missing
    let table = [
        (Left, [L, L, R, L]),
        (Right, [L, L, R, R]),
        (MissingOnlyLeft, [R, R, R, L]),
    ];
    for (dir, expected) in table {
        let rule = SplitRule::new(0, 1.0, dir);
        let got = [
            route(&rule, Some(0.0)),
            route(&rule, Some(1.0)),
            route(&rule, Some(2.0)),
            route(&rule, None),
        ];
        ensure(got == expected, || format!("{dir:?}: {got:?}"))?;
    }
    Ok(())
}

fn auc_antisymmetry() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..8) as f64) / 4.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = auc(&scores, &labels).map_err(|e| e.to_string())?;
        let b = auc(&neg, &labels).map_err(|e| e.to_string())?;
        ensure((a + b - 1.0).abs() <= 1e-15, || format!("{a} + {b}"))?;
    }
    Ok(())
}

fn pipeline_replay() -> Result<(), String> {
    let mut selection = SelectionParams {
        m_imputations: 2,
        b_bootstrap: 4,
        n_perm: 10,
        ..SelectionParams::default()
    };
    selection.bart.n_draws = 60;
    selection.bart.burn_in = 30;
    selection.impute.forest.n_trees = 10;
    selection.impute.max_iter = 3;
    selection.rfe.gbt.rounds = 20;
    let mut predict = PredictParams::default();
    predict.bart.n_draws = 60;
    predict.bart.burn_in = 30;
    predict.impute = selection.impute.clone();
    let cfg = RunConfig {
        seed: Some(4),
        scenario: ScenarioConfig {
            n: 300,
            n_noise: 10,
            preset: MissingPreset::Y40Overall60,
            grid: false,
        },
        methods: vec![
            method(Method::RrBart),
            MethodConfig {
                method: Method::BiXgb,
                pi: vec![0.5],
                ..MethodConfig::default()
            },
        ],
        selection,
        predict,
        replications: Some(2),
        cv_repeats: 1,
        ..RunConfig::default()
    };
    let strip = |out: SimulationOutput| -> String {
        let rows: Vec<String> = out
            .rows
            .iter()
            .map(|x| {
                format!(
                    "{} {} {} {} {:?} {:?} {:?}",
                    x.scenario, x.replication, x.method, x.selected, x.f1, x.auc, x.min_mean_vip
                )
            })
            .collect();
        format!("{rows:?} {:?}", out.metrics)
    };
    let a = strip(simulate(&cfg, false).map_err(|e| e.to_string())?);
    let b = strip(simulate(&cfg, false).map_err(|e| e.to_string())?);
    ensure(a == b, || "replay differs".into())
}
