mod common;

use common::{matrix, matrix_with_nans, normals, rng};
use proptest::prelude::*;
use rand::Rng;
use rrbart::impute::{bootstrap_impute, bootstrap_rows, iterative_forest_impute, multiple_impute, ImputeParams};
use rrbart::sim::{simulate_scenario, GeneratorConfig, MissingPreset, ScenarioSpec};
use rrbart::{ColumnKind, ColumnMeta, DataMatrix, Error};

fn small_params() -> ImputeParams {
    let mut p = ImputeParams::default();
    p.forest.n_trees = 30;
    p
}

#[test]
fn complete_data_passes_through() {
    let mut r = rng(1);
    let x = normals(80, &mut r);
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v > 0.0)).collect();
    let dm = matrix(vec![x], y);
    let out = iterative_forest_impute(&dm, &small_params(), 3).unwrap();
    assert_eq!(out.iterations, 0);
    assert_eq!(out.completed, dm);
}

/// x2 duplicates x1 with 30% holes. Forests try every column at each split
/// here: with the default `mtry` on a three-column frame a node goes terminal
/// as soon as the sampled column cannot split, which caps accuracy well above
/// the oracle bound (rmse ~0.35).
#[test]
fn recovers_duplicated_column() {
    let mut r = rng(2);
    let n = 1000;
    let x1 = normals(n, &mut r);
    let mut x2 = x1.clone();
    let mut holes = Vec::new();
    for (i, v) in x2.iter_mut().enumerate() {
        if r.random::<f64>() < 0.3 {
            *v = f64::NAN;
            holes.push(i);
        }
    }
    let y: Vec<f64> = (0..n).map(|_| f64::from(r.random_bool(0.5))).collect();
    let dm = matrix_with_nans(vec![x1.clone(), x2], y);
    let mut params = ImputeParams::default();
    params.forest.mtry = Some(2);
    let out = iterative_forest_impute(&dm, &params, 5).unwrap();
    let col = out.completed.column(1);
    let rmse = (holes.iter().map(|&i| (col[i] - x1[i]).powi(2)).sum::<f64>() / holes.len() as f64).sqrt();
    let m = x1.iter().sum::<f64>() / n as f64;
    let sd = (x1.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!(rmse <= 0.15 * sd, "rmse {rmse}, sd {sd}");
}

/// Default forests on the benchmark generator with 20% MCAR holes in x3..x10
/// beat column-mean filling on the same cells.
#[test]
fn beats_mean_imputation_on_benchmark_data() {
    let cfg = GeneratorConfig::default();
    let sim = rrbart::sim::generate_with(1000, 10, &cfg, 12).unwrap();
    let full = &sim.data;
    let mut r = rng(12);
    let mut dm = full.clone();
    let mut holes: Vec<(usize, usize)> = Vec::new();
    for j in 2..10 {
        let mut obs = vec![true; full.n_rows()];
        for (i, o) in obs.iter_mut().enumerate() {
            if r.random::<f64>() < 0.2 {
                *o = false;
                holes.push((i, j));
            }
        }
        dm = dm.with_column(j, full.column(j).to_vec(), obs).unwrap();
    }
    let out = iterative_forest_impute(&dm, &small_params(), 3).unwrap();
    let (mut se_forest, mut se_mean) = (0.0, 0.0);
    for &(i, j) in &holes {
        let obs_vals: Vec<f64> = (0..dm.n_rows())
            .filter(|&k| dm.is_observed(k, j))
            .map(|k| dm.column(j)[k])
            .collect();
        let mean = obs_vals.iter().sum::<f64>() / obs_vals.len() as f64;
        let truth = full.column(j)[i];
        se_forest += (out.completed.column(j)[i] - truth).powi(2);
        se_mean += (mean - truth).powi(2);
    }
    assert!(se_forest < se_mean, "forest {se_forest} vs mean {se_mean}");
}

#[test]
fn observed_cells_and_types_preserved() {
    let spec = ScenarioSpec::new(300, 10, MissingPreset::Y40Overall60, 3);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default()).unwrap();
    let dm = &sc.amputed;
    let out = iterative_forest_impute(dm, &small_params(), 9).unwrap();
    assert!(!out.completed.has_missing());
    assert!(out.iterations >= 1 && out.iterations <= 10);
    for j in 0..dm.n_cols() {
        for i in 0..dm.n_rows() {
            if dm.is_observed(i, j) {
                assert_eq!(out.completed.column(j)[i], dm.column(j)[i]);
            } else {
                let v = out.completed.column(j)[i];
                assert!(v.is_finite());
                if dm.column_meta(j).kind == ColumnKind::Binary {
                    assert!(v == 0.0 || v == 1.0, "binary column {j} got {v}");
                }
            }
        }
    }
    assert_eq!(out.original_mask[dm.outcome_index()], dm.observed(dm.outcome_index()));
}

#[test]
fn multiple_imputations_differ_and_replay() {
    let spec = ScenarioSpec::new(300, 10, MissingPreset::Y20Overall40, 4);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default()).unwrap();
    let sets = multiple_impute(&sc.amputed, 2, &small_params(), 17).unwrap();
    assert_eq!(sets.len(), 2);
    assert_ne!(sets[0].completed, sets[1].completed);
    let again = multiple_impute(&sc.amputed, 2, &small_params(), 17).unwrap();
    assert_eq!(sets[1].completed, again[1].completed);
    assert!(matches!(
        multiple_impute(&sc.amputed, 1, &small_params(), 17),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn fully_missing_column_rejected() {
    let mut r = rng(5);
    let x = normals(30, &mut r);
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v > 0.0)).collect();
    let dm = matrix_with_nans(vec![x, vec![f64::NAN; 30]], y);
    assert!(matches!(
        iterative_forest_impute(&dm, &small_params(), 1),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn count_columns_stay_integral() {
    let mut r = rng(6);
    let n = 150;
    let x: Vec<f64> = normals(n, &mut r);
    let c: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i % 4 == 0 {
                f64::NAN
            } else {
                (2.0 + 2.0 * v).max(0.0).round()
            }
        })
        .collect();
    let y: Vec<f64> = x.iter().map(|&v| f64::from(v > 0.0)).collect();
    let cols = vec![
        ColumnMeta::predictor("x", ColumnKind::Continuous),
        ColumnMeta::predictor("c", ColumnKind::Count),
        ColumnMeta::outcome("y"),
    ];
    let values = vec![x, c, y];
    let observed = values
        .iter()
        .map(|v| v.iter().map(|a: &f64| !a.is_nan()).collect())
        .collect();
    let dm = DataMatrix::new(cols, values, observed).unwrap();
    let out = iterative_forest_impute(&dm, &small_params(), 2).unwrap();
    assert!(out.completed.column(1).iter().all(|v| v.fract() == 0.0));
}

#[test]
fn bootstrap_rows_cover_about_632_percent() {
    let n = 5000;
    let rows = bootstrap_rows(n, 8, 0);
    let mut seen = vec![false; n];
    for &r in &rows {
        seen[r] = true;
    }
    let frac = seen.iter().filter(|&&s| s).count() as f64 / n as f64;
    let oracle = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
    assert!((frac - oracle).abs() < 0.015, "{frac} vs {oracle}");
    assert_ne!(rows, bootstrap_rows(n, 8, 1));
}

#[test]
fn bootstrap_impute_replays() {
    let spec = ScenarioSpec::new(300, 10, MissingPreset::Y20Overall40, 5);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default()).unwrap();
    let a = bootstrap_impute(&sc.amputed, 1, &small_params(), 33).unwrap();
    let b = bootstrap_impute(&sc.amputed, 1, &small_params(), 33).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.datasets[0].completed, b.datasets[0].completed);
    assert!(!a.datasets[0].completed.has_missing());
    assert!(bootstrap_impute(&sc.amputed, 0, &small_params(), 33).is_err());
}

#[test]
fn manifest_sidecar_written() {
    let spec = ScenarioSpec::new(300, 10, MissingPreset::Y20Overall40, 6);
    let sc = simulate_scenario(&spec, &GeneratorConfig::default()).unwrap();
    let out = iterative_forest_impute(&sc.amputed, &small_params(), 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("imp.csv");
    out.write(&path).unwrap();
    let side = std::fs::read_to_string(dir.path().join("imp.csv.manifest.toml")).unwrap();
    assert!(side.contains("seed = 4"));
    assert!(side.contains(&format!("used_iteration = {}", out.used_iteration)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn imputation_never_alters_observed(seed in 0u64..1000, rate in 0.05f64..0.5) {
        let mut r = rng(seed);
        let n = 60;
        let mut cols = vec![normals(n, &mut r), normals(n, &mut r)];
        for c in cols.iter_mut() {
            for v in c.iter_mut() {
                if r.random::<f64>() < rate {
                    *v = f64::NAN;
                }
            }
        }
        // keep every column partly observed
        cols[0][0] = 0.5;
        cols[1][0] = -0.5;
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let dm = matrix_with_nans(cols, y);
        let mut params = small_params();
        params.forest.n_trees = 10;
        params.max_iter = 3;
        let out = iterative_forest_impute(&dm, &params, seed).unwrap();
        for j in 0..dm.n_cols() {
            for i in 0..n {
                if dm.is_observed(i, j) {
                    prop_assert_eq!(out.completed.column(j)[i], dm.column(j)[i]);
                }
            }
        }
        prop_assert!(!out.completed.has_missing());
    }
}
