//! Iterative random-forest imputation (the missForest scheme), multiple
//! imputation and bootstrap-then-impute.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{write_csv, ColumnKind, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_path, derive_seed, rng_from_seed};
use crate::trees::{fit_forest_columns, kind_for, ForestParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputeParams {
    pub max_iter: usize,
    pub forest: ForestParams,
}

impl Default for ImputeParams {
    fn default() -> Self {
        Self {
            max_iter: 10,
            forest: ForestParams::default(),
        }
    }
}

/// Change between consecutive imputations of the missing cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeStat {
    /// `sum (new - old)^2 / sum new^2` over imputed continuous and count cells.
    pub continuous: Option<f64>,
    /// Share of imputed binary cells whose value flipped.
    pub binary: Option<f64>,
}

impl ChangeStat {
    /// True when every group present got worse than in `prev`.
    fn increased_over(&self, prev: &ChangeStat) -> bool {
        let up = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some(a >= b),
            _ => None,
        };
        let flags: Vec<bool> = [up(self.continuous, prev.continuous), up(self.binary, prev.binary)]
            .into_iter()
            .flatten()
            .collect();
        !flags.is_empty() && flags.iter().all(|&f| f)
    }
}

#[derive(Debug, Clone)]
pub struct ImputedSet {
    pub completed: DataMatrix,
    /// Observation mask of the source, column-major.
    pub original_mask: Vec<Vec<bool>>,
    /// Iterations run.
    pub iterations: usize,
    /// Iteration whose imputation was returned (the one before the change
    /// statistic went up, or the last).
    pub used_iteration: usize,
    pub change_trace: Vec<ChangeStat>,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct ImputationManifest<'a> {
    seed: u64,
    iterations: usize,
    used_iteration: usize,
    change_trace: &'a [ChangeStat],
}

impl ImputedSet {
    /// Writes the completed data as CSV and a TOML sidecar next to it
    /// (`<path>.manifest.toml`) with the seed and change trace.
    pub fn write(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        write_csv(&self.completed, csv_path)?;
        let manifest = ImputationManifest {
            seed: self.seed,
            iterations: self.iterations,
            used_iteration: self.used_iteration,
            change_trace: &self.change_trace,
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Runtime(e.to_string()))?;
        let mut side = csv_path.as_os_str().to_owned();
        side.push(".manifest.toml");
        std::fs::write(&side, text).map_err(|e| Error::io(side, e))
    }
}

fn initial_fill(dm: &DataMatrix, j: usize) -> f64 {
    let col = dm.column(j);
    let obs = dm.observed(j);
    let vals = col.iter().zip(obs).filter(|(_, &o)| o).map(|(&v, _)| v);
    match dm.column_meta(j).kind {
        ColumnKind::Binary => {
            let (ones, n) = vals.fold((0usize, 0usize), |(a, n), v| (a + usize::from(v == 1.0), n + 1));
            // mode; ties go to 0
            f64::from(2 * ones > n)
        }
        ColumnKind::Continuous => {
            let (s, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            s / n as f64
        }
        ColumnKind::Count => {
            let (s, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (s / n as f64).round()
        }
    }
}

/// Single imputation by chained random forests.
///
/// Missing cells start at the column mean (mode for binary columns). Each
/// iteration visits the incomplete columns from most to least missing,
/// fits a forest on the rows where that column is observed using all other
/// (currently filled) columns, and re-predicts its missing cells. Stops when
/// the change statistic rises for every variable type, returning the
/// previous iteration's values, or after `max_iter` iterations.
pub fn iterative_forest_impute(dm: &DataMatrix, params: &ImputeParams, seed: u64) -> Result<ImputedSet> {
    let original_mask: Vec<Vec<bool>> = (0..dm.n_cols()).map(|j| dm.observed(j).to_vec()).collect();
    if !dm.has_missing() {
        return Ok(ImputedSet {
            completed: dm.clone(),
            original_mask,
            iterations: 0,
            used_iteration: 0,
            change_trace: Vec::new(),
            seed,
        });
    }
    if params.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be positive".into()));
    }
    let n = dm.n_rows();
    for j in 0..dm.n_cols() {
        if dm.missing_count(j) == n {
            return Err(Error::InvalidInput(format!(
                "column `{}` is entirely missing",
                dm.column_meta(j).name
            )));
        }
    }
    let mut order: Vec<usize> = (0..dm.n_cols()).filter(|&j| dm.column_has_missing(j)).collect();
    // most missing first; stable on column index
    order.sort_by(|&a, &b| dm.missing_count(b).cmp(&dm.missing_count(a)).then(a.cmp(&b)));

    let mut cur: Vec<Vec<f64>> = (0..dm.n_cols())
        .map(|j| {
            let fill = initial_fill(dm, j);
            dm.column(j)
                .iter()
                .zip(dm.observed(j))
                .map(|(&v, &o)| if o { v } else { fill })
                .collect()
        })
        .collect();
    let missing_rows: Vec<Vec<usize>> = (0..dm.n_cols())
        .map(|j| (0..n).filter(|&i| !dm.is_observed(i, j)).collect())
        .collect();
    let observed_rows: Vec<Vec<usize>> = (0..dm.n_cols())
        .map(|j| (0..n).filter(|&i| dm.is_observed(i, j)).collect())
        .collect();

    let mut trace: Vec<ChangeStat> = Vec::new();
    let mut used = params.max_iter;
    let mut stopped_early = false;
    for iter in 0..params.max_iter {
        let before = cur.clone();
        for &j in &order {
            let features: Vec<usize> = (0..dm.n_cols()).filter(|&c| c != j).collect();
            let kind = kind_for(dm, j);
            let preds: Vec<f64> = {
                let columns: Vec<&[f64]> = cur.iter().map(|c| c.as_slice()).collect();
                let forest = fit_forest_columns(
                    &columns,
                    &cur[j],
                    &observed_rows[j],
                    &features,
                    kind,
                    &params.forest,
                    derive_path(seed, &[iter as u64, j as u64]),
                )?;
                missing_rows[j]
                    .iter()
                    .map(|&r| forest.predict_row(&columns, r))
                    .collect()
            };
            let count = dm.column_meta(j).kind == ColumnKind::Count;
            for (&r, p) in missing_rows[j].iter().zip(preds) {
                cur[j][r] = if count { p.round() } else { p };
            }
        }
        let stat = change_stat(dm, &order, &missing_rows, &before, &cur);
        let worse = trace.last().is_some_and(|p| stat.increased_over(p));
        trace.push(stat);
        if worse {
            // `before` holds the result of iteration `iter` (1-based)
            used = iter;
            stopped_early = true;
            cur = before;
            break;
        }
    }
    let iterations = trace.len();
    if !stopped_early {
        used = iterations;
    }
    let observed = vec![vec![true; n]; dm.n_cols()];
    let completed = DataMatrix::new(dm.columns().to_vec(), cur, observed)?;
    Ok(ImputedSet {
        completed,
        original_mask,
        iterations,
        used_iteration: used,
        change_trace: trace,
        seed,
    })
}

fn change_stat(
    dm: &DataMatrix,
    order: &[usize],
    missing_rows: &[Vec<usize>],
    old: &[Vec<f64>],
    new: &[Vec<f64>],
) -> ChangeStat {
    let (mut num, mut den, mut flips, mut nb) = (0.0, 0.0, 0usize, 0usize);
    let (mut has_c, mut has_b) = (false, false);
    for &j in order {
        let binary = dm.column_meta(j).kind == ColumnKind::Binary;
        for &r in &missing_rows[j] {
            if binary {
                has_b = true;
                nb += 1;
                flips += usize::from(old[j][r] != new[j][r]);
            } else {
                has_c = true;
                num += (new[j][r] - old[j][r]).powi(2);
                den += new[j][r].powi(2);
            }
        }
    }
    ChangeStat {
        continuous: has_c.then(|| if den > 0.0 { num / den } else { 0.0 }),
        binary: has_b.then(|| flips as f64 / nb as f64),
    }
}

/// `m` independent imputations; run `i` uses seed `derive_seed(seed, i)`.
pub fn multiple_impute(dm: &DataMatrix, m: usize, params: &ImputeParams, seed: u64) -> Result<Vec<ImputedSet>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "multiple imputation needs M >= 2 (between-imputation variance is undefined at M = {m})"
        )));
    }
    (0..m)
        .into_par_iter()
        .map(|i| iterative_forest_impute(dm, params, derive_seed(seed, i as u64)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BootstrapImputedSet {
    pub datasets: Vec<ImputedSet>,
    /// Source row drawn at each position of each resample.
    pub rows: Vec<Vec<usize>>,
    pub seeds: Vec<u64>,
}

/// Row indices of bootstrap resample `b`.
pub fn bootstrap_rows(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_path(seed, &[b as u64, 0]));
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `b` bootstrap resamples of the rows, each singly imputed.
pub fn bootstrap_impute(dm: &DataMatrix, b: usize, params: &ImputeParams, seed: u64) -> Result<BootstrapImputedSet> {
    if b < 1 {
        return Err(Error::InvalidParameter("need at least one bootstrap dataset".into()));
    }
    let out: Vec<(ImputedSet, Vec<usize>, u64)> = (0..b)
        .into_par_iter()
        .map(|i| {
            let rows = bootstrap_rows(dm.n_rows(), seed, i);
            let sample = dm.select_rows(&rows)?;
            let s = derive_path(seed, &[i as u64, 1]);
            Ok((iterative_forest_impute(&sample, params, s)?, rows, s))
        })
        .collect::<Result<_>>()?;
    let mut set = BootstrapImputedSet {
        datasets: Vec::with_capacity(b),
        rows: Vec::with_capacity(b),
        seeds: Vec::with_capacity(b),
    };
    for (d, r, s) in out {
        set.datasets.push(d);
        set.rows.push(r);
        set.seeds.push(s);
    }
    Ok(set)
}
