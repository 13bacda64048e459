use rand::Rng as _;
use rayon::prelude::*;

use super::grow::{grow, Criterion, GrowParams, Presort};
use super::tree::Tree;
use crate::data::{ColumnKind, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForestKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(K/3)` for regression and
    /// `ceil(sqrt(K))` for classification.
    pub mtry: Option<usize>,
    /// Minimum number of (bootstrap-weighted) training rows per leaf.
    pub min_node: usize,
    pub max_depth: Option<usize>,
    pub mia: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            mtry: None,
            min_node: 5,
            max_depth: None,
            mia: false,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, kind: ForestKind, n_features: usize) -> usize {
        let k = n_features.max(1);
        let auto = match kind {
            ForestKind::Regression => k.div_ceil(3),
            ForestKind::Classification => (k as f64).sqrt().ceil() as usize,
        };
        self.mtry.unwrap_or(auto).clamp(1, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OobEstimate {
    /// Rows left out of at least one bootstrap sample.
    pub n_scored: usize,
    pub mse: f64,
    /// `1 - mse / var(y)` over the scored rows.
    pub r_squared: f64,
    /// Majority-vote misclassification rate (classification only).
    pub error_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub kind: ForestKind,
    /// Seed of each tree's bootstrap and split-feature stream.
    pub tree_seeds: Vec<u64>,
    /// Columns drawn as split candidates anywhere in each tree.
    pub features_tried: Vec<Vec<usize>>,
    pub features: Vec<usize>,
    pub oob: OobEstimate,
}

impl Forest {
    /// Regression: mean of tree outputs. Classification: majority vote (0/1).
    pub fn predict_row(&self, columns: &[&[f64]], row: usize) -> f64 {
        match self.kind {
            ForestKind::Regression => {
                self.trees.iter().map(|t| t.predict_row(columns, row)).sum::<f64>() / self.trees.len() as f64
            }
            ForestKind::Classification => {
                let leaf: Vec<f64> = self.trees.iter().map(|t| t.predict_row(columns, row)).collect();
                majority_vote(&leaf)
            }
        }
    }

    /// Mean leaf class frequency (classification) or mean prediction.
    pub fn predict_mean_row(&self, columns: &[&[f64]], row: usize) -> f64 {
        self.trees.iter().map(|t| t.predict_row(columns, row)).sum::<f64>() / self.trees.len() as f64
    }
}

fn majority_vote(leaf_values: &[f64]) -> f64 {
    let votes: f64 = leaf_values
        .iter()
        .map(|&p| {
            if p > 0.5 {
                1.0
            } else if p < 0.5 {
                0.0
            } else {
                0.5
            }
        })
        .sum();
    let half = leaf_values.len() as f64 / 2.0;
    if votes > half {
        1.0
    } else if votes < half {
        0.0
    } else {
        let mean = leaf_values.iter().sum::<f64>() / leaf_values.len() as f64;
        if mean > 0.5 {
            1.0
        } else {
            0.0
        }
    }
}

pub(crate) fn grow_params(params: &ForestParams, kind: ForestKind, n_features: usize) -> GrowParams {
    GrowParams {
        max_depth: params.max_depth.unwrap_or(usize::MAX),
        min_node: params.min_node as u32,
        mtry: Some(params.resolved_mtry(kind, n_features)),
        criterion: match kind {
            ForestKind::Regression => Criterion::Variance,
            ForestKind::Classification => Criterion::Gini,
        },
        mia: params.mia,
    }
}

/// Bootstrap weights over `rows` drawn from a tree's seed.
pub(crate) fn bootstrap_weights(n: usize, rows: &[usize], rng: &mut crate::rng::Rng) -> Vec<u32> {
    let mut w = vec![0u32; n];
    for _ in 0..rows.len() {
        w[rows[rng.random_range(0..rows.len())]] += 1;
    }
    w
}

/// Fits a forest on column-major data. `rows` are the training rows (target
/// observed), `features` the candidate columns (ascending, target excluded).
pub(crate) fn fit_forest_columns(
    columns: &[&[f64]],
    target: &[f64],
    rows: &[usize],
    features: &[usize],
    kind: ForestKind,
    params: &ForestParams,
    seed: u64,
) -> Result<Forest> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no training rows".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be positive".into()));
    }
    let n = target.len();
    let presort = Presort::new(columns, features);
    let gp = grow_params(params, kind, features.len());
    let seeds: Vec<u64> = (0..params.n_trees).map(|t| derive_seed(seed, t as u64)).collect();
    let fitted: Vec<(Tree, Vec<usize>, Vec<u32>)> = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = rng_from_seed(s);
            let weights = bootstrap_weights(n, rows, &mut rng);
            let g = grow(columns, &presort, features, target, &weights, &gp, &mut rng);
            (g.tree, g.tried, weights)
        })
        .collect();

    let mut sum = vec![0.0; n];
    let mut votes: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut count = vec![0u32; n];
    for (tree, _, weights) in &fitted {
        for &r in rows {
            if weights[r] == 0 {
                let p = tree.predict_row(columns, r);
                sum[r] += p;
                count[r] += 1;
                if kind == ForestKind::Classification {
                    votes[r].push(p);
                }
            }
        }
    }
    let scored: Vec<usize> = rows.iter().copied().filter(|&r| count[r] > 0).collect();
    let oob = if scored.is_empty() {
        OobEstimate {
            n_scored: 0,
            mse: f64::NAN,
            r_squared: f64::NAN,
            error_rate: None,
        }
    } else {
        let m = scored.len() as f64;
        let mse = scored
            .iter()
            .map(|&r| {
                let d = sum[r] / count[r] as f64 - target[r];
                d * d
            })
            .sum::<f64>()
            / m;
        let ybar = scored.iter().map(|&r| target[r]).sum::<f64>() / m;
        let var = scored.iter().map(|&r| (target[r] - ybar).powi(2)).sum::<f64>() / m;
        let error_rate = (kind == ForestKind::Classification).then(|| {
            scored
                .iter()
                .filter(|&&r| majority_vote(&votes[r]) != target[r])
                .count() as f64
                / m
        });
        OobEstimate {
            n_scored: scored.len(),
            mse,
            r_squared: if var > 0.0 { 1.0 - mse / var } else { f64::NAN },
            error_rate,
        }
    };
    let mut trees = Vec::with_capacity(fitted.len());
    let mut tried = Vec::with_capacity(fitted.len());
    for (t, f, _) in fitted {
        trees.push(t);
        tried.push(f);
    }
    Ok(Forest {
        trees,
        kind,
        tree_seeds: seeds,
        features_tried: tried,
        features: features.to_vec(),
        oob,
    })
}

/// Column slices, usable rows and feature columns.
pub(crate) type Frame<'a> = (Vec<&'a [f64]>, Vec<usize>, Vec<usize>);

pub(crate) fn training_frame(dm: &DataMatrix, target: usize, mia: bool) -> Result<Frame<'_>> {
    if target >= dm.n_cols() {
        return Err(Error::InvalidParameter(format!("target column {target} out of range")));
    }
    let columns: Vec<&[f64]> = (0..dm.n_cols()).map(|j| dm.column(j)).collect();
    let rows: Vec<usize> = (0..dm.n_rows()).filter(|&i| dm.is_observed(i, target)).collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows with an observed target".into()));
    }
    let features: Vec<usize> = (0..dm.n_cols()).filter(|&j| j != target).collect();
    if !mia {
        for &f in &features {
            if rows.iter().any(|&i| !dm.is_observed(i, f)) {
                return Err(Error::InvalidInput(format!(
                    "predictor `{}` has missing values; enable MIA splitting or impute first",
                    dm.column_meta(f).name
                )));
            }
        }
    }
    Ok((columns, rows, features))
}

pub(crate) fn kind_for(dm: &DataMatrix, target: usize) -> ForestKind {
    if dm.column_meta(target).kind == ColumnKind::Binary {
        ForestKind::Classification
    } else {
        ForestKind::Regression
    }
}

/// Random forest of bootstrap CART trees predicting column `target` from all
/// other columns. Tree `t` uses the stream `derive_seed(seed, t)`.
pub fn fit_random_forest(dm: &DataMatrix, target: usize, params: &ForestParams, seed: u64) -> Result<Forest> {
    let (columns, rows, features) = training_frame(dm, target, params.mia)?;
    let kind = kind_for(dm, target);
    fit_forest_columns(&columns, dm.column(target), &rows, &features, kind, params, seed)
}
