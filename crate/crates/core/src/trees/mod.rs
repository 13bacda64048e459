//! CART, random forests, gradient boosting and boosting-based recursive
//! feature elimination, all with optional missingness-incorporated-in-
//! attributes (MIA) splitting.

mod forest;
mod gbt;
mod grow;
mod rfe;
mod split;
mod tree;

pub use forest::{fit_random_forest, Forest, ForestKind, ForestParams, OobEstimate};
pub use gbt::{fit_gbt, gbt_importance, BoostedEnsemble, GbtParams, ImportanceVector, Loss};
pub use rfe::{rfe_select, RfeParams, RfeResult, RfeStep};
pub use split::{route, MissingDirection, Side, SplitRule};
pub use tree::{Node, NodeKind, Tree};

pub(crate) use forest::{bootstrap_weights, fit_forest_columns, kind_for, training_frame};

use crate::data::DataMatrix;
use crate::error::Result;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Minimum number of training rows per leaf.
    pub min_node: usize,
    pub mia: bool,
    /// Features tried per split; `None` tries all.
    pub mtry: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_node: 5,
            mia: false,
            mtry: None,
        }
    }
}

/// Single CART tree predicting column `target` from all other columns,
/// on the rows where the target is observed. Variance reduction for
/// non-binary targets, Gini for binary ones.
pub fn fit_tree(dm: &DataMatrix, target: usize, params: &TreeParams, seed: u64) -> Result<Tree> {
    let (columns, rows, features) = training_frame(dm, target, params.mia)?;
    let kind = kind_for(dm, target);
    let gp = grow::GrowParams {
        max_depth: params.max_depth.unwrap_or(usize::MAX),
        min_node: params.min_node as u32,
        mtry: params.mtry,
        criterion: match kind {
            ForestKind::Regression => grow::Criterion::Variance,
            ForestKind::Classification => grow::Criterion::Gini,
        },
        mia: params.mia,
    };
    let mut weights = vec![0u32; dm.n_rows()];
    for &r in &rows {
        weights[r] = 1;
    }
    let presort = grow::Presort::new(&columns, &features);
    let mut rng = rng_from_seed(seed);
    Ok(grow::grow(
        &columns,
        &presort,
        &features,
        dm.column(target),
        &weights,
        &gp,
        &mut rng,
    )
    .tree)
}

/// The tree a one-tree forest would grow from `seed`: bootstrap resample of
/// the observed-target rows, then CART with per-split feature subsampling.
pub fn fit_bootstrap_tree(dm: &DataMatrix, target: usize, params: &ForestParams, seed: u64) -> Result<Tree> {
    let (columns, rows, features) = training_frame(dm, target, params.mia)?;
    let kind = kind_for(dm, target);
    let gp = forest::grow_params(params, kind, features.len());
    let mut rng = rng_from_seed(seed);
    let weights = bootstrap_weights(dm.n_rows(), &rows, &mut rng);
    let presort = grow::Presort::new(&columns, &features);
    Ok(grow::grow(
        &columns,
        &presort,
        &features,
        dm.column(target),
        &weights,
        &gp,
        &mut rng,
    )
    .tree)
}
