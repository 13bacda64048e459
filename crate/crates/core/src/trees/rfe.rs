use serde::{Deserialize, Serialize};

use super::forest::training_frame;
use super::gbt::{cv_rounds, fit_boost, gbt_importance, make_folds, BoostData, GbtParams, Loss};
use crate::data::{ColumnKind, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfeParams {
    pub gbt: GbtParams,
    /// Smallest feature set evaluated.
    pub min_features: usize,
}

impl Default for RfeParams {
    fn default() -> Self {
        Self {
            gbt: GbtParams::default(),
            min_features: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeStep {
    pub features: Vec<usize>,
    pub cv_loss: f64,
    pub rounds: usize,
    /// Importance per feature of this step's full-data fit (empty on the last step).
    pub importance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeResult {
    /// Selected columns, ascending.
    pub selected: Vec<usize>,
    pub steps: Vec<RfeStep>,
}

/// Recursive feature elimination with boosted trees: fit, record the
/// cross-validated loss, drop the least important feature, repeat. The
/// feature set with the lowest loss wins; ties go to the smaller set.
pub fn rfe_select(dm: &DataMatrix, target: usize, params: &RfeParams, seed: u64) -> Result<RfeResult> {
    params.gbt.validate()?;
    if params.gbt.loss == Loss::Logistic && dm.column_meta(target).kind != ColumnKind::Binary {
        return Err(Error::InvalidParameter("logistic loss needs a binary target".into()));
    }
    let (columns, rows, features) = training_frame(dm, target, params.gbt.mia)?;
    if features.len() < 2 {
        return Ok(RfeResult {
            selected: features,
            steps: Vec::new(),
        });
    }
    let data = BoostData::new(columns, dm.column(target), &features);
    rfe_on(&data, &rows, &features, params, seed)
}

pub(crate) fn rfe_on(
    data: &BoostData,
    rows: &[usize],
    features: &[usize],
    params: &RfeParams,
    seed: u64,
) -> Result<RfeResult> {
    let folds_k = params.gbt.cv_folds.max(2);
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let folds = make_folds(data.target, rows, folds_k, &mut rng);
    let min_features = params.min_features.max(1);
    let mut current = features.to_vec();
    let mut steps = Vec::new();
    loop {
        let step_seed = derive_seed(seed, steps.len() as u64);
        let (rounds, cv_loss) = cv_rounds(data, rows, &current, &params.gbt, &folds, step_seed);
        if current.len() <= min_features {
            steps.push(RfeStep {
                features: current.clone(),
                cv_loss,
                rounds,
                importance: Vec::new(),
            });
            break;
        }
        let fit = fit_boost(data, rows, &current, &params.gbt, rounds, derive_seed(step_seed, 1));
        let imp = gbt_importance(&fit);
        let drop = imp
            .scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .expect("non-empty feature set");
        steps.push(RfeStep {
            features: current.clone(),
            cv_loss,
            rounds,
            importance: imp.scores.clone(),
        });
        current.remove(drop);
    }
    let best = steps
        .iter()
        .enumerate()
        .min_by(|a, b| {
            a.1.cv_loss
                .total_cmp(&b.1.cv_loss)
                .then(a.1.features.len().cmp(&b.1.features.len()))
        })
        .map(|(i, _)| i)
        .expect("at least one step");
    Ok(RfeResult {
        selected: steps[best].features.clone(),
        steps,
    })
}
