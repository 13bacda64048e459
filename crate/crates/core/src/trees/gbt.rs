//! Stagewise gradient tree boosting with shrinkage and per-tree column
//! subsampling.

use rand::seq::{index, SliceRandom};

use super::forest::training_frame;
use super::grow::{grow, Criterion, GrowParams, Presort};
use super::tree::{NodeKind, Tree};
use crate::data::{ColumnKind, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::stats::logistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub colsample: f64,
    pub loss: Loss,
    pub mia: bool,
    pub min_node: usize,
    /// Stop when the cross-validated loss has not improved for this many rounds.
    pub early_stopping: Option<usize>,
    pub cv_folds: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            colsample: 0.8,
            loss: Loss::Logistic,
            mia: false,
            min_node: 5,
            early_stopping: Some(20),
            cv_folds: 3,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} not in (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "column subsample fraction {} not in (0, 1]",
                self.colsample
            )));
        }
        if self.early_stopping.is_some() && self.cv_folds < 2 {
            return Err(Error::InvalidParameter("early stopping needs at least 2 folds".into()));
        }
        Ok(())
    }
}

/// Fitted boosting model: `base + learning_rate * sum(tree outputs)` on the
/// link scale.
#[derive(Debug, Clone)]
pub struct BoostedEnsemble {
    pub features: Vec<usize>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub colsample: f64,
    pub loss: Loss,
    pub trees: Vec<Tree>,
    /// Training loss after each round.
    pub train_loss: Vec<f64>,
    /// Cross-validated loss at the chosen round count, when early stopping ran.
    pub cv_loss: Option<f64>,
}

/// Gain-based importance of each feature of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub features: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ImportanceVector {
    pub fn score_of(&self, column: usize) -> f64 {
        self.features
            .iter()
            .position(|&f| f == column)
            .map_or(0.0, |i| self.scores[i])
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

impl BoostedEnsemble {
    pub fn raw_score_row(&self, columns: &[&[f64]], row: usize) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict_row(columns, row)).sum::<f64>()
    }

    /// Mean response: probability for logistic loss, raw score for squared.
    pub fn predict_row(&self, columns: &[&[f64]], row: usize) -> f64 {
        let f = self.raw_score_row(columns, row);
        match self.loss {
            Loss::Squared => f,
            Loss::Logistic => logistic(f),
        }
    }

    pub fn predict(&self, dm: &DataMatrix) -> Vec<f64> {
        let columns: Vec<&[f64]> = (0..dm.n_cols()).map(|j| dm.column(j)).collect();
        (0..dm.n_rows()).map(|i| self.predict_row(&columns, i)).collect()
    }

    /// Same trees with a different shrinkage factor.
    pub fn with_learning_rate(&self, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..self.clone()
        }
    }

    pub fn importance(&self) -> ImportanceVector {
        gbt_importance(self)
    }
}

/// Total split gain attributed to each feature across all trees.
pub fn gbt_importance(e: &BoostedEnsemble) -> ImportanceVector {
    let mut scores = vec![0.0; e.features.len()];
    for tree in &e.trees {
        for (rule, gain) in tree.splits() {
            if let Some(i) = e.features.iter().position(|&f| f == rule.variable) {
                scores[i] += gain;
            }
        }
    }
    ImportanceVector {
        features: e.features.clone(),
        scores,
    }
}

pub(crate) fn loss_value(loss: Loss, y: f64, f: f64) -> f64 {
    match loss {
        Loss::Squared => (y - f) * (y - f),
        Loss::Logistic => {
            // log(1 + e^f) - y f, computed stably
            let softplus = if f > 0.0 {
                f + (-f).exp().ln_1p()
            } else {
                f.exp().ln_1p()
            };
            softplus - y * f
        }
    }
}

/// Shared, presorted view of a boosting problem.
pub(crate) struct BoostData<'a> {
    pub columns: Vec<&'a [f64]>,
    pub target: &'a [f64],
    pub presort: Presort,
}

impl<'a> BoostData<'a> {
    pub fn new(columns: Vec<&'a [f64]>, target: &'a [f64], features: &[usize]) -> Self {
        let presort = Presort::new(&columns, features);
        Self {
            columns,
            target,
            presort,
        }
    }
}

/// One boosting run on a subset of rows, optionally scoring held-out rows.
pub(crate) struct BoostRun {
    weights: Vec<u32>,
    train_rows: Vec<usize>,
    valid_rows: Vec<usize>,
    pred: Vec<f64>,
    pub base: f64,
    pub trees: Vec<Tree>,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

impl BoostRun {
    pub fn new(data: &BoostData, train_rows: Vec<usize>, valid_rows: Vec<usize>, loss: Loss) -> Self {
        let n = data.target.len();
        let mut weights = vec![0u32; n];
        for &r in &train_rows {
            weights[r] = 1;
        }
        let ybar = train_rows.iter().map(|&r| data.target[r]).sum::<f64>() / train_rows.len() as f64;
        let base = match loss {
            Loss::Squared => ybar,
            Loss::Logistic => {
                let p = ybar.clamp(1e-6, 1.0 - 1e-6);
                (p / (1.0 - p)).ln()
            }
        };
        Self {
            weights,
            train_rows,
            valid_rows,
            pred: vec![base; n],
            base,
            trees: Vec::new(),
            train_loss: Vec::new(),
            valid_loss: Vec::new(),
        }
    }

    pub fn step(&mut self, data: &BoostData, features: &[usize], params: &GbtParams, rng: &mut Rng) {
        let n = data.target.len();
        let mut residual = vec![0.0; n];
        for &r in &self.train_rows {
            let f = self.pred[r];
            residual[r] = match params.loss {
                Loss::Squared => data.target[r] - f,
                Loss::Logistic => data.target[r] - logistic(f),
            };
        }
        let k = ((params.colsample * features.len() as f64).round() as usize).clamp(1, features.len());
        let mut cols: Vec<usize> = if k < features.len() {
            index::sample(rng, features.len(), k)
                .into_iter()
                .map(|i| features[i])
                .collect()
        } else {
            features.to_vec()
        };
        cols.sort_unstable();
        let gp = GrowParams {
            max_depth: params.max_depth,
            min_node: params.min_node as u32,
            mtry: None,
            criterion: Criterion::Variance,
            mia: params.mia,
        };
        let grown = grow(&data.columns, &data.presort, &cols, &residual, &self.weights, &gp, rng);
        let mut tree = grown.tree;
        if params.loss == Loss::Logistic {
            let mut num = vec![0.0; tree.nodes.len()];
            let mut den = vec![0.0; tree.nodes.len()];
            for &r in &self.train_rows {
                let leaf = grown.leaf_of[r] as usize;
                let p = logistic(self.pred[r]);
                num[leaf] += data.target[r] - p;
                den[leaf] += p * (1.0 - p);
            }
            for i in 0..tree.nodes.len() {
                if matches!(tree.nodes[i].kind, NodeKind::Leaf { .. }) {
                    tree.set_leaf_value(i, num[i] / den[i].max(1e-12));
                }
            }
        }
        let eta = params.learning_rate;
        let leaf_values: Vec<f64> = tree
            .nodes
            .iter()
            .map(|nd| match nd.kind {
                NodeKind::Leaf { value } => value,
                NodeKind::Split { .. } => 0.0,
            })
            .collect();
        let mut tl = 0.0;
        for &r in &self.train_rows {
            self.pred[r] += eta * leaf_values[grown.leaf_of[r] as usize];
            tl += loss_value(params.loss, data.target[r], self.pred[r]);
        }
        self.train_loss.push(tl / self.train_rows.len() as f64);
        if !self.valid_rows.is_empty() {
            let mut vl = 0.0;
            for &r in &self.valid_rows {
                self.pred[r] += eta * tree.predict_row(&data.columns, r);
                vl += loss_value(params.loss, data.target[r], self.pred[r]);
            }
            self.valid_loss.push(vl / self.valid_rows.len() as f64);
        }
        self.trees.push(tree);
    }
}

/// Fold assignment, stratified on the target's sign for classification.
pub(crate) fn make_folds(target: &[f64], rows: &[usize], k: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut pos: Vec<usize> = rows.iter().copied().filter(|&r| target[r] > 0.5).collect();
    let mut neg: Vec<usize> = rows.iter().copied().filter(|&r| target[r] <= 0.5).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (i, &r) in pos.iter().chain(neg.iter()).enumerate() {
        folds[i % k].push(r);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Cross-validated boosting in lockstep across folds. Returns the best round
/// count and the mean held-out loss at that round.
pub(crate) fn cv_rounds(
    data: &BoostData,
    rows: &[usize],
    features: &[usize],
    params: &GbtParams,
    folds: &[Vec<usize>],
    seed: u64,
) -> (usize, f64) {
    let mut runs: Vec<(BoostRun, Rng)> = folds
        .iter()
        .enumerate()
        .map(|(i, valid)| {
            let train: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|r| valid.binary_search(r).is_err())
                .collect();
            (
                BoostRun::new(data, train, valid.clone(), params.loss),
                rng_from_seed(derive_seed(seed, i as u64)),
            )
        })
        .collect();
    let patience = params.early_stopping.unwrap_or(usize::MAX);
    let (mut best_round, mut best_loss) = (0usize, f64::INFINITY);
    for round in 1..=params.rounds {
        let mut total = 0.0;
        for (run, rng) in runs.iter_mut() {
            run.step(data, features, params, rng);
            total += run.valid_loss.last().copied().unwrap_or(0.0);
        }
        let mean = total / runs.len() as f64;
        if mean < best_loss {
            best_loss = mean;
            best_round = round;
        } else if round - best_round >= patience {
            break;
        }
    }
    (best_round.max(1), best_loss)
}

pub(crate) fn fit_boost(
    data: &BoostData,
    rows: &[usize],
    features: &[usize],
    params: &GbtParams,
    rounds: usize,
    seed: u64,
) -> BoostedEnsemble {
    let mut rng = rng_from_seed(seed);
    let mut run = BoostRun::new(data, rows.to_vec(), Vec::new(), params.loss);
    for _ in 0..rounds {
        run.step(data, features, params, &mut rng);
    }
    BoostedEnsemble {
        features: features.to_vec(),
        base_score: run.base,
        learning_rate: params.learning_rate,
        colsample: params.colsample,
        loss: params.loss,
        trees: run.trees,
        train_loss: run.train_loss,
        cv_loss: None,
    }
}

/// Boosted trees predicting `target` from all other columns. With early
/// stopping configured, the round count is chosen by k-fold cross-validation
/// and the final model is refit on all rows.
pub fn fit_gbt(dm: &DataMatrix, target: usize, params: &GbtParams, seed: u64) -> Result<BoostedEnsemble> {
    params.validate()?;
    if params.loss == Loss::Logistic && dm.column_meta(target).kind != ColumnKind::Binary {
        return Err(Error::InvalidParameter("logistic loss needs a binary target".into()));
    }
    let (columns, rows, features) = training_frame(dm, target, params.mia)?;
    let data = BoostData::new(columns, dm.column(target), &features);
    fit_on(&data, &rows, &features, params, seed)
}

pub(crate) fn fit_on(
    data: &BoostData,
    rows: &[usize],
    features: &[usize],
    params: &GbtParams,
    seed: u64,
) -> Result<BoostedEnsemble> {
    match params.early_stopping {
        None => Ok(fit_boost(
            data,
            rows,
            features,
            params,
            params.rounds,
            derive_seed(seed, 0),
        )),
        Some(_) => {
            let mut rng = rng_from_seed(derive_seed(seed, 1));
            let folds = make_folds(data.target, rows, params.cv_folds, &mut rng);
            let (best, cv) = cv_rounds(data, rows, features, params, &folds, derive_seed(seed, 2));
            let mut e = fit_boost(data, rows, features, params, best, derive_seed(seed, 0));
            e.cv_loss = Some(cv);
            Ok(e)
        }
    }
}
