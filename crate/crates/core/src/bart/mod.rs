//! Probit BART: a sum of regression trees on the latent scale of a probit
//! model, fit by backfitting Metropolis-within-Gibbs with Albert-Chib data
//! augmentation. Each retained draw records the variable inclusion
//! proportions (VIP) of its ensemble.

mod sampler;

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{normal_cdf, normal_quantile, quantile_sorted, truncated_normal_by_sign};
use crate::trees::Tree;

pub use sampler::{AcceptanceStats, MoveCounts};
use sampler::{Design, Prior, SampledTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalMix {
    pub grow: f64,
    pub prune: f64,
    pub change: f64,
}

impl Default for ProposalMix {
    fn default() -> Self {
        Self {
            grow: 0.28,
            prune: 0.28,
            change: 0.44,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BartParams {
    /// Number of trees `m`.
    pub n_trees: usize,
    /// Leaf prior sd is `3 / (k * sqrt(m))`.
    pub k: f64,
    /// Depth-`d` node splits with probability `base * (1 + d)^-power`.
    pub base: f64,
    pub power: f64,
    /// Retained posterior draws `P`.
    pub n_draws: usize,
    pub burn_in: usize,
    pub proposals: ProposalMix,
    /// Hard depth cap on top of the prior (nodes at this depth never split).
    pub max_depth: Option<usize>,
    /// Missingness-incorporated-in-attributes split rules.
    pub mia: bool,
    /// Keep the per-draw ensembles; needed for prediction, not for VIPs.
    pub keep_trees: bool,
}

impl Default for BartParams {
    fn default() -> Self {
        Self {
            n_trees: 20,
            k: 2.0,
            base: 0.95,
            power: 2.0,
            n_draws: 1000,
            burn_in: 250,
            proposals: ProposalMix::default(),
            max_depth: None,
            mia: false,
            keep_trees: true,
        }
    }
}

impl BartParams {
    /// Defaults for variable selection runs (20 trees).
    pub fn selection() -> Self {
        Self::default()
    }

    /// Defaults for prediction runs (50 trees).
    pub fn prediction() -> Self {
        Self {
            n_trees: 50,
            ..Self::default()
        }
    }

    pub fn leaf_sd(&self) -> f64 {
        3.0 / (self.k * (self.n_trees as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("BART needs at least one tree".into()));
        }
        if self.n_draws == 0 {
            return Err(Error::InvalidParameter("BART needs at least one retained draw".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "leaf prior scale k = {} must be positive",
                self.k
            )));
        }
        if !(self.base > 0.0 && self.base < 1.0) || !(self.power >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tree prior base {} must lie in (0, 1) and power {} be nonnegative",
                self.base, self.power
            )));
        }
        let p = self.proposals;
        if [p.grow, p.prune, p.change].iter().any(|&x| !(x >= 0.0))
            || (p.grow + p.prune + p.change - 1.0).abs() > 1e-9
            || p.grow == 0.0
        {
            return Err(Error::InvalidParameter(
                "proposal probabilities must be nonnegative, sum to 1 and allow growing".into(),
            ));
        }
        Ok(())
    }
}

/// Inclusion proportions of one posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct VipSlice {
    pub values: Vec<f64>,
    /// Total splitting rules in the ensemble at this draw.
    pub n_splits: usize,
}

impl VipSlice {
    /// Proportions from raw per-predictor split counts. A draw without any
    /// split gets the uniform slice `1/K`; check [`VipSlice::is_fallback`].
    pub fn from_counts(counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        let values = if total == 0 {
            vec![1.0 / counts.len() as f64; counts.len()]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        Self {
            values,
            n_splits: total,
        }
    }

    pub fn is_fallback(&self) -> bool {
        self.n_splits == 0
    }
}

/// Retained draws of a probit BART fit.
#[derive(Debug, Clone)]
pub struct BartPosterior {
    pub predictor_names: Vec<String>,
    /// Latent-scale intercept `Phi^-1(mean y)`.
    pub offset: f64,
    /// Per-draw ensembles; empty unless `keep_trees` was set.
    pub draws: Vec<Vec<Tree>>,
    pub vip: Vec<VipSlice>,
    pub acceptance: AcceptanceStats,
    /// Posterior mean of `Phi(f(x))` on the training rows.
    pub train_mean_prob: Vec<f64>,
    pub params: BartParams,
    pub seed: u64,
}

impl BartPosterior {
    pub fn n_predictors(&self) -> usize {
        self.predictor_names.len()
    }

    /// Draws whose ensemble had no split at all.
    pub fn fallback_draws(&self) -> usize {
        self.vip.iter().filter(|v| v.is_fallback()).count()
    }

    /// Posterior mean VIP per predictor.
    pub fn mean_vip(&self) -> Vec<f64> {
        let k = self.n_predictors();
        let mut out = vec![0.0; k];
        for s in &self.vip {
            for (o, v) in out.iter_mut().zip(&s.values) {
                *o += v;
            }
        }
        let p = self.vip.len() as f64;
        out.iter_mut().for_each(|o| *o /= p);
        out
    }

    /// Writes the VIP draws as CSV: one row per draw, one column per predictor.
    pub fn write_vip_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_vip_rows(
            &mut f,
            &self.predictor_names,
            self.vip.iter().map(|v| v.values.as_slice()),
        )
        .map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn write_vip_rows<'a, W: Write>(
    w: &mut W,
    names: &[String],
    rows: impl Iterator<Item = &'a [f64]>,
) -> std::io::Result<()> {
    writeln!(w, "{}", names.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn check_outcome(dm: &DataMatrix, outcome: usize) -> Result<()> {
    if outcome >= dm.n_cols() {
        return Err(Error::InvalidParameter(format!(
            "outcome column {outcome} out of range"
        )));
    }
    if dm.column_meta(outcome).kind != ColumnKind::Binary {
        return Err(Error::InvalidInput(format!(
            "probit BART needs a binary outcome, `{}` is {}",
            dm.column_meta(outcome).name,
            dm.column_meta(outcome).kind
        )));
    }
    if dm.column_has_missing(outcome) {
        return Err(Error::InvalidInput("outcome has missing values".into()));
    }
    Ok(())
}

/// Probit BART of column `outcome` on every other column.
///
/// Without MIA the matrix must be complete; with MIA only the outcome must be.
pub fn fit_bart_probit(dm: &DataMatrix, outcome: usize, params: &BartParams, seed: u64) -> Result<BartPosterior> {
    params.validate()?;
    check_outcome(dm, outcome)?;
    let predictors: Vec<usize> = (0..dm.n_cols()).filter(|&j| j != outcome).collect();
    if predictors.is_empty() {
        return Err(Error::InvalidInput("no predictors".into()));
    }
    if !params.mia {
        if let Some(&j) = predictors.iter().find(|&&j| dm.column_has_missing(j)) {
            return Err(Error::InvalidInput(format!(
                "predictor `{}` has missing values; impute first or enable MIA",
                dm.column_meta(j).name
            )));
        }
    }
    let design = Design::new(predictors.iter().map(|&j| dm.column(j)).collect(), params.mia);
    let y: Vec<bool> = dm.column(outcome).iter().map(|&v| v == 1.0).collect();
    let mut post = run_chain(&design, &y, params, seed);
    post.predictor_names = predictors.iter().map(|&j| dm.column_meta(j).name.clone()).collect();
    Ok(post)
}

fn run_chain(design: &Design, y: &[bool], params: &BartParams, seed: u64) -> BartPosterior {
    let n = y.len();
    let k = design.columns.len();
    let prior = Prior::new(params);
    let mut rng = rng_from_seed(seed);
    let ybar = y.iter().filter(|&&v| v).count() as f64 / n as f64;
    let offset = normal_quantile(ybar.clamp(0.005, 0.995));
    let mut trees: Vec<SampledTree> = (0..params.n_trees).map(|_| SampledTree::stump(n)).collect();
    let mut fit = vec![0.0; n]; // sum of tree outputs, offset excluded
    let mut z = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut stats = AcceptanceStats::default();
    let mut vip = Vec::with_capacity(params.n_draws);
    let mut draws = Vec::new();
    let mut prob_sum = vec![0.0; n];
    let mut counts = vec![0usize; k];
    for sweep in 0..params.burn_in + params.n_draws {
        for i in 0..n {
            z[i] = truncated_normal_by_sign(offset + fit[i], y[i], &mut rng);
        }
        for tree in trees.iter_mut() {
            for i in 0..n {
                resid[i] = z[i] - offset - fit[i] + tree.fitted(i);
            }
            tree.mh_step(design, &resid, &prior, &mut stats, &mut rng);
            tree.draw_leaves(&resid, &prior, &mut rng);
            for i in 0..n {
                fit[i] = z[i] - offset - resid[i] + tree.fitted(i);
            }
        }
        if sweep >= params.burn_in {
            counts.iter_mut().for_each(|c| *c = 0);
            for t in &trees {
                for v in t.split_variables() {
                    counts[v] += 1;
                }
            }
            vip.push(VipSlice::from_counts(&counts));
            for i in 0..n {
                prob_sum[i] += normal_cdf(offset + fit[i]);
            }
            if params.keep_trees {
                draws.push(trees.iter().map(SampledTree::to_tree).collect());
            }
        }
    }
    let p = params.n_draws as f64;
    BartPosterior {
        predictor_names: Vec::new(),
        offset,
        draws,
        vip,
        acceptance: stats,
        train_mean_prob: prob_sum.into_iter().map(|s| s / p).collect(),
        params: params.clone(),
        seed,
    }
}

/// Posterior summaries of `Phi(f(x))` for a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BartPrediction {
    pub mean: Vec<f64>,
    /// 2.5th percentile over draws.
    pub lower: Vec<f64>,
    /// 97.5th percentile over draws.
    pub upper: Vec<f64>,
}

/// Posterior mean probability and 95% percentile band for `rows` of `dm`.
/// Predictor columns are matched by name.
pub fn predict_bart(post: &BartPosterior, dm: &DataMatrix, rows: &[usize]) -> Result<BartPrediction> {
    if post.draws.is_empty() {
        return Err(Error::InvalidInput(
            "posterior was fit without keep_trees; no ensembles to predict from".into(),
        ));
    }
    let cols: Vec<&[f64]> = post
        .predictor_names
        .iter()
        .map(|name| {
            dm.column_index(name)
                .map(|j| dm.column(j))
                .ok_or_else(|| Error::Schema(format!("prediction data lacks predictor `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut out = BartPrediction {
        mean: Vec::with_capacity(rows.len()),
        lower: Vec::with_capacity(rows.len()),
        upper: Vec::with_capacity(rows.len()),
    };
    let mut probs = vec![0.0; post.draws.len()];
    for &r in rows {
        if r >= dm.n_rows() {
            return Err(Error::InvalidParameter(format!("row {r} out of range")));
        }
        for (p, ensemble) in probs.iter_mut().zip(&post.draws) {
            let f: f64 = ensemble.iter().map(|t| t.predict(|v| cols[v][r])).sum();
            *p = normal_cdf(post.offset + f);
        }
        out.mean.push(probs.iter().sum::<f64>() / probs.len() as f64);
        probs.sort_by(|a, b| a.total_cmp(b));
        out.lower.push(quantile_sorted(&probs, 0.025));
        out.upper.push(quantile_sorted(&probs, 0.975));
    }
    Ok(out)
}

/// One Albert-Chib latent draw: `N(f, 1)` truncated to `z > 0` when `y` is
/// true and `z < 0` otherwise.
pub fn draw_latent(f: f64, y: bool, rng: &mut crate::rng::Rng) -> f64 {
    truncated_normal_by_sign(f, y, rng)
}

/// Structure chain of a single tree against a fixed residual vector: each
/// sweep is one grow/prune/change proposal with leaf values integrated out.
/// Returns the tree after every sweep. Used to check the sampler against
/// the exact posterior on tiny problems.
pub fn fixed_residual_chain(
    columns: &[&[f64]],
    residual: &[f64],
    params: &BartParams,
    sweeps: usize,
    seed: u64,
) -> Result<Vec<Tree>> {
    params.validate()?;
    if columns.is_empty() || columns.iter().any(|c| c.len() != residual.len()) {
        return Err(Error::InvalidInput("columns and residual must share a length".into()));
    }
    let design = Design::new(columns.to_vec(), params.mia);
    let prior = Prior::new(params);
    let mut rng = rng_from_seed(seed);
    let mut tree = SampledTree::stump(residual.len());
    let mut stats = AcceptanceStats::default();
    let mut out = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        tree.mh_step(&design, residual, &prior, &mut stats, &mut rng);
        out.push(tree.to_tree());
    }
    Ok(out)
}

/// Observed inclusion proportions and their permutation nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationSelection {
    /// Predictor positions (order of the non-outcome columns) selected.
    pub selected: Vec<usize>,
    pub predictor_names: Vec<String>,
    /// Posterior mean VIP under the real outcome.
    pub observed: Vec<f64>,
    /// `1 - alpha` quantile of each predictor's null mean VIP.
    pub null_quantile: Vec<f64>,
    /// Null mean VIPs, one row per permutation.
    pub null: Vec<Vec<f64>>,
}

/// Permutation-null selection: refit on `n_perm` permuted outcome vectors
/// and keep predictors whose observed mean VIP exceeds the `1 - alpha`
/// quantile of their own null distribution.
pub fn permutation_select(
    dm: &DataMatrix,
    outcome: usize,
    params: &BartParams,
    n_perm: usize,
    alpha: f64,
    seed: u64,
) -> Result<PermutationSelection> {
    if n_perm < 20 {
        return Err(Error::InvalidParameter(format!(
            "n_perm = {n_perm} is below 20; null quantiles would be unreliable"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1)")));
    }
    let params = BartParams {
        keep_trees: false,
        ..params.clone()
    };
    let real = fit_bart_probit(dm, outcome, &params, derive_seed(seed, 0))?;
    let observed = real.mean_vip();
    let y = dm.column(outcome).to_vec();
    let null: Vec<Vec<f64>> = (0..n_perm)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, 1 + b as u64));
            let mut yp = y.clone();
            yp.shuffle(&mut rng);
            let permuted = dm.with_column(outcome, yp, vec![true; dm.n_rows()])?;
            Ok(fit_bart_probit(&permuted, outcome, &params, derive_seed(seed, 1_000_000 + b as u64))?.mean_vip())
        })
        .collect::<Result<_>>()?;
    let k = observed.len();
    let mut null_quantile = Vec::with_capacity(k);
    let mut selected = Vec::new();
    for j in 0..k {
        let mut col: Vec<f64> = null.iter().map(|r| r[j]).collect();
        col.sort_by(|a, b| a.total_cmp(b));
        let q = quantile_sorted(&col, 1.0 - alpha);
        if observed[j] > q {
            selected.push(j);
        }
        null_quantile.push(q);
    }
    Ok(PermutationSelection {
        selected,
        predictor_names: real.predictor_names,
        observed,
        null_quantile,
        null,
    })
}
