//! Variable selection strategies for incomplete data.
//!
//! RR-BART pools BART inclusion-proportion posteriors over multiple
//! imputations with Rubin's rules. The comparison strategies are the
//! bootstrap-imputation thresholding selectors (BART permutation or boosted
//! tree elimination per resample), MIA splitting, and complete cases.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bart::{fit_bart_probit, permutation_select, BartParams, BartPosterior};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::impute::{bootstrap_impute, iterative_forest_impute, multiple_impute, BootstrapImputedSet, ImputeParams};
use crate::rng::{derive_path, derive_seed};
use crate::stats::{normal_quantile, quantile_sorted, t_quantile};
use crate::trees::{rfe_select, RfeParams};

/// Fewest rows a complete-case or outcome-excluding MIA fit may use.
pub const MIN_ROWS: usize = 50;

/// Inclusion proportions `VIP[k, m, p]` for K predictors, M imputations and
/// P posterior draws.
#[derive(Debug, Clone, PartialEq)]
pub struct VipDraws {
    pub predictor_names: Vec<String>,
    k: usize,
    m: usize,
    p: usize,
    /// Laid out as `[(m * P + p) * K + k]`.
    values: Vec<f64>,
}

impl VipDraws {
    /// Builds from `slices[m][p][k]`. Every imputation needs the same number
    /// of draws and every slice K values.
    pub fn new(predictor_names: Vec<String>, slices: &[Vec<Vec<f64>>]) -> Result<Self> {
        let k = predictor_names.len();
        let m = slices.len();
        let p = slices.first().map_or(0, Vec::len);
        if k == 0 || m == 0 || p == 0 {
            return Err(Error::InvalidInput("VIP draws need K, M, P >= 1".into()));
        }
        let mut values = Vec::with_capacity(k * m * p);
        for imp in slices {
            if imp.len() != p {
                return Err(Error::InvalidInput("imputations have different draw counts".into()));
            }
            for slice in imp {
                if slice.len() != k {
                    return Err(Error::InvalidInput(format!(
                        "VIP slice has {} values, expected {k}",
                        slice.len()
                    )));
                }
                values.extend_from_slice(slice);
            }
        }
        Ok(Self {
            predictor_names,
            k,
            m,
            p,
            values,
        })
    }

    pub fn n_predictors(&self) -> usize {
        self.k
    }

    pub fn n_imputations(&self) -> usize {
        self.m
    }

    pub fn n_draws(&self) -> usize {
        self.p
    }

    pub fn get(&self, k: usize, m: usize, p: usize) -> f64 {
        self.values[(m * self.p + p) * self.k + k]
    }

    /// `VIPbar_k..`: mean over imputations and draws.
    pub fn mean_vip(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for slice in self.values.chunks(self.k) {
            for (o, v) in out.iter_mut().zip(slice) {
                *o += v;
            }
        }
        let total = (self.m * self.p) as f64;
        out.iter_mut().for_each(|o| *o /= total);
        out
    }

    /// Long-format CSV: `imputation,draw,predictor,vip`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Runtime(e.to_string()))?;
        w.write_record(["imputation", "draw", "predictor", "vip"])
            .map_err(|e| Error::Runtime(e.to_string()))?;
        for m in 0..self.m {
            for p in 0..self.p {
                for k in 0..self.k {
                    w.write_record([
                        (m + 1).to_string(),
                        (p + 1).to_string(),
                        self.predictor_names[k].clone(),
                        self.get(k, m, p).to_string(),
                    ])
                    .map_err(|e| Error::Runtime(e.to_string()))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Collects the draws of one BART fit per imputation.
pub fn vip_draws(posteriors: &[BartPosterior]) -> Result<VipDraws> {
    let first = posteriors
        .first()
        .ok_or_else(|| Error::InvalidInput("no posteriors".into()))?;
    if posteriors.iter().any(|p| p.predictor_names != first.predictor_names) {
        return Err(Error::InvalidInput("posteriors disagree on predictors".into()));
    }
    let slices: Vec<Vec<Vec<f64>>> = posteriors
        .iter()
        .map(|post| post.vip.iter().map(|s| s.values.clone()).collect())
        .collect();
    VipDraws::new(first.predictor_names.clone(), &slices)
}

/// Divisor applied to the per-imputation draw variance in `W_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WithinDivisor {
    /// Number of data rows `n`.
    SampleSize,
    /// Number of posterior draws `P`.
    Draws,
}

/// Rubin's-rule summary of one predictor's distance score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledDistance {
    pub q_bar: f64,
    pub within: f64,
    pub between: f64,
    pub total: f64,
    /// Degrees of freedom; infinite when `between = 0`.
    pub df: f64,
    pub lower: f64,
    pub upper: f64,
    /// Total variance is zero; the interval collapses to `q_bar`.
    pub degenerate: bool,
}

impl PooledDistance {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Index of the smallest mean VIP; ties go to the lowest index.
pub fn argmin_mean_vip(v: &VipDraws) -> usize {
    let means = v.mean_vip();
    let mut best = 0;
    for (k, &x) in means.iter().enumerate() {
        if x < means[best] {
            best = k;
        }
    }
    best
}

/// Pools the distances `VIP[k,m,p] - min_k VIPbar_k..` across imputations.
///
/// `n_eff` divides the per-imputation draw variance (sample variance over P
/// draws) in `W_k`. The interval is `Q_k +- t(df, 1 - alpha) sqrt(T_k)`.
pub fn pool_rubins(v: &VipDraws, alpha: f64, n_eff: f64) -> Result<Vec<PooledDistance>> {
    check_alpha(alpha)?;
    let (m, p) = (v.m, v.p);
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "Rubin's rules need M >= 2 imputations, got {m}"
        )));
    }
    if p < 2 {
        return Err(Error::InvalidParameter(format!("need P >= 2 draws, got {p}")));
    }
    if !(n_eff > 0.0) {
        return Err(Error::InvalidParameter("variance divisor must be positive".into()));
    }
    let floor = v.mean_vip()[argmin_mean_vip(v)];
    let mf = m as f64;
    let pf = p as f64;
    let mut out = Vec::with_capacity(v.k);
    for k in 0..v.k {
        let mut means = Vec::with_capacity(m);
        let mut within = 0.0;
        for mi in 0..m {
            let d: Vec<f64> = (0..p).map(|pi| v.get(k, mi, pi) - floor).collect();
            let mean = d.iter().sum::<f64>() / pf;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (pf - 1.0);
            within += var / n_eff;
            means.push(mean);
        }
        let within = within / mf;
        let q_bar = means.iter().sum::<f64>() / mf;
        let between = means.iter().map(|x| (x - q_bar).powi(2)).sum::<f64>() / (mf - 1.0);
        let mut total = within + (1.0 + 1.0 / mf) * between;
        // constant distances leave only rounding residue in the variances
        let degenerate = total.sqrt() <= 1e-12 * q_bar.abs() || total == 0.0;
        let (within, between) = if degenerate {
            total = 0.0;
            (0.0, 0.0)
        } else {
            (within, between)
        };
        let (df, half) = if degenerate {
            (f64::INFINITY, 0.0)
        } else if between > 0.0 {
            let r = (between + between / mf) / total;
            let df = (mf - 1.0) / (r * r);
            (df, t_quantile(1.0 - alpha, df) * total.sqrt())
        } else {
            (f64::INFINITY, normal_quantile(1.0 - alpha) * total.sqrt())
        };
        out.push(PooledDistance {
            q_bar,
            within,
            between,
            total,
            df,
            lower: q_bar - half,
            upper: q_bar + half,
            degenerate,
        });
    }
    Ok(out)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RrBart,
    RrMedian,
    RrPooledDraws,
    BiBart,
    BiXgb,
    MiaBart,
    MiaXgb,
    CompleteCaseBart,
    CompleteCaseXgb,
    /// BART permutation selection on fully observed data.
    Bart,
    /// Boosted-tree recursive elimination on fully observed data.
    Xgb,
}

impl Method {
    pub fn code(self) -> &'static str {
        match self {
            Method::RrBart => "rr-bart",
            Method::RrMedian => "rr-median",
            Method::RrPooledDraws => "rr-pooled-draws",
            Method::BiBart => "bi-bart",
            Method::BiXgb => "bi-xgb",
            Method::MiaBart => "mia-bart",
            Method::MiaXgb => "mia-xgb",
            Method::CompleteCaseBart => "complete-case-bart",
            Method::CompleteCaseXgb => "complete-case-xgb",
            Method::Bart => "bart",
            Method::Xgb => "xgb",
        }
    }

    /// Engine used for prediction after selection.
    pub fn engine(self) -> Engine {
        match self {
            Method::BiXgb | Method::MiaXgb | Method::CompleteCaseXgb | Method::Xgb => Engine::Gbt,
            _ => Engine::Bart,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Method::RrBart,
            Method::RrMedian,
            Method::RrPooledDraws,
            Method::BiBart,
            Method::BiXgb,
            Method::MiaBart,
            Method::MiaXgb,
            Method::CompleteCaseBart,
            Method::CompleteCaseXgb,
            Method::Bart,
            Method::Xgb,
        ];
        all.into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Bart,
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeMode {
    /// Fill missing outcomes by forest imputation first.
    ImputeY,
    /// Drop rows with a missing outcome.
    ExcludeY,
}

/// Everything the selectors need besides data and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    pub alpha: f64,
    pub m_imputations: usize,
    pub b_bootstrap: usize,
    pub n_perm: usize,
    pub within_divisor: WithinDivisor,
    pub bart: BartParams,
    pub rfe: RfeParams,
    pub impute: ImputeParams,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            m_imputations: 10,
            b_bootstrap: 100,
            n_perm: 100,
            within_divisor: WithinDivisor::SampleSize,
            bart: BartParams::selection(),
            rfe: RfeParams::default(),
            impute: ImputeParams::default(),
        }
    }
}

/// Method-specific evidence behind a selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Pooled {
        mean_vip: Vec<f64>,
        argmin: usize,
        guard: f64,
        /// Empty when the guard fired.
        pooled: Vec<PooledDistance>,
    },
    Median {
        mean_vip: Vec<f64>,
        median: f64,
    },
    PooledDraws {
        mean_vip: Vec<f64>,
        /// `alpha` quantile of the merged distances.
        lower: Vec<f64>,
    },
    Frequencies {
        /// Share of bootstrap datasets selecting each predictor.
        frequency: Vec<f64>,
        b: usize,
        pi: f64,
        threshold: usize,
    },
    Permutation {
        observed: Vec<f64>,
        null_quantile: Vec<f64>,
    },
    Elimination {
        /// `(feature count, cross-validated loss)` per step.
        path: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: Method,
    pub predictor_names: Vec<String>,
    /// Selected predictor positions, ascending.
    pub selected: Vec<usize>,
    pub all_selected: bool,
    /// Any pooled interval degenerated to a point (`T_k = 0`).
    pub degenerate: bool,
    pub diagnostics: Diagnostics,
    pub seed: u64,
    /// Rows the selector was fit on.
    pub n_rows: usize,
}

impl SelectionResult {
    pub fn selected_names(&self) -> Vec<&str> {
        self.selected
            .iter()
            .map(|&k| self.predictor_names[k].as_str())
            .collect()
    }

    /// Plain-text report: header, selected names, then a per-predictor table.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method: {}", self.method);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "rows: {}", self.n_rows);
        let _ = writeln!(s, "all_selected: {}", self.all_selected);
        let _ = writeln!(s, "degenerate: {}", self.degenerate);
        let _ = writeln!(s, "selected: {}", self.selected_names().join(","));
        let flag = |k: usize| u8::from(self.selected.binary_search(&k).is_ok());
        match &self.diagnostics {
            Diagnostics::Pooled {
                mean_vip,
                argmin,
                guard,
                pooled,
            } => {
                let _ = writeln!(
                    s,
                    "min_mean_vip: {} ({})",
                    mean_vip[*argmin], self.predictor_names[*argmin]
                );
                let _ = writeln!(s, "guard: {guard}");
                let _ = writeln!(
                    s,
                    "predictor,selected,mean_vip,q_bar,within,between,total,df,lower,upper"
                );
                for (k, name) in self.predictor_names.iter().enumerate() {
                    match pooled.get(k) {
                        Some(p) => {
                            let _ = writeln!(
                                s,
                                "{name},{},{},{},{},{},{},{},{},{}",
                                flag(k),
                                mean_vip[k],
                                p.q_bar,
                                p.within,
                                p.between,
                                p.total,
                                p.df,
                                p.lower,
                                p.upper
                            );
                        }
                        None => {
                            let _ = writeln!(s, "{name},{},{},,,,,,,", flag(k), mean_vip[k]);
                        }
                    }
                }
            }
            Diagnostics::Median { mean_vip, median } => {
                let _ = writeln!(s, "median: {median}");
                let _ = writeln!(s, "predictor,selected,mean_vip");
                for (k, name) in self.predictor_names.iter().enumerate() {
                    let _ = writeln!(s, "{name},{},{}", flag(k), mean_vip[k]);
                }
            }
            Diagnostics::PooledDraws { mean_vip, lower } => {
                let _ = writeln!(s, "predictor,selected,mean_vip,lower_quantile");
                for (k, name) in self.predictor_names.iter().enumerate() {
                    let _ = writeln!(s, "{name},{},{},{}", flag(k), mean_vip[k], lower[k]);
                }
            }
            Diagnostics::Frequencies {
                frequency,
                b,
                pi,
                threshold,
            } => {
                let _ = writeln!(s, "b: {b}");
                let _ = writeln!(s, "pi: {pi}");
                let _ = writeln!(s, "threshold: {threshold}");
                let _ = writeln!(s, "predictor,selected,frequency");
                for (k, name) in self.predictor_names.iter().enumerate() {
                    let _ = writeln!(s, "{name},{},{}", flag(k), frequency[k]);
                }
            }
            Diagnostics::Permutation {
                observed,
                null_quantile,
            } => {
                let _ = writeln!(s, "predictor,selected,mean_vip,null_quantile");
                for (k, name) in self.predictor_names.iter().enumerate() {
                    let _ = writeln!(s, "{name},{},{},{}", flag(k), observed[k], null_quantile[k]);
                }
            }
            Diagnostics::Elimination { path } => {
                let _ = writeln!(s, "features,cv_loss");
                for (n, loss) in path {
                    let _ = writeln!(s, "{n},{loss}");
                }
            }
        }
        s
    }
}

fn n_eff(divisor: WithinDivisor, n_rows: usize, n_draws: usize) -> f64 {
    match divisor {
        WithinDivisor::SampleSize => n_rows as f64,
        WithinDivisor::Draws => n_draws as f64,
    }
}

/// Imputes `M` times and fits BART to each completed dataset.
pub fn rr_bart_draws(dm: &DataMatrix, params: &SelectionParams, seed: u64) -> Result<VipDraws> {
    if !dm.has_missing() {
        return Err(Error::InvalidInput(
            "data have no missing cells; use permutation selection on complete data instead".into(),
        ));
    }
    let sets = multiple_impute(dm, params.m_imputations, &params.impute, derive_seed(seed, 1))?;
    let bart = BartParams {
        keep_trees: false,
        ..params.bart.clone()
    };
    let outcome = dm.outcome_index();
    let posts: Vec<BartPosterior> = sets
        .par_iter()
        .enumerate()
        .map(|(m, set)| fit_bart_probit(&set.completed, outcome, &bart, derive_path(seed, &[2, m as u64])))
        .collect::<Result<_>>()?;
    vip_draws(&posts)
}

/// RR-BART selection from given draws. When the smallest mean VIP exceeds
/// `1 / (2K)` every predictor is kept; otherwise predictors whose pooled
/// interval excludes zero are selected.
pub fn rr_bart_from_draws(
    v: &VipDraws,
    alpha: f64,
    divisor: WithinDivisor,
    n_rows: usize,
    seed: u64,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let mean_vip = v.mean_vip();
    let argmin = argmin_mean_vip(v);
    let k = v.n_predictors();
    let guard = 1.0 / (2.0 * k as f64);
    let mut result = SelectionResult {
        method: Method::RrBart,
        predictor_names: v.predictor_names.clone(),
        selected: Vec::new(),
        all_selected: false,
        degenerate: false,
        diagnostics: Diagnostics::Pooled {
            mean_vip: mean_vip.clone(),
            argmin,
            guard,
            pooled: Vec::new(),
        },
        seed,
        n_rows,
    };
    if mean_vip[argmin] > guard {
        result.selected = (0..k).collect();
        result.all_selected = true;
        return Ok(result);
    }
    let pooled = pool_rubins(v, alpha, n_eff(divisor, n_rows, v.n_draws()))?;
    // the reference sits at distance zero from itself; rounding can leave a
    // positive residue that a collapsed interval would otherwise select
    result.selected = (0..k).filter(|&j| j != argmin && pooled[j].excludes_zero()).collect();
    result.degenerate = pooled.iter().any(|p| p.degenerate);
    result.all_selected = result.selected.len() == k;
    result.diagnostics = Diagnostics::Pooled {
        mean_vip,
        argmin,
        guard,
        pooled,
    };
    Ok(result)
}

/// Full RR-BART: impute, fit, guard, pool, select.
pub fn rr_bart_select(dm: &DataMatrix, params: &SelectionParams, seed: u64) -> Result<SelectionResult> {
    check_alpha(params.alpha)?;
    let v = rr_bart_draws(dm, params, seed)?;
    rr_bart_from_draws(&v, params.alpha, params.within_divisor, dm.n_rows(), seed)
}

/// Keeps predictors whose mean VIP is strictly above the median mean VIP.
pub fn rr_median_baseline(v: &VipDraws) -> Result<SelectionResult> {
    let k = v.n_predictors();
    if k < 2 {
        return Err(Error::InvalidInput("median split needs K >= 2".into()));
    }
    let mean_vip = v.mean_vip();
    let mut sorted = mean_vip.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = quantile_sorted(&sorted, 0.5);
    let selected: Vec<usize> = (0..k).filter(|&j| mean_vip[j] > median).collect();
    Ok(SelectionResult {
        method: Method::RrMedian,
        predictor_names: v.predictor_names.clone(),
        all_selected: false,
        selected,
        degenerate: false,
        diagnostics: Diagnostics::Median { mean_vip, median },
        seed: 0,
        n_rows: 0,
    })
}

/// Merges all `M * P` distance draws per predictor and keeps those whose
/// `alpha` quantile is above zero.
pub fn rr_pooled_draws_select(v: &VipDraws, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    if v.n_imputations() * v.n_draws() < 20 {
        return Err(Error::InvalidInput("pooled draws need M * P >= 20".into()));
    }
    let mean_vip = v.mean_vip();
    let floor = mean_vip[argmin_mean_vip(v)];
    let mut lower = Vec::with_capacity(v.k);
    let mut selected = Vec::new();
    for k in 0..v.k {
        let mut d: Vec<f64> = (0..v.m)
            .flat_map(|m| (0..v.p).map(move |p| (m, p)))
            .map(|(m, p)| v.get(k, m, p) - floor)
            .collect();
        d.sort_by(|a, b| a.total_cmp(b));
        let q = quantile_sorted(&d, alpha);
        if q > 0.0 {
            selected.push(k);
        }
        lower.push(q);
    }
    Ok(SelectionResult {
        method: Method::RrPooledDraws,
        predictor_names: v.predictor_names.clone(),
        all_selected: selected.len() == v.k,
        selected,
        degenerate: false,
        diagnostics: Diagnostics::PooledDraws { mean_vip, lower },
        seed: 0,
        n_rows: 0,
    })
}

/// Maps selected column indices to predictor positions.
fn to_positions(dm: &DataMatrix, columns: &[usize]) -> Vec<usize> {
    let preds = dm.predictor_indices();
    let mut out: Vec<usize> = columns
        .iter()
        .filter_map(|c| preds.iter().position(|p| p == c))
        .collect();
    out.sort_unstable();
    out
}

/// Selector for a single complete (or MIA-routable) dataset.
pub fn select_single(
    dm: &DataMatrix,
    engine: Engine,
    mia: bool,
    params: &SelectionParams,
    seed: u64,
) -> Result<SelectionResult> {
    let outcome = dm.outcome_index();
    let names = dm.predictor_names();
    match engine {
        Engine::Bart => {
            let bart = BartParams {
                mia,
                ..params.bart.clone()
            };
            let sel = permutation_select(dm, outcome, &bart, params.n_perm, params.alpha, seed)?;
            Ok(SelectionResult {
                method: if mia { Method::MiaBart } else { Method::Bart },
                predictor_names: names,
                all_selected: sel.selected.len() == sel.observed.len(),
                selected: sel.selected,
                degenerate: false,
                diagnostics: Diagnostics::Permutation {
                    observed: sel.observed,
                    null_quantile: sel.null_quantile,
                },
                seed,
                n_rows: dm.n_rows(),
            })
        }
        Engine::Gbt => {
            let mut rfe = params.rfe.clone();
            rfe.gbt.mia = mia;
            let res = rfe_select(dm, outcome, &rfe, seed)?;
            let selected = to_positions(dm, &res.selected);
            Ok(SelectionResult {
                method: if mia { Method::MiaXgb } else { Method::Xgb },
                all_selected: selected.len() == names.len(),
                predictor_names: names,
                selected,
                degenerate: false,
                diagnostics: Diagnostics::Elimination {
                    path: res.steps.iter().map(|s| (s.features.len(), s.cv_loss)).collect(),
                },
                seed,
                n_rows: dm.n_rows(),
            })
        }
    }
}

/// Per-dataset selections over bootstrap-imputed data, thresholded later.
#[derive(Debug, Clone, PartialEq)]
pub struct BiRun {
    pub engine: Engine,
    pub predictor_names: Vec<String>,
    /// Selected predictor positions per bootstrap dataset.
    pub per_dataset: Vec<Vec<usize>>,
    pub seed: u64,
    pub n_rows: usize,
}

impl BiRun {
    pub fn b(&self) -> usize {
        self.per_dataset.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.predictor_names.len()];
        for set in &self.per_dataset {
            for &k in set {
                f[k] += 1.0;
            }
        }
        let b = self.b() as f64;
        f.iter_mut().for_each(|x| *x /= b);
        f
    }

    /// Predictors chosen in at least `ceil(pi * B)` datasets.
    pub fn threshold(&self, pi: f64) -> Result<SelectionResult> {
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::InvalidParameter(format!("pi = {pi} not in (0, 1]")));
        }
        let b = self.b();
        // guard against pi * B landing just above an integer through rounding
        let threshold = ((pi * b as f64) - 1e-9).ceil().max(1.0) as usize;
        let mut counts = vec![0usize; self.predictor_names.len()];
        for set in &self.per_dataset {
            for &k in set {
                counts[k] += 1;
            }
        }
        let selected: Vec<usize> = (0..counts.len()).filter(|&k| counts[k] >= threshold).collect();
        Ok(SelectionResult {
            method: match self.engine {
                Engine::Bart => Method::BiBart,
                Engine::Gbt => Method::BiXgb,
            },
            predictor_names: self.predictor_names.clone(),
            all_selected: selected.len() == counts.len(),
            selected,
            degenerate: false,
            diagnostics: Diagnostics::Frequencies {
                frequency: self.frequencies(),
                b,
                pi,
                threshold,
            },
            seed: self.seed,
            n_rows: self.n_rows,
        })
    }
}

/// Runs the base selector on every bootstrap-imputed dataset.
pub fn bi_run(sets: &BootstrapImputedSet, engine: Engine, params: &SelectionParams, seed: u64) -> Result<BiRun> {
    let b = sets.datasets.len();
    if b < 10 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap selection needs B >= 10, got {b}"
        )));
    }
    let first = &sets.datasets[0].completed;
    let per_dataset: Vec<Vec<usize>> = sets
        .datasets
        .par_iter()
        .enumerate()
        .map(|(i, set)| {
            select_single(&set.completed, engine, false, params, derive_path(seed, &[3, i as u64])).map(|r| r.selected)
        })
        .collect::<Result<_>>()?;
    Ok(BiRun {
        engine,
        predictor_names: first.predictor_names(),
        per_dataset,
        seed,
        n_rows: first.n_rows(),
    })
}

/// Bootstrap-imputation selection at threshold `pi`.
pub fn bi_select(
    sets: &BootstrapImputedSet,
    engine: Engine,
    pi: f64,
    params: &SelectionParams,
    seed: u64,
) -> Result<SelectionResult> {
    bi_run(sets, engine, params, seed)?.threshold(pi)
}

/// Resamples, imputes and runs the base selector; threshold the result with
/// [`BiRun::threshold`].
pub fn bi_run_from_data(dm: &DataMatrix, engine: Engine, params: &SelectionParams, seed: u64) -> Result<BiRun> {
    let sets = bootstrap_impute(dm, params.b_bootstrap, &params.impute, derive_seed(seed, 4))?;
    bi_run(&sets, engine, params, derive_seed(seed, 5))
}

/// Selection with MIA splits handling covariate holes. Outcome holes are
/// dropped or forest-imputed first.
pub fn mia_select(
    dm: &DataMatrix,
    engine: Engine,
    y_mode: OutcomeMode,
    params: &SelectionParams,
    seed: u64,
) -> Result<SelectionResult> {
    let outcome = dm.outcome_index();
    let data = match y_mode {
        OutcomeMode::ExcludeY => {
            let rows: Vec<usize> = (0..dm.n_rows()).filter(|&i| dm.is_observed(i, outcome)).collect();
            if rows.len() < MIN_ROWS {
                return Err(Error::InvalidInput(format!(
                    "only {} rows have an observed outcome; need at least {MIN_ROWS}",
                    rows.len()
                )));
            }
            dm.select_rows(&rows)?
        }
        OutcomeMode::ImputeY => {
            if dm.column_has_missing(outcome) {
                let imp = iterative_forest_impute(dm, &params.impute, derive_seed(seed, 6))?;
                dm.with_column(outcome, imp.completed.column(outcome).to_vec(), vec![true; dm.n_rows()])?
            } else {
                dm.clone()
            }
        }
    };
    let mut res = select_single(&data, engine, true, params, derive_seed(seed, 7))?;
    res.seed = seed;
    Ok(res)
}

/// Selection on the fully observed rows only.
pub fn complete_case_select(
    dm: &DataMatrix,
    engine: Engine,
    params: &SelectionParams,
    seed: u64,
) -> Result<SelectionResult> {
    let rows = dm.complete_rows();
    if rows.len() < MIN_ROWS {
        return Err(Error::InvalidInput(format!(
            "only {} complete rows; need at least {MIN_ROWS}",
            rows.len()
        )));
    }
    let data = dm.select_rows(&rows)?;
    let mut res = select_single(&data, engine, false, params, seed)?;
    res.method = match engine {
        Engine::Bart => Method::CompleteCaseBart,
        Engine::Gbt => Method::CompleteCaseXgb,
    };
    Ok(res)
}

/// A named method with the settings it needs, runnable on raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    pub method: Method,
    /// Selection threshold for the bootstrap-imputation methods.
    pub pi: Option<f64>,
    /// Outcome handling for the MIA methods.
    pub outcome_mode: OutcomeMode,
    pub params: SelectionParams,
}

impl Selector {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            pi: None,
            outcome_mode: OutcomeMode::ImputeY,
            params: SelectionParams::default(),
        }
    }

    pub fn with_pi(mut self, pi: f64) -> Self {
        self.pi = Some(pi);
        self
    }

    /// Display label; includes `pi` or the outcome mode where they apply.
    pub fn label(&self) -> String {
        match (self.method, self.pi) {
            (Method::BiBart | Method::BiXgb, Some(pi)) => format!("{}(pi={pi})", self.method),
            (Method::MiaBart | Method::MiaXgb, _) => match self.outcome_mode {
                OutcomeMode::ImputeY => format!("{}(impute-y)", self.method),
                OutcomeMode::ExcludeY => format!("{}(exclude-y)", self.method),
            },
            _ => self.method.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.params.alpha)?;
        match (self.method, self.pi) {
            (Method::BiBart | Method::BiXgb, None) => {
                Err(Error::Config(format!("method {} requires a pi threshold", self.method)))
            }
            (Method::BiBart | Method::BiXgb, Some(pi)) if !(pi > 0.0 && pi <= 1.0) => {
                Err(Error::Config(format!("pi = {pi} not in (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn run(&self, dm: &DataMatrix, seed: u64) -> Result<SelectionResult> {
        self.validate()?;
        let p = &self.params;
        let mut res = match self.method {
            Method::RrBart => rr_bart_select(dm, p, seed)?,
            Method::RrMedian => rr_median_baseline(&rr_bart_draws(dm, p, seed)?)?,
            Method::RrPooledDraws => rr_pooled_draws_select(&rr_bart_draws(dm, p, seed)?, p.alpha)?,
            Method::BiBart | Method::BiXgb => {
                let run = bi_run_from_data(dm, self.method.engine(), p, seed)?;
                run.threshold(self.pi.unwrap_or(1.0))?
            }
            Method::MiaBart | Method::MiaXgb => mia_select(dm, self.method.engine(), self.outcome_mode, p, seed)?,
            Method::CompleteCaseBart | Method::CompleteCaseXgb => {
                complete_case_select(dm, self.method.engine(), p, seed)?
            }
            Method::Bart | Method::Xgb => {
                if dm.has_missing() {
                    return Err(Error::InvalidInput(format!(
                        "method {} needs fully observed data",
                        self.method
                    )));
                }
                select_single(dm, self.method.engine(), false, p, seed)?
            }
        };
        res.method = self.method;
        res.seed = seed;
        if res.n_rows == 0 {
            res.n_rows = dm.n_rows();
        }
        Ok(res)
    }
}
