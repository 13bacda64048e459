//! Selection-quality metrics, the split-half cross-validated AUC protocol,
//! calibration bins and per-predictor power.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bart::{fit_bart_probit, predict_bart, BartParams};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::impute::{iterative_forest_impute, ImputeParams};
use crate::rng::{derive_path, derive_seed, rng_from_seed};
use crate::selection::{Engine, SelectionResult, Selector};
use crate::stats::quantile;
use crate::trees::{fit_gbt, GbtParams};

/// Precision, recall, F1 and Type I error of one selection. `None` marks an
/// undefined value (nothing selected, or no noise predictors).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
    pub type_i: Option<f64>,
}

/// Scores `selected` against the truly useful set, both as 0-based positions
/// among `k_total` predictors.
pub fn selection_metrics(selected: &[usize], truth: &[usize], k_total: usize) -> Result<MetricReport> {
    if let Some(&bad) = truth.iter().chain(selected).find(|&&k| k >= k_total) {
        return Err(Error::InvalidInput(format!(
            "predictor {bad} out of range for K = {k_total}"
        )));
    }
    let mut is_true = vec![false; k_total];
    for &k in truth {
        is_true[k] = true;
    }
    let mut is_sel = vec![false; k_total];
    for &k in selected {
        is_sel[k] = true;
    }
    let n_sel = is_sel.iter().filter(|&&s| s).count();
    let n_true = is_true.iter().filter(|&&t| t).count();
    let tp = (0..k_total).filter(|&k| is_sel[k] && is_true[k]).count();
    let fp = n_sel - tp;
    let precision = (n_sel > 0).then(|| tp as f64 / n_sel as f64);
    let recall = (n_true > 0).then(|| tp as f64 / n_true as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => 2.0 * p * r / (p + r),
        _ => 0.0,
    };
    let n_noise = k_total - n_true;
    let type_i = (n_noise > 0).then(|| fp as f64 / n_noise as f64);
    Ok(MetricReport {
        precision,
        recall,
        f1,
        type_i,
    })
}

/// Area under the ROC curve by the Mann-Whitney statistic; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("AUC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Per-repeat cross-validated AUCs and their percentile summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucDistribution {
    pub values: Vec<f64>,
    /// Repeats whose selection was empty (AUC recorded as 0.5).
    pub empty: Vec<bool>,
    /// Selection size per repeat.
    pub n_selected: Vec<usize>,
    pub mean: f64,
    /// 2.5th percentile over repeats.
    pub lower: f64,
    /// 97.5th percentile over repeats.
    pub upper: f64,
}

impl AucDistribution {
    pub fn new(values: Vec<f64>, empty: Vec<bool>, n_selected: Vec<usize>) -> Result<Self> {
        if values.is_empty() || values.len() != empty.len() || values.len() != n_selected.len() {
            return Err(Error::InvalidInput("AUC repeats are empty or ragged".into()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            lower: quantile(&values, 0.025),
            upper: quantile(&values, 0.975),
            mean,
            values,
            empty,
            n_selected,
        })
    }

    pub fn repeats(&self) -> usize {
        self.values.len()
    }

    pub fn empty_count(&self) -> usize {
        self.empty.iter().filter(|&&e| e).count()
    }

    /// Per-repeat CSV: `repeat,auc,n_selected,empty_selection`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Runtime(e.to_string()))?;
        w.write_record(["repeat", "auc", "n_selected", "empty_selection"])
            .map_err(|e| Error::Runtime(e.to_string()))?;
        for r in 0..self.values.len() {
            w.write_record([
                (r + 1).to_string(),
                self.values[r].to_string(),
                self.n_selected[r].to_string(),
                self.empty[r].to_string(),
            ])
            .map_err(|e| Error::Runtime(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Models used to score a selection on the held-out half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictParams {
    pub bart: BartParams,
    pub gbt: GbtParams,
    pub impute: ImputeParams,
}

impl Default for PredictParams {
    fn default() -> Self {
        Self {
            bart: BartParams::prediction(),
            gbt: GbtParams::default(),
            impute: ImputeParams::default(),
        }
    }
}

/// Splits rows in two, stratified on the outcome (observed events, observed
/// non-events and missing outcomes are dealt out separately).
pub fn stratified_halves(dm: &DataMatrix, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let y = dm.outcome_index();
    let mut strata: [Vec<usize>; 3] = Default::default();
    for i in 0..dm.n_rows() {
        let s = match dm.get(i, y) {
            Some(v) if v > 0.5 => 0,
            Some(_) => 1,
            None => 2,
        };
        strata[s].push(i);
    }
    let mut rng = rng_from_seed(seed);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    let mut toggle = false;
    for s in strata.iter_mut() {
        s.shuffle(&mut rng);
        for &i in s.iter() {
            if toggle {
                second.push(i);
            } else {
                first.push(i);
            }
            toggle = !toggle;
        }
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

/// Fits the engine on `train` restricted to `selected` and returns predicted
/// event probabilities for `rows` of `test`. Both matrices must be complete.
pub fn holdout_predictions(
    train: &DataMatrix,
    test: &DataMatrix,
    rows: &[usize],
    selected: &[usize],
    engine: Engine,
    predict: &PredictParams,
    seed: u64,
) -> Result<Vec<f64>> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("no predictors to fit".into()));
    }
    let tr = train.select_predictors(selected)?;
    let te = test.select_predictors(selected)?;
    match engine {
        Engine::Bart => {
            let params = BartParams {
                keep_trees: true,
                mia: false,
                ..predict.bart.clone()
            };
            let post = fit_bart_probit(&tr, tr.outcome_index(), &params, seed)?;
            Ok(predict_bart(&post, &te, rows)?.mean)
        }
        Engine::Gbt => {
            let params = GbtParams {
                mia: false,
                ..predict.gbt.clone()
            };
            let model = fit_gbt(&tr, tr.outcome_index(), &params, seed)?;
            let all = model.predict(&te);
            Ok(rows.iter().map(|&i| all[i]).collect())
        }
    }
}

/// One split-half draw: halves, imputed halves, scored rows and labels.
struct Split {
    train: DataMatrix,
    train_imp: DataMatrix,
    test_imp: DataMatrix,
    rows: Vec<usize>,
    labels: Vec<bool>,
}

/// Stratified halves with each half singly imputed.
fn make_split(dm: &DataMatrix, impute: &ImputeParams, seed: u64) -> Result<Split> {
    let y = dm.outcome_index();
    let (h1, h2) = stratified_halves(dm, derive_seed(seed, 0));
    let train = dm.select_rows(&h1)?;
    let test = dm.select_rows(&h2)?;
    let train_imp = iterative_forest_impute(&train, impute, derive_seed(seed, 2))?.completed;
    let test_imp = iterative_forest_impute(&test, impute, derive_seed(seed, 3))?.completed;
    // imputed outcomes are not evidence; score observed ones only
    let rows: Vec<usize> = (0..test.n_rows()).filter(|&i| test.is_observed(i, y)).collect();
    let labels: Vec<bool> = rows.iter().map(|&i| test.column(y)[i] > 0.5).collect();
    Ok(Split {
        train,
        train_imp,
        test_imp,
        rows,
        labels,
    })
}

/// Split-half cross-validated AUC for several selections made on the same
/// training half. `select` returns one predictor set per variant; the result
/// holds one distribution per variant.
///
/// Per repeat: stratified halves; select on the first half; singly impute
/// each half; fit `engine` on the imputed first half restricted to the
/// selection; score held-out rows whose outcome was observed.
pub fn cv_auc_with<F>(
    dm: &DataMatrix,
    engine: Engine,
    predict: &PredictParams,
    repeats: usize,
    seed: u64,
    select: F,
) -> Result<Vec<AucDistribution>>
where
    F: Fn(&DataMatrix, u64) -> Result<Vec<Vec<usize>>> + Sync,
{
    if dm.n_rows() < 100 {
        return Err(Error::InvalidInput(format!(
            "cross-validated AUC needs n >= 100, got {}",
            dm.n_rows()
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let per_repeat: Vec<Vec<(f64, bool, usize)>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let rs = derive_path(seed, &[r as u64]);
            let split = make_split(dm, &predict.impute, rs)?;
            let sets = select(&split.train, derive_seed(rs, 1))?;
            sets.iter()
                .enumerate()
                .map(|(v, sel)| {
                    let a = if sel.is_empty() {
                        0.5
                    } else {
                        let probs = holdout_predictions(
                            &split.train_imp,
                            &split.test_imp,
                            &split.rows,
                            sel,
                            engine,
                            predict,
                            derive_path(rs, &[4, v as u64]),
                        )?;
                        auc(&probs, &split.labels)?
                    };
                    Ok((a, sel.is_empty(), sel.len()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n_variants = per_repeat[0].len();
    if per_repeat.iter().any(|r| r.len() != n_variants) {
        return Err(Error::Runtime("selector returned a varying number of variants".into()));
    }
    (0..n_variants)
        .map(|v| {
            AucDistribution::new(
                per_repeat.iter().map(|r| r[v].0).collect(),
                per_repeat.iter().map(|r| r[v].1).collect(),
                per_repeat.iter().map(|r| r[v].2).collect(),
            )
        })
        .collect()
}

/// Cross-validated AUC of one selector, scored with its matching engine.
pub fn cv_auc(
    dm: &DataMatrix,
    selector: &Selector,
    predict: &PredictParams,
    repeats: usize,
    seed: u64,
) -> Result<AucDistribution> {
    selector.validate()?;
    let mut out = cv_auc_with(dm, selector.method.engine(), predict, repeats, seed, |train, s| {
        Ok(vec![selector.run(train, s)?.selected])
    })?;
    Ok(out.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub mean_predicted: f64,
    pub observed_rate: f64,
    pub count: usize,
}

/// Equal-frequency calibration bins over sorted predictions. Tied
/// predictions never straddle a bin edge, so heavy ties yield fewer bins.
pub fn calibration_curve(probs: &[f64], outcomes: &[bool], bins: usize) -> Result<Vec<CalibrationBin>> {
    if probs.len() != outcomes.len() {
        return Err(Error::InvalidInput(
            "probabilities and outcomes differ in length".into(),
        ));
    }
    if bins < 2 {
        return Err(Error::InvalidParameter("calibration needs at least 2 bins".into()));
    }
    let n = probs.len();
    if n < bins {
        return Err(Error::InvalidInput(format!("{n} predictions cannot fill {bins} bins")));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut out = Vec::with_capacity(bins);
    let mut start = 0;
    for b in 1..=bins {
        if start >= n {
            break;
        }
        let mut end = (b * n / bins).max(start + 1);
        while end < n && probs[idx[end]] == probs[idx[end - 1]] {
            end += 1;
        }
        if b == bins {
            end = n;
        }
        let slice = &idx[start..end];
        let count = slice.len();
        out.push(CalibrationBin {
            mean_predicted: slice.iter().map(|&i| probs[i]).sum::<f64>() / count as f64,
            observed_rate: slice.iter().filter(|&&i| outcomes[i]).count() as f64 / count as f64,
            count,
        });
        start = end;
    }
    Ok(out)
}

/// Held-out calibration of a selector: select on one stratified half, fit
/// the matching engine on the imputed half, bin predictions for the other
/// half's observed outcomes.
pub fn holdout_calibration(
    dm: &DataMatrix,
    selector: &Selector,
    predict: &PredictParams,
    bins: usize,
    seed: u64,
) -> Result<(SelectionResult, Vec<CalibrationBin>)> {
    selector.validate()?;
    let split = make_split(dm, &predict.impute, seed)?;
    let sel = selector.run(&split.train, derive_seed(seed, 1))?;
    if sel.selected.is_empty() {
        return Err(Error::Undefined(
            "selector kept no predictors; nothing to calibrate".into(),
        ));
    }
    let probs = holdout_predictions(
        &split.train_imp,
        &split.test_imp,
        &split.rows,
        &sel.selected,
        selector.method.engine(),
        predict,
        derive_seed(seed, 4),
    )?;
    let curve = calibration_curve(&probs, &split.labels, bins)?;
    Ok((sel, curve))
}

pub fn write_calibration_csv(bins: &[CalibrationBin], path: impl AsRef<Path>) -> Result<()> {
    write_rows(bins, path)
}

/// Selection frequency of one predictor across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub predictor: String,
    pub useful: bool,
    pub frequency: f64,
}

/// Fraction of replications selecting each predictor.
pub fn power_table(results: &[SelectionResult], truth: &[usize]) -> Result<Vec<PowerRow>> {
    if results.len() < 2 {
        return Err(Error::InvalidInput("power needs at least 2 replications".into()));
    }
    let names = &results[0].predictor_names;
    if results.iter().any(|r| &r.predictor_names != names) {
        return Err(Error::InvalidInput("replications disagree on predictors".into()));
    }
    let mut counts = vec![0usize; names.len()];
    for r in results {
        for &k in &r.selected {
            counts[k] += 1;
        }
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, name)| PowerRow {
            predictor: name.clone(),
            useful: truth.contains(&k),
            frequency: counts[k] as f64 / results.len() as f64,
        })
        .collect())
}

/// Mean with its Monte Carlo standard error `sd / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    /// Summary of the finite values; `None` when fewer than one remains.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Some(Self { mean, se, n })
    }
}

/// One row of an aggregated metric table. Empty cells mean undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub method: String,
    pub replications: usize,
    pub failed: usize,
    pub auc_mean: Option<f64>,
    pub auc_se: Option<f64>,
    pub auc_lower: Option<f64>,
    pub auc_upper: Option<f64>,
    pub precision_mean: Option<f64>,
    pub precision_se: Option<f64>,
    pub recall_mean: Option<f64>,
    pub recall_se: Option<f64>,
    pub f1_mean: Option<f64>,
    pub f1_se: Option<f64>,
    pub type_i_mean: Option<f64>,
    pub type_i_se: Option<f64>,
    /// Replications where precision was undefined (nothing selected).
    pub precision_undefined: usize,
}

impl MetricRow {
    /// Aggregates per-replication reports; `aucs` holds each replication's
    /// mean cross-validated AUC when it was computed.
    pub fn aggregate(
        scenario: impl Into<String>,
        method: impl Into<String>,
        reports: &[MetricReport],
        aucs: &[f64],
        failed: usize,
    ) -> Self {
        let split = |s: Option<MeanSe>| (s.map(|m| m.mean), s.and_then(|m| m.se.is_finite().then_some(m.se)));
        let (precision_mean, precision_se) = split(MeanSe::of(reports.iter().filter_map(|r| r.precision)));
        let (recall_mean, recall_se) = split(MeanSe::of(reports.iter().filter_map(|r| r.recall)));
        let (f1_mean, f1_se) = split(MeanSe::of(reports.iter().map(|r| r.f1)));
        let (type_i_mean, type_i_se) = split(MeanSe::of(reports.iter().filter_map(|r| r.type_i)));
        let (auc_mean, auc_se) = split(MeanSe::of(aucs.iter().copied()));
        let (auc_lower, auc_upper) = if aucs.is_empty() {
            (None, None)
        } else {
            (Some(quantile(aucs, 0.025)), Some(quantile(aucs, 0.975)))
        };
        Self {
            scenario: scenario.into(),
            method: method.into(),
            replications: reports.len(),
            failed,
            auc_mean,
            auc_se,
            auc_lower,
            auc_upper,
            precision_mean,
            precision_se,
            recall_mean,
            recall_se,
            f1_mean,
            f1_se,
            type_i_mean,
            type_i_se,
            precision_undefined: reports.iter().filter(|r| r.precision.is_none()).count(),
        }
    }
}

pub fn write_metric_table(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path)
}

pub fn write_power_csv(rows: &[PowerRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, path)
}

/// Serializes records with a header row.
pub fn write_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Runtime(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
