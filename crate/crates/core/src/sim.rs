//! Synthetic benchmark data: ten useful predictors with correlated,
//! partly nonlinear and interacting effects on a binary outcome, noise
//! predictors, and MAR amputation by weighted sum scores passed through a
//! shifted logistic function.

use std::fmt;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{write_csv, ColumnKind, ColumnMeta, DataMatrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::logistic;

pub const N_USEFUL: usize = 10;
pub const SAMPLE_SIZES: [usize; 4] = [300, 650, 1000, 5000];
pub const NOISE_COUNTS: [usize; 3] = [10, 20, 40];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissingPreset {
    /// 20% of outcomes missing, 40% of rows incomplete.
    #[serde(rename = "Y20_overall40")]
    Y20Overall40,
    /// 40% of outcomes missing, 60% of rows incomplete.
    #[serde(rename = "Y40_overall60")]
    Y40Overall60,
}

impl MissingPreset {
    pub fn outcome_proportion(self) -> f64 {
        match self {
            MissingPreset::Y20Overall40 => 0.20,
            MissingPreset::Y40Overall60 => 0.40,
        }
    }

    /// Target share of rows with at least one missing cell.
    pub fn overall_proportion(self) -> f64 {
        match self {
            MissingPreset::Y20Overall40 => 0.40,
            MissingPreset::Y40Overall60 => 0.60,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            MissingPreset::Y20Overall40 => "Y20_overall40",
            MissingPreset::Y40Overall60 => "Y40_overall60",
        }
    }
}

impl fmt::Display for MissingPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for MissingPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Y20_overall40" => Ok(MissingPreset::Y20Overall40),
            "Y40_overall60" => Ok(MissingPreset::Y40Overall60),
            _ => Err(Error::Config(format!(
                "unknown missingness preset `{s}` (expected Y20_overall40 or Y40_overall60)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaReading {
    /// `Gamma(4, 6)` as shape 4, rate 6 (mean 2/3).
    ShapeRate,
    /// `Gamma(4, 6)` as shape 4, scale 6 (mean 24).
    ShapeScale,
}

/// Weights of one amputation pattern over the always-observed drivers
/// `x1..x6` (standardized before weighting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverWeights {
    pub target: String,
    pub weights: [f64; 6],
}

/// Tunable pieces of the generator without a fixed reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub gamma: GammaReading,
    /// Scale of the standardized upstream sums in the means of `x7..x10`.
    pub dependence: f64,
    /// Additive constants in the means of `x7..x10`.
    pub intercepts: [f64; 4],
    pub amputation: Vec<DriverWeights>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let w = |target: &str, weights: [f64; 6]| DriverWeights {
            target: target.into(),
            weights,
        };
        Self {
            gamma: GammaReading::ShapeRate,
            dependence: 0.4,
            intercepts: [0.0; 4],
            amputation: vec![
                w("x7", [1.2, 0.0, 1.2, 0.0, 0.0, 0.0]),
                w("x8", [0.0, 1.2, 0.0, 1.2, 0.0, 0.0]),
                w("x9", [0.0, 0.0, 0.0, 0.0, 1.2, 1.2]),
                w("x10", [1.2, 0.0, 0.0, 1.2, 0.0, 0.0]),
                w("y", [0.0, 0.0, 1.2, 0.0, 1.2, 0.0]),
            ],
        }
    }
}

/// One simulation cell. `n_noise = 0` is the all-useful extreme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub n_noise: usize,
    pub preset: MissingPreset,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(n: usize, n_noise: usize, preset: MissingPreset, seed: u64) -> Self {
        Self {
            n,
            n_noise,
            preset,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !SAMPLE_SIZES.contains(&self.n) {
            return Err(Error::Config(format!("sample size {} not in {SAMPLE_SIZES:?}", self.n)));
        }
        let legal = NOISE_COUNTS.contains(&self.n_noise) || (self.n_noise == 0 && self.n == 1000);
        if !legal {
            return Err(Error::Config(format!(
                "{} noise predictors at n = {} is not a scenario of the grid",
                self.n_noise, self.n
            )));
        }
        Ok(())
    }

    /// Short label such as `n1000_noise40_Y40_overall60`.
    pub fn label(&self) -> String {
        format!("n{}_noise{}_{}", self.n, self.n_noise, self.preset)
    }

    pub fn n_predictors(&self) -> usize {
        N_USEFUL + self.n_noise
    }
}

/// The 24-cell grid plus the two no-noise extremes at n = 1000.
pub fn scenario_presets(seed: u64) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for &n in &SAMPLE_SIZES {
        for &k in &NOISE_COUNTS {
            for preset in [MissingPreset::Y20Overall40, MissingPreset::Y40Overall60] {
                out.push(ScenarioSpec::new(n, k, preset, seed));
            }
        }
    }
    for preset in [MissingPreset::Y20Overall40, MissingPreset::Y40Overall60] {
        out.push(ScenarioSpec::new(1000, 0, preset, seed));
    }
    out
}

/// `Pr(y = 1 | x1..x10)` of the benchmark outcome model.
pub fn outcome_probability(x: &[f64; 10]) -> f64 {
    logistic(linear_predictor(x))
}

pub fn linear_predictor(x: &[f64; 10]) -> f64 {
    let [x1, x2, x3, x4, x5, x6, x7, x8, x9, x10] = *x;
    -2.7 + 1.8 * x1 + 0.5 * x2 + 1.1 * x3 - 0.4 * x5.exp() - 0.4 * (x6 - 3.5).powi(2)
        + 0.3 * (x7 - 1.0).powi(3)
        + 1.1 * x8
        - 1.1 * x10
        + 5.0 * (0.1 * std::f64::consts::PI * x4 * x9).sin()
        - 0.4 * x5 * x10 * x10
        + 0.4 * x3 * x3 * x8
}

/// Complete data plus what generated it.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: DataMatrix,
    /// Names of the predictors that enter the outcome model.
    pub useful: Vec<String>,
    /// True `Pr(y = 1 | x)` per row.
    pub true_prob: Vec<f64>,
}

impl SimulatedData {
    /// Writes the data CSV and a truth sidecar `<path>.truth.csv` holding the
    /// true probabilities, with the useful set in its header comment.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_csv(&self.data, path)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".truth.csv");
        let mut text = format!("# useful: {}\nrow,true_prob\n", self.useful.join(","));
        for (i, p) in self.true_prob.iter().enumerate() {
            text.push_str(&format!("{},{p}\n", i + 1));
        }
        std::fs::write(&side, text).map_err(|e| Error::io(side, e))
    }
}

fn column_schema(n_noise: usize) -> Vec<ColumnMeta> {
    let mut cols = Vec::with_capacity(N_USEFUL + n_noise + 1);
    for j in 1..=N_USEFUL {
        let kind = if j <= 2 {
            ColumnKind::Binary
        } else {
            ColumnKind::Continuous
        };
        cols.push(ColumnMeta::predictor(format!("x{j}"), kind));
    }
    let half = n_noise / 2;
    for j in 1..=n_noise {
        let kind = if j <= n_noise - half {
            ColumnKind::Continuous
        } else {
            ColumnKind::Binary
        };
        cols.push(ColumnMeta::predictor(format!("noise{j}"), kind));
    }
    cols.push(ColumnMeta::outcome("y"));
    cols
}

/// Unit-variance combination of already standardized inputs.
fn upstream(zs: &[f64]) -> f64 {
    zs.iter().sum::<f64>() / (zs.len() as f64).sqrt()
}

/// Draws the complete benchmark data for a scenario.
pub fn generate_complete(spec: &ScenarioSpec, cfg: &GeneratorConfig) -> Result<SimulatedData> {
    spec.validate()?;
    generate_with(spec.n, spec.n_noise, cfg, spec.seed)
}

/// Same generator for any `n` and noise count (no grid check).
pub fn generate_with(n: usize, n_noise: usize, cfg: &GeneratorConfig, seed: u64) -> Result<SimulatedData> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut rng = rng_from_seed(derive_seed(seed, 0x5eed));
    let (gamma, g_mean, g_sd) = match cfg.gamma {
        GammaReading::ShapeRate => (Gamma::new(4.0, 1.0 / 6.0), 4.0 / 6.0, 2.0 / 6.0),
        GammaReading::ShapeScale => (Gamma::new(4.0, 6.0), 24.0, 12.0),
    };
    let gamma = gamma.map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let c = cfg.dependence;
    // sd of an x7..x10 draw whose mean has unit-variance upstream part
    let s = (1.0 + c * c).sqrt();
    let n_cols = N_USEFUL + n_noise + 1;
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(n); n_cols];
    let mut true_prob = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = [0.0; 10];
        x[0] = f64::from(rng.random_bool(0.5));
        x[1] = f64::from(rng.random_bool(0.5));
        for v in x.iter_mut().take(5).skip(2) {
            *v = rng.sample(StandardNormal);
        }
        x[5] = gamma.sample(&mut rng);
        let zb = |v: f64| (v - 0.5) / 0.5;
        let zg = (x[5] - g_mean) / g_sd;
        let e: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        x[6] = cfg.intercepts[0] + c * upstream(&[zb(x[0]), x[2]]) + e[0];
        x[7] = cfg.intercepts[1] + c * upstream(&[zb(x[1]), x[3], (x[6] - cfg.intercepts[0]) / s]) + e[1];
        x[8] = cfg.intercepts[2] + c * upstream(&[x[4], zg]) + e[2];
        x[9] = cfg.intercepts[3] + c * upstream(&[x[2], (x[7] - cfg.intercepts[1]) / s]) + e[3];
        for (j, &v) in x.iter().enumerate() {
            values[j].push(v);
        }
        let half = n_noise / 2;
        for j in 0..n_noise {
            let v = if j < n_noise - half {
                rng.sample(StandardNormal)
            } else {
                f64::from(rng.random_bool(0.5))
            };
            values[N_USEFUL + j].push(v);
        }
        let p = outcome_probability(&x);
        values[n_cols - 1].push(f64::from(rng.random::<f64>() < p));
        true_prob.push(p);
    }
    let data = DataMatrix::complete(column_schema(n_noise), values)?;
    Ok(SimulatedData {
        data,
        useful: (1..=N_USEFUL).map(|j| format!("x{j}")).collect(),
        true_prob,
    })
}

/// Removes values of `target` with probability `logistic(wss + shift)`,
/// where `wss` is the weighted sum of standardized drivers and the shift
/// makes the mean probability equal `proportion`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmputationPattern {
    pub target: usize,
    /// `(driver column, weight)` pairs.
    pub weights: Vec<(usize, f64)>,
    pub proportion: f64,
}

impl AmputationPattern {
    pub fn validate(&self, dm: &DataMatrix) -> Result<()> {
        if !(self.proportion > 0.0 && self.proportion < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "missing proportion {} is not attainable; it must lie in (0, 1)",
                self.proportion
            )));
        }
        if self.target >= dm.n_cols() {
            return Err(Error::InvalidParameter(format!(
                "target column {} out of range",
                self.target
            )));
        }
        if self.weights.iter().all(|&(_, w)| w == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pattern for `{}` has no nonzero weight",
                dm.column_meta(self.target).name
            )));
        }
        for &(d, w) in &self.weights {
            if d >= dm.n_cols() || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("bad driver ({d}, {w})")));
            }
            if d == self.target {
                return Err(Error::InvalidParameter("a pattern cannot drive its own target".into()));
            }
            if w != 0.0 && dm.column_has_missing(d) {
                return Err(Error::InvalidInput(format!(
                    "driver `{}` has missing values",
                    dm.column_meta(d).name
                )));
            }
        }
        Ok(())
    }

    /// Weighted sum score per row over standardized drivers.
    pub fn scores(&self, dm: &DataMatrix) -> Vec<f64> {
        let mut wss = vec![0.0; dm.n_rows()];
        for &(d, w) in &self.weights {
            if w == 0.0 {
                continue;
            }
            let col = dm.column(d);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            let sd = if sd > 0.0 { sd } else { 1.0 };
            for (s, &v) in wss.iter_mut().zip(col) {
                *s += w * (v - m) / sd;
            }
        }
        wss
    }

    /// Per-row missingness probabilities with the solved shift.
    pub fn probabilities(&self, dm: &DataMatrix) -> Vec<f64> {
        let wss = self.scores(dm);
        let shift = solve_shift(&wss, self.proportion);
        wss.iter().map(|&s| logistic(s + shift)).collect()
    }
}

/// Shift `b` with `mean(logistic(wss + b)) = target`, by bisection.
pub fn solve_shift(wss: &[f64], target: f64) -> f64 {
    let mean_at = |b: f64| wss.iter().map(|&s| logistic(s + b)).sum::<f64>() / wss.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Applies each pattern with independent Bernoulli draws per row.
pub fn ampute(dm: &DataMatrix, patterns: &[AmputationPattern], seed: u64) -> Result<DataMatrix> {
    for p in patterns {
        p.validate(dm)?;
        if dm.column_has_missing(p.target) {
            return Err(Error::InvalidInput(format!(
                "target `{}` already has missing values",
                dm.column_meta(p.target).name
            )));
        }
    }
    let mut targets: Vec<usize> = patterns.iter().map(|p| p.target).collect();
    targets.sort_unstable();
    if targets.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("one pattern per target".into()));
    }
    let probs: Vec<Vec<f64>> = patterns.iter().map(|p| p.probabilities(dm)).collect();
    let mut out = dm.clone();
    for (k, p) in patterns.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, p.target as u64));
        let observed: Vec<bool> = probs[k].iter().map(|&q| rng.random::<f64>() >= q).collect();
        out = out.with_column(p.target, dm.column(p.target).to_vec(), observed)?;
    }
    Ok(out)
}

fn patterns_from_config(dm: &DataMatrix, cfg: &GeneratorConfig) -> Result<Vec<AmputationPattern>> {
    let driver_cols: Vec<usize> = (1..=6)
        .map(|j| {
            dm.column_index(&format!("x{j}"))
                .ok_or_else(|| Error::Schema(format!("amputation driver `x{j}` not in data")))
        })
        .collect::<Result<_>>()?;
    cfg.amputation
        .iter()
        .map(|dw| {
            let target = dm
                .column_index(&dw.target)
                .ok_or_else(|| Error::Schema(format!("amputation target `{}` not in data", dw.target)))?;
            Ok(AmputationPattern {
                target,
                weights: driver_cols.iter().copied().zip(dw.weights).collect(),
                proportion: 0.5,
            })
        })
        .collect()
}

/// Patterns realizing a preset on this dataset: the outcome pattern gets its
/// fixed proportion; the predictor patterns share one proportion `q`,
/// solved so the expected share of incomplete rows hits the overall target.
pub fn preset_patterns(
    dm: &DataMatrix,
    preset: MissingPreset,
    cfg: &GeneratorConfig,
) -> Result<Vec<AmputationPattern>> {
    let mut patterns = patterns_from_config(dm, cfg)?;
    let outcome = dm.outcome_index();
    let y_at = patterns
        .iter()
        .position(|p| p.target == outcome)
        .ok_or_else(|| Error::Config("amputation config has no outcome pattern".into()))?;
    patterns[y_at].proportion = preset.outcome_proportion();
    let py = patterns[y_at].probabilities(dm);
    let wss: Vec<Vec<f64>> = patterns
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y_at)
        .map(|(_, p)| p.scores(dm))
        .collect();
    let overall_at = |q: f64| {
        let shifts: Vec<f64> = wss.iter().map(|w| solve_shift(w, q)).collect();
        let n = dm.n_rows();
        (0..n)
            .map(|i| {
                let stay = wss
                    .iter()
                    .zip(&shifts)
                    .map(|(w, &b)| 1.0 - logistic(w[i] + b))
                    .product::<f64>();
                1.0 - (1.0 - py[i]) * stay
            })
            .sum::<f64>()
            / n as f64
    };
    let target = preset.overall_proportion();
    let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
    if overall_at(lo) > target || overall_at(hi) < target {
        return Err(Error::InvalidParameter(format!(
            "overall missingness {target} is not attainable with these patterns"
        )));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if overall_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    for (i, p) in patterns.iter_mut().enumerate() {
        if i != y_at {
            p.proportion = q;
        }
    }
    Ok(patterns)
}

/// A generated and amputated replication of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub spec: ScenarioSpec,
    pub complete: SimulatedData,
    pub amputed: DataMatrix,
    pub patterns: Vec<AmputationPattern>,
}

/// Generates, then amputes, one replication.
pub fn simulate_scenario(spec: &ScenarioSpec, cfg: &GeneratorConfig) -> Result<ScenarioData> {
    let complete = generate_complete(spec, cfg)?;
    let patterns = preset_patterns(&complete.data, spec.preset, cfg)?;
    let amputed = ampute(&complete.data, &patterns, derive_seed(spec.seed, 0xa3))?;
    Ok(ScenarioData {
        spec: spec.clone(),
        complete,
        amputed,
        patterns,
    })
}
