#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rrbart::{ColumnKind, ColumnMeta, DataMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Continuous predictors `x1..` followed by a binary outcome `y`.
pub fn matrix(predictors: Vec<Vec<f64>>, y: Vec<f64>) -> DataMatrix {
    let mut cols: Vec<ColumnMeta> = (0..predictors.len())
        .map(|j| ColumnMeta::predictor(format!("x{}", j + 1), ColumnKind::Continuous))
        .collect();
    cols.push(ColumnMeta::outcome("y"));
    let mut values = predictors;
    values.push(y);
    DataMatrix::complete(cols, values).unwrap()
}

/// Same with NaN cells treated as missing.
pub fn matrix_with_nans(predictors: Vec<Vec<f64>>, y: Vec<f64>) -> DataMatrix {
    let mut cols: Vec<ColumnMeta> = (0..predictors.len())
        .map(|j| ColumnMeta::predictor(format!("x{}", j + 1), ColumnKind::Continuous))
        .collect();
    cols.push(ColumnMeta::outcome("y"));
    let mut values = predictors;
    values.push(y);
    let observed = values.iter().map(|c| c.iter().map(|v| !v.is_nan()).collect()).collect();
    DataMatrix::new(cols, values, observed).unwrap()
}
