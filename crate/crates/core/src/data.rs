//! Missing-aware data matrix, CSV and schema I/O, and missingness /
//! correlation diagnostics.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::auc;
use crate::stats::logistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Predictor,
    Outcome,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Binary => "binary",
            ColumnKind::Count => "count",
        })
    }
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnRole::Predictor => "predictor",
            ColumnRole::Outcome => "outcome",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl ColumnMeta {
    pub fn predictor(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            role: ColumnRole::Predictor,
        }
    }

    pub fn outcome(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Binary,
            role: ColumnRole::Outcome,
        }
    }
}

/// An `n x K` numeric table with a per-cell observation mask.
///
/// Storage is column-major. Unobserved cells hold `NaN` so that tree code
/// can test missingness on the value alone; the mask stays authoritative.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    columns: Vec<ColumnMeta>,
    n_rows: usize,
    values: Vec<Vec<f64>>,
    observed: Vec<Vec<bool>>,
    outcome: usize,
}

fn validate_schema(columns: &[ColumnMeta]) -> Result<usize> {
    if columns.len() < 2 {
        return Err(Error::Schema(format!("need at least 2 columns, got {}", columns.len())));
    }
    let outcomes: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role == ColumnRole::Outcome)
        .map(|(i, _)| i)
        .collect();
    if outcomes.len() != 1 {
        return Err(Error::Schema(format!(
            "exactly one outcome column required, found {}",
            outcomes.len()
        )));
    }
    let outcome = outcomes[0];
    if columns[outcome].kind != ColumnKind::Binary {
        return Err(Error::Schema(format!(
            "outcome `{}` must be binary",
            columns[outcome].name
        )));
    }
    let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Schema(format!("duplicate column name `{}`", w[0])));
    }
    Ok(outcome)
}

impl DataMatrix {
    /// Builds a matrix from column vectors and matching observation masks.
    pub fn new(columns: Vec<ColumnMeta>, mut values: Vec<Vec<f64>>, observed: Vec<Vec<bool>>) -> Result<Self> {
        let outcome = validate_schema(&columns)?;
        if values.len() != columns.len() || observed.len() != columns.len() {
            return Err(Error::InvalidInput(
                "values/mask column count does not match schema".into(),
            ));
        }
        let n_rows = values[0].len();
        if n_rows == 0 {
            return Err(Error::InvalidInput("data matrix has no rows".into()));
        }
        for (j, (col, mask)) in values.iter_mut().zip(&observed).enumerate() {
            if col.len() != n_rows || mask.len() != n_rows {
                return Err(Error::InvalidInput(format!(
                    "column `{}` has inconsistent length",
                    columns[j].name
                )));
            }
            for (i, (v, &obs)) in col.iter_mut().zip(mask).enumerate() {
                if !obs {
                    *v = f64::NAN;
                    continue;
                }
                if !v.is_finite() {
                    return Err(Error::Domain {
                        row: i + 1,
                        column: columns[j].name.clone(),
                        value: v.to_string(),
                        kind: "finite numeric",
                    });
                }
                if columns[j].kind == ColumnKind::Binary && *v != 0.0 && *v != 1.0 {
                    return Err(Error::Domain {
                        row: i + 1,
                        column: columns[j].name.clone(),
                        value: v.to_string(),
                        kind: "binary",
                    });
                }
            }
        }
        Ok(Self {
            columns,
            n_rows,
            values,
            observed,
            outcome,
        })
    }

    /// Fully observed matrix.
    pub fn complete(columns: Vec<ColumnMeta>, values: Vec<Vec<f64>>) -> Result<Self> {
        let observed = values.iter().map(|c| vec![true; c.len()]).collect();
        Self::new(columns, values, observed)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column_meta(&self, j: usize) -> &ColumnMeta {
        &self.columns[j]
    }

    /// Raw column values; unobserved cells are `NaN`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn observed(&self, j: usize) -> &[bool] {
        &self.observed[j]
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[col][row]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.observed[col][row].then(|| self.values[col][row])
    }

    pub fn outcome_index(&self) -> usize {
        self.outcome
    }

    /// Column indices of the predictors, in column order.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| j != self.outcome).collect()
    }

    pub fn n_predictors(&self) -> usize {
        self.n_cols() - 1
    }

    pub fn predictor_names(&self) -> Vec<String> {
        self.predictor_indices()
            .into_iter()
            .map(|j| self.columns[j].name.clone())
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_missing(&self) -> bool {
        self.observed.iter().any(|c| c.iter().any(|&o| !o))
    }

    pub fn column_has_missing(&self, j: usize) -> bool {
        self.observed[j].iter().any(|&o| !o)
    }

    pub fn missing_count(&self, j: usize) -> usize {
        self.observed[j].iter().filter(|&&o| !o).count()
    }

    pub fn row_is_complete(&self, row: usize) -> bool {
        self.observed.iter().all(|c| c[row])
    }

    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| self.row_is_complete(i)).collect()
    }

    /// New matrix made of the given rows (repeats allowed), in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        let observed = self
            .observed
            .iter()
            .map(|c| rows.iter().map(|&i| c[i]).collect())
            .collect();
        Self::new(self.columns.clone(), values, observed)
    }

    /// New matrix keeping only the given columns; the outcome must be among them.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        Self::new(
            cols.iter().map(|&j| self.columns[j].clone()).collect(),
            cols.iter().map(|&j| self.values[j].clone()).collect(),
            cols.iter().map(|&j| self.observed[j].clone()).collect(),
        )
    }

    /// Keeps the outcome plus the listed predictor positions (0-based among predictors).
    pub fn select_predictors(&self, predictors: &[usize]) -> Result<Self> {
        let pred_cols = self.predictor_indices();
        let mut cols: Vec<usize> = predictors.iter().map(|&p| pred_cols[p]).collect();
        cols.push(self.outcome);
        cols.sort_unstable();
        self.select_columns(&cols)
    }

    /// Replaces the values and mask of one column.
    pub fn with_column(&self, j: usize, values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        let mut v = self.values.clone();
        let mut o = self.observed.clone();
        v[j] = values;
        o[j] = observed;
        Self::new(self.columns.clone(), v, o)
    }
}

// ---------------------------------------------------------------------------
// Schema and CSV I/O

/// Parses a schema file: one column per line, `name=<id> kind=<kind> role=<role>`.
/// Blank lines and `#` comments are ignored.
pub fn parse_schema(text: &str) -> Result<Vec<ColumnMeta>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (mut name, mut kind, mut role) = (None, None, None);
        for field in line.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("line {}: expected key=value, got `{field}`", lineno + 1)))?;
            match key {
                "name" => name = Some(value.to_string()),
                "kind" => {
                    kind = Some(match value {
                        "continuous" => ColumnKind::Continuous,
                        "binary" => ColumnKind::Binary,
                        "count" => ColumnKind::Count,
                        other => return Err(Error::Schema(format!("line {}: unknown kind `{other}`", lineno + 1))),
                    })
                }
                "role" => {
                    role = Some(match value {
                        "predictor" => ColumnRole::Predictor,
                        "outcome" => ColumnRole::Outcome,
                        other => return Err(Error::Schema(format!("line {}: unknown role `{other}`", lineno + 1))),
                    })
                }
                other => return Err(Error::Schema(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let name = name.ok_or_else(|| Error::Schema(format!("line {}: missing name", lineno + 1)))?;
        out.push(ColumnMeta {
            name,
            kind: kind.unwrap_or(ColumnKind::Continuous),
            role: role.unwrap_or(ColumnRole::Predictor),
        });
    }
    validate_schema(&out)?;
    Ok(out)
}

pub fn format_schema(columns: &[ColumnMeta]) -> String {
    columns
        .iter()
        .map(|c| format!("name={} kind={} role={}\n", c.name, c.kind, c.role))
        .collect()
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnMeta>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_schema(&text)
}

pub fn write_schema(columns: &[ColumnMeta], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_schema(columns)).map_err(|e| Error::io(path, e))
}

fn is_missing_token(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

/// Reads CSV text against a schema. The header may list the columns in any
/// order; the matrix follows the schema order.
pub fn read_csv<R: Read>(reader: R, schema: &[ColumnMeta]) -> Result<DataMatrix> {
    validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::InvalidInput(format!("cannot read header: {e}")))?
        .clone();
    let mut position = vec![usize::MAX; schema.len()];
    for (h, field) in header.iter().enumerate() {
        let j = schema
            .iter()
            .position(|c| c.name == field)
            .ok_or_else(|| Error::Schema(format!("unknown column `{field}` in header")))?;
        if position[j] != usize::MAX {
            return Err(Error::Schema(format!("column `{field}` appears twice")));
        }
        position[j] = h;
    }
    if let Some(j) = position.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Schema(format!(
            "schema column `{}` missing from header",
            schema[j].name
        )));
    }
    let mut values = vec![Vec::new(); schema.len()];
    let mut observed = vec![Vec::new(); schema.len()];
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "row {row}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        for (j, meta) in schema.iter().enumerate() {
            let raw = &record[position[j]];
            if is_missing_token(raw) {
                values[j].push(f64::NAN);
                observed[j].push(false);
                continue;
            }
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: meta.name.clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: meta.name.clone(),
                    value: raw.to_string(),
                });
            }
            if meta.kind == ColumnKind::Binary && v != 0.0 && v != 1.0 {
                return Err(Error::Domain {
                    row,
                    column: meta.name.clone(),
                    value: raw.to_string(),
                    kind: "binary",
                });
            }
            values[j].push(v);
            observed[j].push(true);
        }
    }
    DataMatrix::new(schema.to_vec(), values, observed)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnMeta]) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

/// Writes CSV with a header row; missing cells are emitted as `NA`.
/// Values use the shortest representation that parses back to the same `f64`.
pub fn write_csv_to<W: Write>(dm: &DataMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    w.write_record(dm.columns.iter().map(|c| c.name.as_str()))
        .map_err(io_err)?;
    let mut row = Vec::with_capacity(dm.n_cols());
    for i in 0..dm.n_rows {
        row.clear();
        for j in 0..dm.n_cols() {
            row.push(match dm.get(i, j) {
                Some(v) => format!("{v}"),
                None => "NA".to_string(),
            });
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
    Ok(())
}

pub fn write_csv(dm: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dm, std::io::BufWriter::new(file))
}

// ---------------------------------------------------------------------------
// Diagnostics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSummary {
    /// Missing proportion per column, in column order.
    pub per_column: Vec<f64>,
    /// Missing cells over all `n * K` cells.
    pub overall_cells: f64,
    pub complete_cases: usize,
    /// Proportion of rows with at least one missing cell.
    pub incomplete_rows: f64,
}

pub fn missingness_summary(dm: &DataMatrix) -> MissingnessSummary {
    let n = dm.n_rows() as f64;
    let per_column: Vec<f64> = (0..dm.n_cols()).map(|j| dm.missing_count(j) as f64 / n).collect();
    let missing_cells: usize = (0..dm.n_cols()).map(|j| dm.missing_count(j)).sum();
    let complete_cases = dm.complete_rows().len();
    MissingnessSummary {
        per_column,
        overall_cells: missing_cells as f64 / (n * dm.n_cols() as f64),
        complete_cases,
        incomplete_rows: (dm.n_rows() - complete_cases) as f64 / n,
    }
}

/// Symmetric correlation matrix whose entries may be undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    entries: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.size() + j]
    }
}

/// Pearson correlations over pairwise-complete rows. Pairs with fewer than two
/// shared observations, or with zero variance on the shared rows, are undefined.
pub fn pearson_correlations(dm: &DataMatrix) -> CorrelationMatrix {
    let k = dm.n_cols();
    let mut entries = vec![None; k * k];
    for a in 0..k {
        entries[a * k + a] = Some(1.0);
        for b in (a + 1)..k {
            let r = pairwise_pearson(dm.column(a), dm.observed(a), dm.column(b), dm.observed(b));
            entries[a * k + b] = r;
            entries[b * k + a] = r;
        }
    }
    CorrelationMatrix {
        names: dm.columns().iter().map(|c| c.name.clone()).collect(),
        entries,
    }
}

fn pairwise_pearson(x: &[f64], ox: &[bool], y: &[f64], oy: &[bool]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = (0..x.len()).filter(|&i| ox[i] && oy[i]).map(|i| (x[i], y[i])).collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

const IRLS_MAX_ITER: usize = 25;

/// Fits `logit P(target missing) = b0 + sum b_d x_d` by iteratively
/// reweighted least squares (main effects only), returning coefficients with
/// the intercept first.
pub fn fit_logistic_irls(design: &[&[f64]], response: &[f64]) -> Vec<f64> {
    let n = response.len();
    let p = design.len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { design[j - 1][i] });
    let y = DVector::from_column_slice(response);
    let mut beta = DVector::zeros(p);
    let mut last_dev = f64::INFINITY;
    for _ in 0..IRLS_MAX_ITER {
        let eta = &x * &beta;
        let mu = eta.map(logistic);
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-10));
        // z = eta + (y - mu) / w
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / w[i]);
        let xtw = DMatrix::from_fn(p, n, |j, i| x[(i, j)] * w[i]);
        let mut xtwx = &xtw * &x;
        for d in 0..p {
            xtwx[(d, d)] += 1e-9;
        }
        let xtwz = &xtw * &z;
        let Some(next) = xtwx.cholesky().map(|c| c.solve(&xtwz)) else {
            break;
        };
        beta = next;
        let dev: f64 = (0..n)
            .map(|i| {
                let m = logistic((x.row(i) * &beta)[0]).clamp(1e-15, 1.0 - 1e-15);
                -2.0 * (y[i] * m.ln() + (1.0 - y[i]) * (1.0 - m).ln())
            })
            .sum();
        if (last_dev - dev).abs() < 1e-10 * (dev.abs() + 0.1) {
            break;
        }
        last_dev = dev;
    }
    beta.iter().copied().collect()
}

/// Strength of a MAR mechanism: AUC of an additive logistic score for the
/// missingness indicator of `target` given the `drivers` columns. Rows where
/// any driver is unobserved are not scored.
pub fn mar_strength_auc(dm: &DataMatrix, target: usize, drivers: &[usize]) -> Result<f64> {
    if drivers.is_empty() || drivers.contains(&target) {
        return Err(Error::InvalidParameter(
            "drivers must be non-empty and exclude the target".into(),
        ));
    }
    let rows: Vec<usize> = (0..dm.n_rows())
        .filter(|&i| drivers.iter().all(|&d| dm.is_observed(i, d)))
        .collect();
    let indicator: Vec<f64> = rows
        .iter()
        .map(|&i| if dm.is_observed(i, target) { 0.0 } else { 1.0 })
        .collect();
    let missing = indicator.iter().filter(|&&v| v == 1.0).count();
    if missing == 0 || missing == rows.len() {
        return Err(Error::Undefined(format!(
            "column `{}` is fully observed or fully missing on scored rows",
            dm.column_meta(target).name
        )));
    }
    let cols: Vec<Vec<f64>> = drivers
        .iter()
        .map(|&d| rows.iter().map(|&i| dm.column(d)[i]).collect())
        .collect();
    let design: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let beta = fit_logistic_irls(&design, &indicator);
    let score: Vec<f64> = (0..rows.len())
        .map(|r| beta[0] + (0..cols.len()).map(|d| beta[d + 1] * cols[d][r]).sum::<f64>())
        .collect();
    let labels: Vec<bool> = indicator.iter().map(|&v| v == 1.0).collect();
    let a = auc(&score, &labels)?;
    Ok(a.max(1.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema3() -> Vec<ColumnMeta> {
        vec![
            ColumnMeta::predictor("x1", ColumnKind::Continuous),
            ColumnMeta::predictor("x7", ColumnKind::Binary),
            ColumnMeta::outcome("y"),
        ]
    }

    #[test]
    fn na_token_sets_exactly_one_mask_cell() {
        let text = "x1,x7,y\n0.5,1,0\n1.5,NA,1\n-2,0,1\n";
        let dm = read_csv(text.as_bytes(), &schema3()).unwrap();
        let missing: Vec<(usize, usize)> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| !dm.is_observed(i, j))
            .collect();
        assert_eq!(missing, vec![(1, 1)]);
        assert!(dm.column(1)[1].is_nan());
    }

    #[test]
    fn empty_field_is_missing_too() {
        let text = "x1,x7,y\n,1,0\n1.5,0,\n";
        let dm = read_csv(text.as_bytes(), &schema3()).unwrap();
        assert!(!dm.is_observed(0, 0));
        assert!(!dm.is_observed(1, 2));
    }

    #[test]
    fn non_binary_value_is_domain_error() {
        let text = "x1,x7,y\n0.5,2,0\n";
        match read_csv(text.as_bytes(), &schema3()) {
            Err(Error::Domain { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "x7");
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_number_names_cell() {
        let text = "x1,x7,y\n0.5,1,0\nabc,1,0\n";
        match read_csv(text.as_bytes(), &schema3()) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "x1", "abc"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_column_is_schema_error() {
        let text = "x1,x9,y\n0.5,1,0\n";
        assert!(matches!(read_csv(text.as_bytes(), &schema3()), Err(Error::Schema(_))));
    }

    #[test]
    fn schema_rejects_two_outcomes_and_duplicates() {
        assert!(parse_schema("name=a role=outcome kind=binary\nname=b role=outcome kind=binary\n").is_err());
        assert!(parse_schema("name=a\nname=a\nname=y kind=binary role=outcome\n").is_err());
        let ok = parse_schema("# test\nname=a kind=count\nname=y kind=binary role=outcome\n").unwrap();
        assert_eq!(ok[0].kind, ColumnKind::Count);
        assert_eq!(parse_schema(&format_schema(&ok)).unwrap(), ok);
    }

    #[test]
    fn summary_of_complete_matrix() {
        let dm = DataMatrix::complete(schema3(), vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = missingness_summary(&dm);
        assert!(s.per_column.iter().all(|&p| p == 0.0));
        assert_eq!(s.complete_cases, 2);
        assert_eq!(s.incomplete_rows, 0.0);
    }

    #[test]
    fn fully_missing_column_has_proportion_one() {
        let dm = DataMatrix::new(
            schema3(),
            vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![false, false], vec![true, true], vec![true, true]],
        )
        .unwrap();
        let s = missingness_summary(&dm);
        assert_eq!(s.per_column[0], 1.0);
        assert_eq!(s.complete_cases, 0);
        let r = pearson_correlations(&dm);
        assert_eq!(r.get(0, 0), Some(1.0));
        assert_eq!(r.get(0, 1), None);
    }

    #[test]
    fn mar_strength_errors_when_fully_observed() {
        let dm = DataMatrix::complete(schema3(), vec![vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(mar_strength_auc(&dm, 1, &[0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn mar_strength_is_one_under_threshold_missingness() {
        let n = 200;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let obs: Vec<bool> = x.iter().map(|&v| v <= 0.6).collect();
        let dm = DataMatrix::new(
            schema3(),
            vec![x, (0..n).map(|i| (i % 2) as f64).collect(), vec![0.0; n]],
            vec![vec![true; n], obs, vec![true; n]],
        )
        .unwrap();
        let a = mar_strength_auc(&dm, 1, &[0]).unwrap();
        assert!(a > 0.999, "auc {a}");
    }
}
