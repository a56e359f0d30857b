//! Bayesian logistic regression with a `N(0, I)` prior on the coefficients.
//!
//! The bundled dataset is the Mroz (1987) labour force participation sample:
//! 753 married women, response `inlf`, covariates `nwifeinc, educ, exper,
//! expersq, age, kidslt6, kidsge6`. An intercept column is prepended on load.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::{sigmoid, softplus};
use crate::proposals::Integrand;

const MROZ_CSV: &str = include_str!("../../data/mroz.csv");

/// Name of the response column.
pub const RESPONSE: &str = "inlf";
/// Covariate columns in file order.
pub const COVARIATES: [&str; 7] = [
    "nwifeinc", "educ", "exper", "expersq", "age", "kidslt6", "kidsge6",
];

/// Which leading rows of the file to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowSlice {
    First(usize),
    #[default]
    All,
}

impl fmt::Display for RowSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowSlice::First(n) => write!(f, "{n}"),
            RowSlice::All => f.write_str("all"),
        }
    }
}

impl FromStr for RowSlice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(RowSlice::All),
            n => match n.parse::<usize>() {
                Ok(k) if k > 0 => Ok(RowSlice::First(k)),
                _ => Err(Error::Config(format!(
                    "row slice must be a positive count or 'all', got '{s}'"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// `n x d` design matrix, first column all ones.
    x: DMatrix<f64>,
    y: Vec<f64>,
    columns: Vec<String>,
}

impl LogisticModel {
    /// Validates and wraps a design matrix that already carries the intercept.
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, columns: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Argument(format!(
                "design has {} rows for {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if columns.len() != x.ncols() {
            return Err(Error::Argument(
                "column names do not match the design".into(),
            ));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Argument(format!(
                "response {i} is {}, expected 0 or 1",
                y[i]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("design has non-finite entries".into()));
        }
        for (j, col) in x.column_iter().enumerate() {
            if col.iter().all(|&v| v == 0.0) {
                return Err(Error::Argument(format!(
                    "column '{}' is identically zero",
                    columns[j]
                )));
            }
        }
        Ok(Self { x, y, columns })
    }

    /// The bundled Mroz data.
    pub fn mroz(rows: RowSlice, standardize: bool) -> Result<Self> {
        parse_csv(
            MROZ_CSV.as_bytes(),
            Path::new("<embedded mroz.csv>"),
            rows,
            standardize,
        )
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn integrand(&self) -> LogisticIntegrand {
        LogisticIntegrand::new(self)
    }
}

/// Loads a response-plus-covariates CSV, keeps `rows`, prepends an intercept
/// and optionally z-scores the covariates over the kept rows.
pub fn logistic_load(path: &Path, rows: RowSlice, standardize: bool) -> Result<LogisticModel> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, path, rows, standardize)
}

fn parse_csv<R: std::io::Read>(
    r: R,
    path: &Path,
    rows: RowSlice,
    standardize: bool,
) -> Result<LogisticModel> {
    let load = |row: usize, message: String| Error::Load {
        path: PathBuf::from(path),
        row,
        message,
    };
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| load(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() != 1 + COVARIATES.len() {
        return Err(load(
            1,
            format!(
                "expected {} columns, found {}",
                1 + COVARIATES.len(),
                header.len()
            ),
        ));
    }
    let resp = header
        .iter()
        .position(|h| h == RESPONSE)
        .ok_or_else(|| load(1, format!("missing response column '{RESPONSE}'")))?;
    let limit = match rows {
        RowSlice::First(k) => k,
        RowSlice::All => usize::MAX,
    };
    let mut y = Vec::new();
    let mut cov: Vec<f64> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        if y.len() == limit {
            break;
        }
        let line = i + 2;
        let rec = rec.map_err(|e| load(line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(load(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for (j, field) in rec.iter().enumerate() {
            if field.is_empty() || field.eq_ignore_ascii_case("na") {
                return Err(load(
                    line,
                    format!("missing value in column '{}'", header[j]),
                ));
            }
            let v: f64 = field.parse().map_err(|_| {
                load(
                    line,
                    format!("cannot parse '{field}' in column '{}'", header[j]),
                )
            })?;
            if !v.is_finite() {
                return Err(load(
                    line,
                    format!("non-finite value in column '{}'", header[j]),
                ));
            }
            if j == resp {
                if v != 0.0 && v != 1.0 {
                    return Err(load(
                        line,
                        format!("response '{RESPONSE}' must be 0 or 1, found {v}"),
                    ));
                }
                y.push(v);
            } else {
                cov.push(v);
            }
        }
    }
    if let RowSlice::First(k) = rows {
        if y.len() < k {
            return Err(load(
                0,
                format!("requested {k} rows but the file has {}", y.len()),
            ));
        }
    }
    let n = y.len();
    let p = COVARIATES.len();
    let mut x = DMatrix::from_element(n, p + 1, 1.0);
    for i in 0..n {
        for j in 0..p {
            x[(i, j + 1)] = cov[i * p + j];
        }
    }
    let mut columns = vec!["intercept".to_string()];
    columns.extend(
        header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != resp)
            .map(|(_, h)| h.clone()),
    );
    if standardize {
        if n < 2 {
            return Err(load(0, "standardization needs at least two rows".into()));
        }
        for j in 1..=p {
            let mean = x.column(j).sum() / n as f64;
            let var = x.column(j).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            if !(var > 0.0) {
                return Err(load(
                    0,
                    format!(
                        "column '{}' is constant and cannot be standardized",
                        columns[j]
                    ),
                ));
            }
            let sd = var.sqrt();
            for i in 0..n {
                x[(i, j)] = (x[(i, j)] - mean) / sd;
            }
        }
    }
    LogisticModel::new(x, y, columns).map_err(|e| load(0, e.to_string()))
}

/// Log-likelihood `F(z) = sum Y_i x_i^T z - log(1 + e^(x_i^T z))` as an integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticIntegrand {
    n: usize,
    d: usize,
    /// Row-major design.
    x: Vec<f64>,
    y: Vec<f64>,
}

impl LogisticIntegrand {
    pub fn new(model: &LogisticModel) -> Self {
        let (n, d) = (model.n(), model.d());
        let mut x = Vec::with_capacity(n * d);
        for i in 0..n {
            x.extend(model.x.row(i).iter());
        }
        Self {
            n,
            d,
            x,
            y: model.y.clone(),
        }
    }

    fn eta(&self, i: usize, z: &[f64]) -> f64 {
        self.x[i * self.d..(i + 1) * self.d]
            .iter()
            .zip(z)
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl Integrand for LogisticIntegrand {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_log_g(&self, z: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let t = self.eta(i, z);
                self.y[i] * t - softplus(t)
            })
            .sum()
    }

    fn grad_log_g(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; self.d];
        for i in 0..self.n {
            let w = self.y[i] - sigmoid(self.eta(i, z));
            for (gj, xj) in g.iter_mut().zip(&self.x[i * self.d..(i + 1) * self.d]) {
                *gj += w * xj;
            }
        }
        Some(g)
    }

    fn hess_log_g(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for i in 0..self.n {
            let s = sigmoid(self.eta(i, z));
            let w = s * (1.0 - s);
            let xi = &self.x[i * self.d..(i + 1) * self.d];
            for a in 0..self.d {
                for b in 0..=a {
                    h[(a, b)] -= w * xi[a] * xi[b];
                }
            }
        }
        for a in 0..self.d {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        Some(h)
    }
}

/// `f(z) = |z|^2`.
pub fn logistic_test_fn(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}
