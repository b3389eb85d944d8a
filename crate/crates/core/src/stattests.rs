//! Non-private test statistics: z, chi-square, OLS with partial F, and the
//! sample standard deviation.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, invalid, Error, Result};

/// Values with a declared, data-independent bound `|x| <= bound_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSample {
    values: Vec<f64>,
    bound_s: f64,
}

impl BoundedSample {
    pub fn new(values: Vec<f64>, bound_s: f64) -> Result<Self> {
        ensure_positive("bound_s", bound_s)?;
        if values.is_empty() {
            return Err(invalid("values", "sample is empty"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.abs() <= bound_s)) {
            return Err(invalid("values", format!("value {v} at index {i} violates |x| <= {bound_s}")));
        }
        Ok(Self { values, bound_s })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound_s(&self) -> f64 {
        self.bound_s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn std_dev(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(invalid("values", "standard deviation needs at least two values"));
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

pub fn sample_std(sample: &BoundedSample) -> Result<f64> {
    std_dev(&sample.values)
}

/// `(observed_mean - mu) / sigma`.
pub fn z_statistic(observed_mean: f64, mu: f64, sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    Ok((observed_mean - mu) / sigma)
}

/// Observed counts against expected counts over `k >= 2` groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareInput {
    observed: Vec<f64>,
    expected: Vec<f64>,
}

impl ChiSquareInput {
    pub fn new(observed: Vec<f64>, expected: Vec<f64>) -> Result<Self> {
        if observed.len() != expected.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} observed groups vs {} expected",
                observed.len(),
                expected.len()
            )));
        }
        if observed.len() < 2 {
            return Err(invalid("k", "at least two groups are required"));
        }
        if observed.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("observed", "counts must be finite and nonnegative"));
        }
        if expected.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid("expected", "expected counts must be positive"));
        }
        Ok(Self { observed, expected })
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn expected(&self) -> &[f64] {
        &self.expected
    }

    pub fn k(&self) -> usize {
        self.observed.len()
    }

    /// Group with the largest excess `x_j - E_j` (first on ties), and that excess.
    pub fn max_excess(&self) -> (usize, f64) {
        self.observed
            .iter()
            .zip(&self.expected)
            .map(|(x, e)| x - e)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, d)| if d > best.1 { (j, d) } else { best })
    }

    /// Warns when the large-sample approximation is doubtful (`min E_j < 5`).
    pub fn small_expected_warning(&self) -> Option<String> {
        let min = self.expected.iter().cloned().fold(f64::INFINITY, f64::min);
        (min < 5.0).then(|| format!("smallest expected count is {min}; chi-square approximation may be poor (< 5)"))
    }
}

pub fn chi_square_statistic(inp: &ChiSquareInput) -> f64 {
    inp.observed
        .iter()
        .zip(&inp.expected)
        .map(|(x, e)| (x - e) * (x - e) / e)
        .sum()
}

/// Row-major `rows x cols` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged design rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} values for a {rows}x{cols} design", data.len())));
        }
        if cols == 0 {
            return Err(invalid("design", "needs at least one column"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.cols {
            return Err(invalid("k", format!("must be in 1..={}", self.cols)));
        }
        let data = (0..self.rows)
            .flat_map(|i| self.data[i * self.cols..i * self.cols + k].iter().copied())
            .collect();
        Self::from_row_major(self.rows, k, data)
    }

    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect()
    }
}

/// Least-squares fit of `response` on the columns of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub p: usize,
}

/// Ordinary least squares by Householder QR. Rank deficiency is reported,
/// never regularized away.
pub fn ols_fit(design: &Design, response: &[f64]) -> Result<LinearModel> {
    let (n, p) = (design.rows, design.cols);
    if response.len() != n {
        return Err(Error::DimensionMismatch(format!("{} responses for {n} rows", response.len())));
    }
    if n < p {
        return Err(invalid("design", format!("{n} rows cannot identify {p} coefficients")));
    }

    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| design.get(i, j)).collect()).collect();
    let mut qty = response.to_vec();
    let scale = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut r_diag = vec![0.0; p];

    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12 * scale) {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        r_diag[k] = alpha;
        let reflect = |col: &mut [f64]| {
            let s: f64 = v.iter().zip(col.iter()).map(|(vi, ci)| vi * ci).sum();
            let f = 2.0 * s / vnorm2;
            for (ci, vi) in col.iter_mut().zip(&v) {
                *ci -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
    }

    // back substitution on R beta = (Q^T y)[..p]
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let tail: f64 = (k + 1..p).map(|j| a[j][k] * beta[j]).sum();
        beta[k] = (qty[k] - tail) / r_diag[k];
    }

    let fitted = design.mul_vec(&beta);
    let rss = fitted.iter().zip(response).map(|(f, y)| (y - f) * (y - f)).sum();
    Ok(LinearModel { coefficients: beta, fitted, rss, n, p })
}

/// Residual sums of squares of a full model (`p` columns) and the nested
/// reduced model (`r` columns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTestInput {
    pub rss_r: f64,
    pub rss_f: f64,
    pub n: usize,
    pub p: usize,
    pub r: usize,
}

impl FTestInput {
    pub fn new(rss_r: f64, rss_f: f64, n: usize, p: usize, r: usize) -> Result<Self> {
        ensure_positive("rss_f", rss_f)?;
        // tolerate rounding-level violations of rss_r >= rss_f
        if !(rss_r.is_finite() && rss_r >= rss_f * (1.0 - 1e-12)) {
            return Err(invalid("rss_r", format!("reduced RSS {rss_r} below full RSS {rss_f}; models are not nested")));
        }
        if r < 1 || p <= r {
            return Err(invalid("p", format!("need p > r >= 1, got p={p} r={r}")));
        }
        if n <= p {
            return Err(invalid("n", format!("need n > p, got n={n} p={p}")));
        }
        Ok(Self { rss_r: rss_r.max(rss_f), rss_f, n, p, r })
    }

    pub fn ratio(&self) -> f64 {
        self.rss_r / self.rss_f
    }

    /// `(n - p) / (p - r)`.
    pub fn df_multiplier(&self) -> f64 {
        (self.n - self.p) as f64 / (self.p - self.r) as f64
    }
}

/// `(RSS_R / RSS_F - 1) * (n - p) / (p - r)`.
pub fn partial_f_statistic(inp: &FTestInput) -> f64 {
    (inp.ratio() - 1.0) * inp.df_multiplier()
}

/// Fits the full design and its first `r` columns, returning the F input.
pub fn nested_f_input(design: &Design, response: &[f64], r: usize) -> Result<FTestInput> {
    let full = ols_fit(design, response)?;
    let reduced = ols_fit(&design.leading_columns(r)?, response)?;
    FTestInput::new(reduced.rss, full.rss, design.rows, design.cols, r)
}
