//! Dense linear algebra and summary statistics. Least-squares problems are
//! solved through a Cholesky factorization of the normal equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot below which a normal matrix is declared singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(a: &[f64], n: usize) -> Result<Self> {
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Singular("normal matrix has zero diagonal".into()));
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= SINGULAR_PIVOT * scale {
                return Err(Error::Singular(format!(
                    "relative pivot {:.3e} at column {j}",
                    d / scale
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

fn check_weighted_inputs(x: &Mat, y: &[f64], w: &[f64]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if w.len() != x.rows() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            actual: w.len(),
        });
    }
    if !x.is_finite() || y.iter().chain(w).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite regression input"));
    }
    if w.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("negative regression weight"));
    }
    Ok(())
}

/// Returns (XᵀWX, XᵀWy).
fn normal_equations(x: &Mat, y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = x.cols();
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    for r in 0..x.rows() {
        let wr = w[r];
        if wr == 0.0 {
            continue;
        }
        let row = x.row(r);
        for i in 0..p {
            let wi = wr * row[i];
            if wi == 0.0 {
                continue;
            }
            b[i] += wi * y[r];
            for j in 0..=i {
                a[i * p + j] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[j * p + i] = a[i * p + j];
        }
    }
    (a, b)
}

/// Solves `a β = b` by Cholesky with one step of iterative refinement.
fn spd_solve(a: &[f64], b: &[f64], p: usize) -> Result<Vec<f64>> {
    let chol = Cholesky::factor(a, p)?;
    let mut beta = chol.solve(b);
    let resid: Vec<f64> = (0..p)
        .map(|i| b[i] - (0..p).map(|j| a[i * p + j] * beta[j]).sum::<f64>())
        .collect();
    let delta = chol.solve(&resid);
    for (bi, di) in beta.iter_mut().zip(delta) {
        *bi += di;
    }
    Ok(beta)
}

/// β minimizing Σ wᵢ (yᵢ − Xᵢ·β)².
pub fn weighted_least_squares(x: &Mat, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    check_weighted_inputs(x, y, w)?;
    let p = x.cols();
    if x.rows() < p {
        return Err(Error::invalid(format!(
            "weighted least squares needs n >= p (n = {}, p = {p})",
            x.rows()
        )));
    }
    let positive = w.iter().filter(|&&v| v > 0.0).count();
    if positive < p {
        return Err(Error::Singular(format!(
            "only {positive} positive weights for {p} unknowns"
        )));
    }
    let (a, b) = normal_equations(x, y, w);
    spd_solve(&a, &b, p)
}

/// β minimizing Σ wᵢ (yᵢ − Xᵢ·β)² + λ‖β‖².
///
/// With `lambda == 0` this is [`weighted_least_squares`] and fails the same
/// way on a singular design.
pub fn ridge_regression(x: &Mat, y: &[f64], w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_weighted_inputs(x, y, w)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return weighted_least_squares(x, y, w);
    }
    let p = x.cols();
    let (mut a, b) = normal_equations(x, y, w);
    for i in 0..p {
        a[i * p + i] += lambda;
    }
    spd_solve(&a, &b, p)
}

/// Pearson coefficient plus a flag for zero-variance input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub constant_input: bool,
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Pearson product-moment coefficient. Zero-variance input yields 0 with
/// `constant_input` set.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson needs at least 2 observations"));
    }
    if is_constant(x) || is_constant(y) {
        return Ok(Correlation {
            r: 0.0,
            constant_input: true,
        });
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        constant_input: false,
    })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/n) standard deviation.
pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Per-column standardization statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: f64,
    pub std: f64,
    /// Set for zero-variance columns, whose `std` is stored as 1.
    pub constant: bool,
}

impl ZScore {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

pub fn zscore_fit(columns: &Mat) -> Result<Vec<ZScore>> {
    if columns.rows() == 0 {
        return Err(Error::invalid("zscore_fit on empty data"));
    }
    Ok((0..columns.cols())
        .map(|c| {
            let col = columns.column(c);
            if is_constant(&col) {
                ZScore {
                    mean: col[0],
                    std: 1.0,
                    constant: true,
                }
            } else {
                ZScore {
                    mean: mean(&col),
                    std: population_std(&col),
                    constant: false,
                }
            }
        })
        .collect())
}

pub fn zscore_apply(sample: &[f64], stats: &[ZScore]) -> Result<Vec<f64>> {
    if sample.len() != stats.len() {
        return Err(Error::LengthMismatch {
            expected: stats.len(),
            actual: sample.len(),
        });
    }
    Ok(sample.iter().zip(stats).map(|(&v, s)| s.apply(v)).collect())
}

/// Linear-interpolation quantiles (the `(n − 1)·p` rule).
pub fn quantiles(x: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::invalid("quantiles of empty data"));
    }
    if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) || probs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "quantile probabilities must lie in (0, 1) and increase strictly",
        ));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    Ok(probs
        .iter()
        .map(|&p| {
            let h = last as f64 * p;
            let lo = h.floor() as usize;
            if lo >= last {
                return sorted[last];
            }
            let frac = h - lo as f64;
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        })
        .collect())
}

/// Mixes a base seed with an index into an independent sub-seed
/// (SplitMix64 finalizer applied twice).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(index))
}
