//! Small dense linear algebra: design matrices, Cholesky factorisation and
//! ordinary least squares with a ridge fallback.

use crate::error::{invalid, Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid!("ragged matrix rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Regression design matrix whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(Matrix);

impl DesignMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.cols() == 0 {
            return Err(invalid!("design matrix needs at least the intercept column"));
        }
        if (0..matrix.rows()).any(|i| matrix[(i, 0)] != 1.0) {
            return Err(invalid!("first design column must be all ones"));
        }
        Ok(Self(matrix))
    }

    /// Build from covariate rows; the intercept is prepended.
    pub fn with_intercept<I, R>(rows: I, predictors: usize) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        let mut n = 0;
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), predictors, "predictor count mismatch");
            data.push(1.0);
            data.extend_from_slice(r);
            n += 1;
        }
        Self(Matrix {
            rows: n,
            cols: predictors + 1,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn predict(&self, coefficients: &[f64]) -> Vec<f64> {
        self.0.mul_vec(coefficients)
    }

    /// `XᵀX`, or `XᵀWX` when weights are supplied.
    pub fn gram(&self, weights: Option<&[f64]>) -> Matrix {
        let p = self.cols();
        let mut g = Matrix::zeros(p, p);
        for i in 0..self.rows() {
            let r = self.row(i);
            let w = weights.map_or(1.0, |w| w[i]);
            for a in 0..p {
                let ra = r[a] * w;
                for b in a..p {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn xt_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        for i in 0..self.rows() {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x * v[i];
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor `L` with `A = LLᵀ`.
///
/// Pivots within a relative tolerance of zero are treated as exact zeros and
/// their column is zeroed, which factors positive semi-definite matrices.
/// Clearly negative pivots fail.
pub fn cholesky_psd(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(invalid!("cholesky of non-square matrix"));
    }
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-12;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() || d < -tol {
            return Err(Error::Numeric(format!(
                "matrix not positive semi-definite (pivot {d:e} at {j})"
            )));
        }
        if d <= tol {
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// Strict Cholesky: fails on any non-positive pivot (relative to the
/// diagonal scale), so singular systems are reported rather than factored.
fn cholesky_strict(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-12;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > tol) {
            return None;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    x
}

fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    // Symmetrise away rounding noise.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = m;
            inv[(j, i)] = m;
        }
    }
    inv
}

/// Factor a symmetric positive definite system, retrying once with ridge
/// jitter `1e-8 · trace/p` on the diagonal.
pub fn factor_spd_with_ridge(a: &Matrix) -> Result<(Matrix, bool)> {
    if let Some(l) = cholesky_strict(a) {
        return Ok((l, false));
    }
    let p = a.rows();
    let jitter = 1e-8 * a.trace() / p as f64;
    let mut ridged = a.clone();
    for i in 0..p {
        ridged[(i, i)] += jitter;
    }
    cholesky_strict(&ridged)
        .map(|l| (l, true))
        .ok_or_else(|| Error::Numeric("normal equations singular after ridge retry".into()))
}

/// Inverse of a symmetric positive definite matrix (with the same ridge
/// fallback as [`factor_spd_with_ridge`]).
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let (l, _) = factor_spd_with_ridge(a)?;
    Ok(cholesky_inverse(&l))
}

pub fn spd_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (l, _) = factor_spd_with_ridge(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Result of an ordinary least squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    /// `RSS / (n - p)`.
    pub residual_variance: f64,
    /// `(XᵀX)⁻¹`, ridge-regularised when the plain system was singular.
    pub xtx_inverse: Matrix,
    pub ridged: bool,
}

pub fn solve_least_squares(x: &DesignMatrix, y: &[f64]) -> Result<LeastSquaresFit> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(invalid!("response length {} != design rows {n}", y.len()));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "least squares needs more rows than columns ({n} <= {p})"
        )));
    }
    let xtx = x.gram(None);
    let (l, ridged) = factor_spd_with_ridge(&xtx)?;
    let coefficients = cholesky_solve(&l, &x.xt_vec(y));
    let fitted = x.predict(&coefficients);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let sum_sq: f64 = y.iter().map(|v| v * v).sum();
    // Rounding noise from an exact fit is reported as an exact fit.
    let rss = if rss <= 1e-20 * sum_sq { 0.0 } else { rss };
    Ok(LeastSquaresFit {
        coefficients,
        residual_variance: rss / (n - p) as f64,
        xtx_inverse: cholesky_inverse(&l),
        ridged,
    })
}
