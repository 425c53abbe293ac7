//! Minimal dense linear algebra: products, transposes, and the
//! Moore-Penrose generalised inverse used by every ELM update.
//!
//! Matrices here are at most a few hundred entries, so everything is a
//! plain row-major `Vec<f64>` with no sparse or blocked paths.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative singular-value cutoff for the pseudoinverse. Singular values
/// below `rtol * sigma_max` are treated as exact zeros.
pub const PINV_RTOL: f64 = 1e-12;

/// Iteration cap for the SVD; exceeding it is reported as a numerical error.
const SVD_MAX_ITER: usize = 10_000;

/// Dense 2-D real matrix in row-major order.
///
/// Invariant: `data.len() == rows * cols` and every entry is finite. All
/// constructors and operations reject NaN/infinite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                format!("{rows}x{cols} needs {} values, got {}", rows * cols, data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Matrix::from_vec"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::shape("Matrix::from_rows", "ragged rows".to_string()));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::from_vec(n_rows, n_cols, data)
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major view of the underlying data.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[row * self.cols + col] = value;
    }

    /// One row as a slice.
    pub fn row(&self, row: usize) -> &[f64] {
        assert!(row < self.rows, "row out of bounds");
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        // i-k-j order keeps both operands streaming row-major.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(lhs) {
                    *d += a * b;
                }
            }
        }
        out.check_finite("matmul")?;
        Ok(out)
    }

    /// (i, j) -> (j, i).
    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Entry-wise sum.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Entry-wise scaling.
    pub fn scale(&self, factor: f64) -> Result<Matrix> {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out.check_finite("scale")?;
        Ok(out)
    }

    /// Largest absolute entry (max norm); 0 for empty matrices.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Moore-Penrose generalised inverse via SVD truncation.
    ///
    /// Singular values below [`PINV_RTOL`] times the largest are zeroed, so
    /// rank-deficient inputs are handled without special cases. The result
    /// has shape `cols x rows` and satisfies the four Penrose conditions to
    /// numerical tolerance.
    pub fn pinv(&self) -> Result<Matrix> {
        if self.is_empty() {
            return Err(Error::InvalidInput("pinv of an empty matrix".to_string()));
        }
        let a = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let svd = a
            .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| Error::Numerical {
                op: "pinv",
                detail: "SVD did not converge".to_string(),
            })?;
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let sigma = svd.singular_values;

        let sigma_max = sigma.iter().fold(0.0f64, |m, &s| m.max(s));
        let cutoff = PINV_RTOL * sigma_max;

        // pinv = V * diag(1/sigma_i for sigma_i > cutoff) * U^T
        let rank_terms = sigma.len();
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..rank_terms {
            let s = sigma[r];
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let inv_s = 1.0 / s;
            for i in 0..self.cols {
                let vi = v_t[(r, i)];
                if vi == 0.0 {
                    continue;
                }
                for j in 0..self.rows {
                    out.data[i * self.rows + j] += inv_s * vi * u[(j, r)];
                }
            }
        }
        out.check_finite("pinv")?;
        Ok(out)
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(
                op,
                format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let out = Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        };
        out.check_finite(op)?;
        Ok(out)
    }

    fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(op))
        }
    }
}

/// Largest absolute entry-wise difference between two same-shaped matrices.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.rows, b.rows, "max_abs_diff shape");
    assert_eq!(a.cols, b.cols, "max_abs_diff shape");
    a.data
        .iter()
        .zip(&b.data)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}
