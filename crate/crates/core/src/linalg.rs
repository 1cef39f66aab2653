//! Small dense matrices: Cholesky factorization and cyclic Jacobi
//! eigenvalues for symmetric matrices.

use std::ops::{Index, IndexMut};

use crate::error::{check_dim, IzoError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.len(), "matrix row")?;
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows, "matmul inner dimension")?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, x.len(), "matvec")?;
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect())
    }

    /// `A^T x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, x.len(), "transposed matvec")?;
        let mut out = vec![0.0; self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matvec(x)?;
        Ok(ax.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    /// `A^T A`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                for j in i..self.cols {
                    g[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    pub fn add_diag(&self, v: f64) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += v;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows, "matrix rows")?;
        check_dim(self.cols, other.cols, "matrix cols")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn require_symmetric(p: &Matrix, what: &str) -> Result<()> {
    if !p.is_square() {
        return Err(IzoError::Dimension(format!("{what}: matrix is {}x{}", p.rows, p.cols)));
    }
    if !p.is_symmetric(1e-10) {
        return Err(IzoError::Input(format!("{what}: matrix is not symmetric")));
    }
    Ok(())
}

/// Upper-triangular `U` with `U^T U = P`.
pub fn cholesky(p: &Matrix) -> Result<Matrix> {
    require_symmetric(p, "cholesky")?;
    let n = p.rows;
    let mut u = Matrix::zeros(n, n);
    for i in 0..n {
        let mut d = p[(i, i)];
        for k in 0..i {
            d -= u[(k, i)] * u[(k, i)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(IzoError::Factorization { pivot: i, value: d });
        }
        let dii = d.sqrt();
        u[(i, i)] = dii;
        for j in i + 1..n {
            let mut s = p[(i, j)];
            for k in 0..i {
                s -= u[(k, i)] * u[(k, j)];
            }
            u[(i, j)] = s / dii;
        }
    }
    Ok(u)
}

/// Solves `U^T U x = b` given the Cholesky factor `U`.
pub fn cholesky_solve(u: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = u.rows;
    check_dim(n, b.len(), "cholesky_solve rhs")?;
    // U^T y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= u[(k, i)] * y[k];
        }
        y[i] = s / u[(i, i)];
    }
    // U x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= u[(i, k)] * x[k];
        }
        x[i] = s / u[(i, i)];
    }
    Ok(x)
}

/// Inverse of an invertible upper-triangular matrix.
pub fn upper_triangular_inverse(u: &Matrix) -> Result<Matrix> {
    let n = u.rows;
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..=col {
                s -= u[(i, k)] * inv[(k, col)];
            }
            let d = u[(i, i)];
            if d == 0.0 {
                return Err(IzoError::Factorization { pivot: i, value: d });
            }
            inv[(i, col)] = s / d;
        }
    }
    Ok(inv)
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-12 * ||P||_F`.
pub fn symmetric_eigenvalues(p: &Matrix) -> Result<Vec<f64>> {
    require_symmetric(p, "jacobi")?;
    let n = p.rows;
    let mut a = p.clone();
    a.symmetrize();
    let target = 1e-12 * p.frobenius();
    for _sweep in 0..100 {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for i in 0..n {
            for j in i + 1..n {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[(j, j)] - a[(i, i)]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let aki = a[(k, i)];
                    let akj = a[(k, j)];
                    a[(k, i)] = c * aki - s * akj;
                    a[(k, j)] = s * aki + c * akj;
                }
                for k in 0..n {
                    let aik = a[(i, k)];
                    let ajk = a[(j, k)];
                    a[(i, k)] = c * aik - s * ajk;
                    a[(j, k)] = s * aik + c * ajk;
                }
                a[(i, j)] = 0.0;
                a[(j, i)] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn min_eigenvalue(p: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(p)?[0])
}

pub fn max_eigenvalue(p: &Matrix) -> Result<f64> {
    Ok(*symmetric_eigenvalues(p)?.last().expect("non-empty matrix"))
}
