//! Dense row-major matrix toolkit for small control-design problems.
//!
//! Everything here targets matrices of modest size (n <= ~20): dense
//! storage, direct factorizations, no blocked kernels. Provided: LU solve,
//! Cholesky-based SPD test, Householder-QR least squares, Jacobi symmetric
//! eigenvalues, Hessenberg + shifted-QR general eigenvalues, and a
//! Kronecker-vectorized Lyapunov solver.

use std::fmt;

/// Relative tolerance for symmetry tests.
const SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixError {
    /// Operand shapes are incompatible for the requested operation.
    DimMismatch(String),
    /// An entry is NaN or infinite.
    NonFinite,
    /// A linear system has no (numerically) unique solution. The tag names
    /// the operation that failed, e.g. "lu", "lyapunov", "kc".
    Singular(&'static str),
    /// Least-squares operand does not have full column rank.
    RankDeficient,
    /// A symmetric-only operation received a non-symmetric matrix.
    NotSymmetric,
    /// A positive-definite operand was required.
    NotSpd,
    /// Eigenvalue iteration failed to converge.
    NoConvergence,
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::DimMismatch(what) => write!(f, "dim-mismatch: {what}"),
            MatrixError::NonFinite => write!(f, "non-finite entry"),
            MatrixError::Singular(op) => write!(f, "{op}-singular"),
            MatrixError::RankDeficient => write!(f, "rank-deficient"),
            MatrixError::NotSymmetric => write!(f, "not-symmetric"),
            MatrixError::NotSpd => write!(f, "not-positive-definite"),
            MatrixError::NoConvergence => write!(f, "eigenvalue iteration did not converge"),
        }
    }
}

impl std::error::Error for MatrixError {}

/// Dense real matrix, row-major storage: `data[i * cols + j] = M[i, j]`.
///
/// Construction rejects non-finite entries, so downstream code can assume
/// every value it sees is a normal (or zero) double.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MatrixError::DimMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::DimMismatch("empty matrix".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::DimMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in diag.iter().enumerate() {
            m.data[i * n + i] = *v;
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self + h * other`, elementwise.
    pub fn add_scaled(&self, other: &Matrix, h: f64) -> Result<Matrix, MatrixError> {
        self.zip_with(other, "add_scaled", |a, b| a + h * b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, MatrixError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MatrixError::DimMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Elementwise division by a scalar.
    pub fn div_scalar(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v / s).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::DimMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if self.cols != v.len() {
            return Err(MatrixError::DimMismatch(format!(
                "mul_vec: {}x{} * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        }
        Ok(out)
    }

    /// `selfᵀ * v` without materialising the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if self.rows != v.len() {
            return Err(MatrixError::DimMismatch(format!(
                "tr_mul_vec: {}x{}ᵀ * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Outer product `u vᵀ`.
pub fn outer(u: &[f64], v: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(u.len().max(1), v.len().max(1));
    for (i, &a) in u.iter().enumerate() {
        for (j, &b) in v.iter().enumerate() {
            out.data[i * v.len() + j] = a * b;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

pub fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn vec_norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max-abs norm; returns +inf if any entry is NaN or infinite.
pub fn vec_inf_norm(a: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for &v in a {
        if !v.is_finite() {
            return f64::INFINITY;
        }
        m = m.max(v.abs());
    }
    m
}

// ---------------------------------------------------------------------------
// LU factorization (partial pivoting)
// ---------------------------------------------------------------------------

struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

fn lu_factor(a: &Matrix) -> Result<Lu, MatrixError> {
    if !a.is_square() {
        return Err(MatrixError::DimMismatch(format!(
            "lu needs square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut piv = vec![0usize; n];
    let amax = a.max_abs();
    if amax == 0.0 {
        return Err(MatrixError::Singular("lu"));
    }
    let tol = amax * f64::EPSILON * n as f64;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for i in k + 1..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol {
            return Err(MatrixError::Singular("lu"));
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        piv[k] = p;
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            for j in k + 1..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    Ok(Lu { n, lu, piv })
}

impl Lu {
    /// Solves in place for a row-major right-hand side with `r` columns.
    fn solve(&self, b: &mut [f64], r: usize) {
        let n = self.n;
        debug_assert_eq!(b.len(), n * r);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                for j in 0..r {
                    b.swap(k * r + j, p * r + j);
                }
            }
        }
        // forward: L y = P b
        for i in 1..n {
            for k in 0..i {
                let f = self.lu[i * n + k];
                if f == 0.0 {
                    continue;
                }
                for j in 0..r {
                    b[i * r + j] -= f * b[k * r + j];
                }
            }
        }
        // backward: U x = y
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[i * n + k];
                if f == 0.0 {
                    continue;
                }
                for j in 0..r {
                    b[i * r + j] -= f * b[k * r + j];
                }
            }
            let d = self.lu[i * n + i];
            for j in 0..r {
                b[i * r + j] /= d;
            }
        }
    }
}

/// Solves `a X = b` for square `a` via LU with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    if a.rows != b.rows {
        return Err(MatrixError::DimMismatch(format!(
            "lu_solve: {}x{} vs rhs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let fac = lu_factor(a)?;
    let mut rhs = b.data.clone();
    fac.solve(&mut rhs, b.cols);
    Matrix::new(b.rows, b.cols, rhs)
}

pub fn invert(a: &Matrix) -> Result<Matrix, MatrixError> {
    lu_solve(a, &Matrix::identity(a.rows))
}

// ---------------------------------------------------------------------------
// SPD test (Cholesky)
// ---------------------------------------------------------------------------

fn symmetric_within(m: &Matrix, rel: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.max_abs().max(1.0);
    for i in 0..m.rows {
        for j in 0..i {
            if (m.at(i, j) - m.at(j, i)).abs() > rel * scale {
                return false;
            }
        }
    }
    true
}

/// True iff `m` is symmetric (to 1e-12 relative) and admits a Cholesky
/// factorization with strictly positive pivots.
pub fn is_spd(m: &Matrix) -> bool {
    if !symmetric_within(m, SYM_TOL) {
        return false;
    }
    let n = m.rows;
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut d = m.at(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !d.is_finite() || d <= 0.0 {
            return false;
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in j + 1..n {
            let mut v = m.at(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / dj;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Least squares (Householder QR)
// ---------------------------------------------------------------------------

/// Minimizes `‖a X − b‖_F` for `a` with full column rank.
pub fn solve_least_squares(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    let (p, q) = (a.rows, a.cols);
    if b.rows != p {
        return Err(MatrixError::DimMismatch(format!(
            "least_squares: {}x{} vs rhs {}x{}",
            p, q, b.rows, b.cols
        )));
    }
    if p < q {
        return Err(MatrixError::RankDeficient);
    }
    let r = b.cols;
    let mut qr = a.data.clone();
    let mut rhs = b.data.clone();
    for k in 0..q {
        let mut norm_sq = 0.0;
        for i in k..p {
            let v = qr[i * q + k];
            norm_sq += v * v;
        }
        if norm_sq == 0.0 {
            continue; // column zero below; rank check below rejects
        }
        let norm = norm_sq.sqrt();
        let x0 = qr[k * q + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        // reflector v = x - alpha * e1
        let mut v = vec![0.0; p - k];
        v[0] = x0 - alpha;
        for i in k + 1..p {
            v[i - k] = qr[i * q + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        for j in k + 1..q {
            let mut w = 0.0;
            for i in k..p {
                w += v[i - k] * qr[i * q + j];
            }
            let bw = beta * w;
            for i in k..p {
                qr[i * q + j] -= bw * v[i - k];
            }
        }
        for j in 0..r {
            let mut w = 0.0;
            for i in k..p {
                w += v[i - k] * rhs[i * r + j];
            }
            let bw = beta * w;
            for i in k..p {
                rhs[i * r + j] -= bw * v[i - k];
            }
        }
        qr[k * q + k] = alpha;
        for i in k + 1..p {
            qr[i * q + k] = 0.0;
        }
    }
    let rdiag_max = (0..q).fold(0.0f64, |m, k| m.max(qr[k * q + k].abs()));
    if rdiag_max == 0.0 {
        return Err(MatrixError::RankDeficient);
    }
    let tol = f64::EPSILON * p.max(q) as f64 * rdiag_max;
    if (0..q).any(|k| qr[k * q + k].abs() <= tol) {
        return Err(MatrixError::RankDeficient);
    }
    // back substitution on the upper q x q triangle
    let mut x = vec![0.0; q * r];
    for j in 0..r {
        for k in (0..q).rev() {
            let mut acc = rhs[k * r + j];
            for m in k + 1..q {
                acc -= qr[k * q + m] * x[m * r + j];
            }
            x[k * r + j] = acc / qr[k * q + k];
        }
    }
    Matrix::new(q, r, x)
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues (cyclic Jacobi)
// ---------------------------------------------------------------------------

pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>, MatrixError> {
    if !m.is_square() {
        return Err(MatrixError::DimMismatch(format!(
            "symmetric_eigenvalues: {}x{}",
            m.rows, m.cols
        )));
    }
    if !symmetric_within(m, SYM_TOL) {
        return Err(MatrixError::NotSymmetric);
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let fro = m.frobenius_norm().max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * fro {
            let mut evs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(evs);
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rows p, q
                for k in 0..n {
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                // columns p, q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
            }
        }
    }
    Err(MatrixError::NoConvergence)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue_symmetric(m: &Matrix) -> Result<f64, MatrixError> {
    let evs = symmetric_eigenvalues(m)?;
    Ok(*evs.last().expect("non-empty"))
}

// ---------------------------------------------------------------------------
// General eigenvalues (Hessenberg reduction + Francis double-shift QR)
// ---------------------------------------------------------------------------

fn to_hessenberg(m: &Matrix) -> Vec<f64> {
    let n = m.rows;
    let mut h = m.data.clone();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let mut norm_sq = 0.0;
        for i in k + 1..n {
            let v = h[i * n + k];
            norm_sq += v * v;
        }
        if norm_sq == 0.0 {
            continue;
        }
        let norm = norm_sq.sqrt();
        let x0 = h[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k - 1];
        v[0] = x0 - alpha;
        for i in k + 2..n {
            v[i - k - 1] = h[i * n + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;
        // H <- P H (rows k+1..n)
        for j in 0..n {
            let mut w = 0.0;
            for i in k + 1..n {
                w += v[i - k - 1] * h[i * n + j];
            }
            let bw = beta * w;
            for i in k + 1..n {
                h[i * n + j] -= bw * v[i - k - 1];
            }
        }
        // H <- H P (cols k+1..n)
        for i in 0..n {
            let mut w = 0.0;
            for j in k + 1..n {
                w += h[i * n + j] * v[j - k - 1];
            }
            let bw = beta * w;
            for j in k + 1..n {
                h[i * n + j] -= bw * v[j - k - 1];
            }
        }
        h[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            h[i * n + k] = 0.0;
        }
    }
    h
}

/// Eigenvalues of a general real square matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<(f64, f64)>, MatrixError> {
    if !m.is_square() {
        return Err(MatrixError::DimMismatch(format!(
            "eigenvalues: {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if n == 1 {
        return Ok(vec![(m.at(0, 0), 0.0)]);
    }
    let mut h = to_hessenberg(m);
    hqr(&mut h, n)
}

/// Largest eigenvalue real part; negative means Hurwitz.
pub fn hurwitz_margin(m: &Matrix) -> Result<f64, MatrixError> {
    let evs = eigenvalues(m)?;
    Ok(evs.iter().fold(f64::NEG_INFINITY, |acc, &(re, _)| acc.max(re)))
}

#[inline]
fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Shifted-QR eigenvalue iteration on an upper Hessenberg matrix
/// (Francis double shift with deflation and exceptional shifts).
fn hqr(h: &mut [f64], n: usize) -> Result<Vec<(f64, f64)>, MatrixError> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[idx(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![(0.0, 0.0); n]);
    }
    let mut nn: isize = n as isize - 1;
    let mut t = 0.0f64;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nnu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = 0usize;
            for ll in (1..=nnu).rev() {
                let mut s = h[idx(ll - 1, ll - 1)].abs() + h[idx(ll, ll)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[idx(ll, ll - 1)].abs() <= f64::EPSILON * s {
                    l = ll;
                    break;
                }
            }
            let mut x = h[idx(nnu, nnu)];
            if l == nnu {
                // one root found
                wr[nnu] = x + t;
                wi[nnu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h[idx(nnu - 1, nnu - 1)];
            let mut w = h[idx(nnu, nnu - 1)] * h[idx(nnu - 1, nnu)];
            if l == nnu - 1 {
                // two roots found
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign_of(z, p);
                    wr[nnu - 1] = x + z;
                    wr[nnu] = wr[nnu - 1];
                    if z != 0.0 {
                        wr[nnu] = x - w / z;
                    }
                    wi[nnu - 1] = 0.0;
                    wi[nnu] = 0.0;
                } else {
                    wr[nnu - 1] = x + p;
                    wr[nnu] = x + p;
                    wi[nnu - 1] = -z;
                    wi[nnu] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(MatrixError::NoConvergence);
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nnu {
                    h[idx(i, i)] -= x;
                }
                let s = h[idx(nnu, nnu - 1)].abs() + h[idx(nnu - 1, nnu - 2)].abs();
                y = 0.75 * s;
                x = y;
                w = -0.4375 * s * s;
            }
            its += 1;
            // form shift, look for two consecutive small subdiagonal elements
            let mut mm = nnu - 2;
            let (m, mut p, mut q, mut r) = loop {
                let z = h[idx(mm, mm)];
                let rr = x - z;
                let ss = y - z;
                let mut p = (rr * ss - w) / h[idx(mm + 1, mm)] + h[idx(mm, mm + 1)];
                let mut q = h[idx(mm + 1, mm + 1)] - z - rr - ss;
                let mut r = h[idx(mm + 2, mm + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if mm == l {
                    break (mm, p, q, r);
                }
                let u = h[idx(mm, mm - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (h[idx(mm - 1, mm - 1)].abs() + z.abs() + h[idx(mm + 1, mm + 1)].abs());
                if u <= f64::EPSILON * v {
                    break (mm, p, q, r);
                }
                mm -= 1;
            };
            for i in m + 2..=nnu {
                h[idx(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }
            // double QR step on rows l..nn, columns m..nn
            for k in m..nnu {
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = if k != nnu - 1 { h[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                    }
                } else {
                    h[idx(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                // row modification
                for j in k..=nnu {
                    let mut pp = h[idx(k, j)] + q * h[idx(k + 1, j)];
                    if k != nnu - 1 {
                        pp += r * h[idx(k + 2, j)];
                        h[idx(k + 2, j)] -= pp * z;
                    }
                    h[idx(k + 1, j)] -= pp * y;
                    h[idx(k, j)] -= pp * x;
                }
                let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                // column modification
                for i in l..=mmin {
                    let mut pp = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                    if k != nnu - 1 {
                        pp += z * h[idx(i, k + 2)];
                        h[idx(i, k + 2)] -= pp * r;
                    }
                    h[idx(i, k + 1)] -= pp * q;
                    h[idx(i, k)] -= pp;
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

// ---------------------------------------------------------------------------
// Lyapunov equation
// ---------------------------------------------------------------------------

/// Solves `Q + A_rᵀ P + P A_r = 0` for symmetric positive definite `P`.
///
/// Uses a Kronecker-vectorized dense LU solve, which is plenty for the
/// state dimensions this crate targets (n <= 20). The residual is checked
/// against `1e-10 * max(1, ‖Q‖_F)` before the solution is returned.
pub fn solve_lyapunov(a_r: &Matrix, q: &Matrix) -> Result<Matrix, MatrixError> {
    if !a_r.is_square() || !q.is_square() || a_r.rows != q.rows {
        return Err(MatrixError::DimMismatch(format!(
            "lyapunov: a_r {}x{}, q {}x{}",
            a_r.rows, a_r.cols, q.rows, q.cols
        )));
    }
    if !is_spd(q) {
        return Err(MatrixError::NotSpd);
    }
    let n = a_r.rows;
    let nn = n * n;
    // (I ⊗ A_rᵀ + A_rᵀ ⊗ I) vec(P) = -vec(Q), column-major vec: r = i + n*j
    let mut m = vec![0.0f64; nn * nn];
    let mut rhs = vec![0.0f64; nn];
    for i in 0..n {
        for j in 0..n {
            let row = i + n * j;
            for k in 0..n {
                m[row * nn + (k + n * j)] += a_r.at(k, i);
                m[row * nn + (i + n * k)] += a_r.at(k, j);
            }
            rhs[row] = -q.at(i, j);
        }
    }
    let big = Matrix { rows: nn, cols: nn, data: m };
    let fac = lu_factor(&big).map_err(|_| MatrixError::Singular("lyapunov"))?;
    fac.solve(&mut rhs, 1);
    let unvec = |v: &[f64]| {
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                p.set(i, j, v[i + n * j]);
            }
        }
        p
    };
    let mut p = unvec(&rhs);
    let residual_of = |p: &Matrix| -> Result<Matrix, MatrixError> {
        q.add(&a_r.transpose().matmul(p)?)?.add(&p.matmul(a_r)?)
    };
    // one pass of iterative refinement keeps the residual near the
    // rounding floor even for poorly conditioned a_r
    let res = residual_of(&p)?;
    let mut corr = vec![0.0f64; nn];
    for i in 0..n {
        for j in 0..n {
            corr[i + n * j] = -res.at(i, j);
        }
    }
    fac.solve(&mut corr, 1);
    p = p.add(&unvec(&corr))?;
    // clean up roundoff asymmetry
    let pt = p.transpose();
    let p = p.add(&pt)?.scale(0.5);
    if residual_of(&p)?.frobenius_norm() > 1e-10 * q.frobenius_norm().max(1.0) {
        return Err(MatrixError::Singular("lyapunov"));
    }
    Ok(p)
}

// ---------------------------------------------------------------------------
// Rank (full-pivot Gaussian elimination)
// ---------------------------------------------------------------------------

pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.data.clone();
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let tol = rel_tol * scale;
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    let mut r = 0;
    loop {
        let mut best = 0.0;
        let mut bi = 0;
        let mut bj = 0;
        for i in 0..rows {
            if row_used[i] {
                continue;
            }
            for j in 0..cols {
                if col_used[j] {
                    continue;
                }
                let v = a[i * cols + j].abs();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if best <= tol {
            return r;
        }
        r += 1;
        row_used[bi] = true;
        col_used[bj] = true;
        let pivot = a[bi * cols + bj];
        for i in 0..rows {
            if row_used[i] {
                continue;
            }
            let f = a[i * cols + bj] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in 0..cols {
                a[i * cols + j] -= f * a[bi * cols + j];
            }
        }
    }
}
