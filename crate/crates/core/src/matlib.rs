//! Small dense linear-algebra kernel.
//!
//! Everything the estimators need and nothing more: a row-major [`Matrix`],
//! the [`SpdMatrix`] newtype for covariances, a jittered lower-triangular
//! Cholesky factorization, SPD solves by forward/back substitution, a cyclic
//! Jacobi eigensolver for symmetric matrices and the PSD projection built on it.
//! Problem sizes are a handful of states, so clarity wins over blocking.

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative asymmetry accepted by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative eigenvalue floor used by [`psd_project`].
pub const PSD_FLOOR: f64 = 1e-12;

/// Jitter multipliers (times `trace / n`) tried when a Cholesky pivot fails.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-9, 1e-6];

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[T]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(rows.min(cols)));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            rows,
            cols,
            data: entries.to_vec(),
        })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            entries.extend_from_slice(row);
        }
        Self::from_row_slice(r, c, &entries)
    }

    /// `n x 1` column matrix.
    pub fn column(v: &[T]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `a * b^T` for two vectors.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                m[(i, j)] = ai * bj;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let half = T::lit(0.5);
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)) {
            write!(f, "  ")?;
            for v in row {
                write!(f, " {v:?}")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Symmetric positive-definite matrix.
///
/// Construction symmetrizes the input and proves definiteness with a
/// (possibly jittered) Cholesky factorization.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix<T>(Matrix<T>);

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let asym = m.max_asymmetry();
        let allowed = T::lit(SYMMETRY_TOL) * m.max_abs().max(T::min_positive_value());
        if asym > allowed {
            return Err(Error::NotSymmetric(asym.to_f64_lossy()));
        }
        let s = m.symmetrize();
        cholesky_factor(&s)?;
        Ok(Self(s))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    /// Explicit inverse via Cholesky solves against the identity.
    pub fn inverse(&self) -> Result<Matrix<T>> {
        solve_spd(self, &Matrix::identity(self.dim())).map(|m| m.symmetrize())
    }

    pub fn cast<U: Scalar>(&self) -> SpdMatrix<U> {
        SpdMatrix(self.0.cast())
    }
}

impl<T> Deref for SpdMatrix<T> {
    type Target = Matrix<T>;
    fn deref(&self) -> &Matrix<T> {
        &self.0
    }
}

impl<T: fmt::Debug> fmt::Debug for SpdMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Spd{:?}", self.0)
    }
}

/// Unjittered Cholesky. On failure returns the index of the first bad pivot.
fn cholesky_plain<T: Scalar>(a: &Matrix<T>) -> std::result::Result<Matrix<T>, usize> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(j);
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Lower-triangular Cholesky factor of a square symmetric matrix.
///
/// A failing pivot triggers retries on `A + δI` with
/// `δ ∈ {1e-12, 1e-9, 1e-6} · trace(A)/n` before giving up.
pub fn cholesky_factor<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let n = a.rows;
    let pivot = match cholesky_plain(a) {
        Ok(l) => return Ok(l),
        Err(p) => p,
    };
    let mean_diag = a.trace() / T::from_count(n);
    if mean_diag > T::zero() && mean_diag.is_finite() {
        for &mult in &JITTER_LADDER {
            let delta = T::lit(mult) * mean_diag;
            let mut jittered = a.clone();
            for i in 0..n {
                jittered[(i, i)] += delta;
            }
            if let Ok(l) = cholesky_plain(&jittered) {
                log::debug!("cholesky: pivot {pivot} failed, recovered with jitter {delta:e}");
                return Ok(l);
            }
        }
    }
    Err(Error::NotPositiveDefinite { pivot, dim: n })
}

/// Lower-triangular `L` with `L L^T = S`.
pub fn cholesky<T: Scalar>(s: &SpdMatrix<T>) -> Result<Matrix<T>> {
    cholesky_factor(s.as_matrix())
}

/// Solves `S X = B` through the Cholesky factor of `S`.
pub fn solve_spd<T: Scalar>(s: &SpdMatrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = s.dim();
    if b.rows != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: {n}x{n} system with {}-row right-hand side",
            b.rows
        )));
    }
    let l = cholesky(s)?;
    let m = b.cols;
    let mut x = b.clone();
    // L Y = B
    for c in 0..m {
        for i in 0..n {
            let mut v = x[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    // L^T X = Y
    for c in 0..m {
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for k in (i + 1)..n {
                v -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = v / l[(i, i)];
        }
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the second matrix.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigen needs a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows;
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let two = T::lit(2.0);

    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= T::epsilon() * T::lit(1e-2) * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok((values, vectors))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let (values, _) = symmetric_eigen(a)?;
    Ok(*values.last().expect("non-empty matrix"))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let (values, _) = symmetric_eigen(a)?;
    Ok(values[0])
}

/// Projects onto the SPD cone: symmetrize, then clip eigenvalues below
/// `1e-12 · max(1, λ_max)`.
pub fn psd_project<T: Scalar>(a: &Matrix<T>) -> Result<SpdMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "psd_project needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let (values, vectors) = symmetric_eigen(a)?;
    let lmax = values[n - 1];
    let floor = T::lit(PSD_FLOOR).max(T::epsilon()) * T::one().max(lmax);
    let mut out = Matrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let lambda = lambda.max(floor);
        for i in 0..n {
            let vik = vectors[(i, k)] * lambda;
            for j in 0..n {
                out[(i, j)] += vik * vectors[(j, k)];
            }
        }
    }
    Ok(SpdMatrix(out.symmetrize()))
}

/// Symmetrizes and keeps the result when it already factorizes without
/// jitter; otherwise falls back to [`psd_project`].
pub fn psd_guard<T: Scalar>(a: &Matrix<T>) -> Result<SpdMatrix<T>> {
    let s = a.symmetrize();
    if !s.is_finite() {
        return Err(Error::NonFinite);
    }
    if cholesky_plain(&s).is_ok() {
        return Ok(SpdMatrix(s));
    }
    psd_project(&s)
}

pub(crate) fn vsub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub(crate) fn vadd<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub(crate) fn vnorm<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
        let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = Matrix::from_row_slice(n, n, &entries).unwrap();
        &(&m.transpose() * &m) + &Matrix::identity(n)
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let l = cholesky(&SpdMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
        let l = cholesky(&SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        assert_eq!(l, Matrix::from_diagonal(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_spd(&mut rng, 4);
        let l = cholesky(&SpdMatrix::new(a.clone()).unwrap()).unwrap();
        let rebuilt = &l * &l.transpose();
        assert!(rebuilt.max_abs_diff(&a) <= 1e-12 * a.frobenius_norm());
        for i in 0..4 {
            assert!(l[(i, i)] > 0.0);
            for j in (i + 1)..4 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_jitter_rescues_singular_psd() {
        // rank one, PSD but not PD
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let l = cholesky_factor(&a).unwrap();
        assert!(l[(1, 1)] > 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(matches!(
            cholesky_factor(&a),
            Err(Error::NotPositiveDefinite { pivot: 1, dim: 2 })
        ));
        assert!(SpdMatrix::new(a).is_err());
    }

    #[test]
    fn spd_rejects_asymmetric_and_nonsquare() {
        let a = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(SpdMatrix::new(a), Err(Error::NotSymmetric(_))));
        let b = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(SpdMatrix::new(b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn psd_project_examples() {
        let spd = Matrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]).unwrap();
        assert!(psd_project(&spd).unwrap().max_abs_diff(&spd) <= 1e-12);

        let clipped = psd_project(&Matrix::<f64>::from_diagonal(&[1.0, -0.5])).unwrap();
        assert!((clipped[(0, 0)] - 1.0).abs() <= 1e-15);
        assert!((clipped[(1, 1)] - 1e-12).abs() <= 1e-20);
        assert_eq!(clipped[(0, 1)], 0.0);

        let skew = Matrix::from_rows(&[[1.0, 0.4], [0.2, 1.0]]).unwrap();
        let expected = Matrix::from_rows(&[[1.0, 0.3], [0.3, 1.0]]).unwrap();
        assert!(psd_project(&skew).unwrap().max_abs_diff(&expected) <= 1e-12);

        assert!(matches!(
            psd_project(&Matrix::<f64>::zeros(2, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn solve_examples() {
        let b = Matrix::from_rows(&[[1.0, -2.0], [3.5, 0.25]]).unwrap();
        assert_eq!(solve_spd(&SpdMatrix::identity(2), &b).unwrap(), b);

        let s = SpdMatrix::from_diagonal(&[2.0, 4.0]).unwrap();
        let x = solve_spd(&s, &Matrix::column(&[2.0, 4.0])).unwrap();
        assert!(x.as_slice().iter().all(|v: &f64| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn eigen_of_known_matrix() {
        let a = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let v1 = vecs.col(1);
        assert!((v1[0].abs() - v1[1].abs()).abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let s = SpdMatrix::<f32>::from_diagonal(&[4.0, 9.0]).unwrap();
        let x = solve_spd(&s, &Matrix::column(&[8.0, 9.0])).unwrap();
        assert_eq!(x.as_slice(), &[2.0f32, 1.0]);
    }

    proptest! {
        #[test]
        fn solve_round_trip(seed in any::<u64>(), n in 1usize..=8, m in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_spd(&mut rng, n);
            let x0: Vec<f64> = (0..n * m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x0 = Matrix::from_row_slice(n, m, &x0).unwrap();
            let b = &s * &x0;
            let x = solve_spd(&SpdMatrix::new(s).unwrap(), &b).unwrap();
            prop_assert!(x.max_abs_diff(&x0) <= 1e-9);
        }

        #[test]
        fn psd_project_idempotent(seed in any::<u64>(), n in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let entries: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = Matrix::from_row_slice(n, n, &entries).unwrap();
            let once = psd_project(&a).unwrap();
            let twice = psd_project(once.as_matrix()).unwrap();
            prop_assert!(twice.max_abs_diff(&once) <= 1e-12);
            prop_assert!(min_eigenvalue(once.as_matrix()).unwrap() > 0.0);
        }
    }
}
