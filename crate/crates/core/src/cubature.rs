//! Third-degree spherical-radial cubature rule.
//!
//! `2L` equally weighted points at `±√L` along each axis of the whitened
//! space. The rule integrates Gaussian expectations of polynomials up to
//! degree three exactly, so affine maps are propagated without error.

use crate::error::{Error, Result};
use crate::matlib::{cholesky, vsub, Matrix, SpdMatrix};
use crate::scalar::Scalar;

/// Unit cubature points `ξ_i` for dimension `L` and their common weight.
#[derive(Debug, Clone, PartialEq)]
pub struct CubaturePointSet<T> {
    pub dim: usize,
    /// `+√L e_1, …, +√L e_L, -√L e_1, …, -√L e_L`.
    pub points: Vec<Vec<T>>,
    /// `1 / 2L`, shared by the mean and covariance sums.
    pub weight: T,
}

pub fn cubature_points<T: Scalar>(dim: usize) -> Result<CubaturePointSet<T>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let r = T::from_count(dim).sqrt();
    let mut points = Vec::with_capacity(2 * dim);
    for sign in [T::one(), -T::one()] {
        for j in 0..dim {
            let mut p = vec![T::zero(); dim];
            p[j] = sign * r;
            points.push(p);
        }
    }
    Ok(CubaturePointSet {
        dim,
        points,
        weight: T::one() / T::from_count(2 * dim),
    })
}

/// Moments of `y = f(x)` for `x ~ N(mean, cov)` under the cubature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult<T> {
    pub input_mean: Vec<T>,
    pub input_cov: SpdMatrix<T>,
    /// `S ξ_i + mean`, `S` the lower Cholesky factor of `cov`.
    pub input_points: Vec<Vec<T>>,
    /// `f(input_points[i])`.
    pub propagated_points: Vec<Vec<T>>,
    pub mean_out: Vec<T>,
    /// Weighted spread of the propagated points, symmetrized. No noise term.
    pub cov_out: Matrix<T>,
    /// `E[(x - mean)(y - mean_out)^T]`.
    pub cross_cov: Matrix<T>,
}

impl<T: Scalar> TransformResult<T> {
    /// Weight shared by every point.
    pub fn weight(&self) -> T {
        T::one() / T::from_count(self.input_points.len())
    }
}

/// Propagates `N(mean, cov)` through `f` with the cubature rule.
pub fn spherical_radial_transform<T, F>(mean: &[T], cov: &SpdMatrix<T>, mut f: F) -> Result<TransformResult<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let dim = mean.len();
    if cov.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "mean has {dim} entries, covariance is {0}x{0}",
            cov.dim()
        )));
    }
    let unit = cubature_points::<T>(dim)?;
    let sqrt_cov = cholesky(cov)?;

    let input_points: Vec<Vec<T>> = unit
        .points
        .iter()
        .map(|xi| {
            sqrt_cov
                .mul_vec(xi)
                .into_iter()
                .zip(mean)
                .map(|(a, &m)| a + m)
                .collect()
        })
        .collect();

    let mut propagated_points = Vec::with_capacity(input_points.len());
    for p in &input_points {
        let y = f(p)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation);
        }
        if let Some(first) = propagated_points.first() {
            let first: &Vec<T> = first;
            if first.len() != y.len() {
                return Err(Error::DimensionMismatch("map output length varies".into()));
            }
        }
        propagated_points.push(y);
    }
    let out_dim = propagated_points[0].len();
    let w = unit.weight;

    let mut mean_out = vec![T::zero(); out_dim];
    for y in &propagated_points {
        for (m, &v) in mean_out.iter_mut().zip(y) {
            *m += v;
        }
    }
    for m in mean_out.iter_mut() {
        *m *= w;
    }

    let mut cov_out = Matrix::zeros(out_dim, out_dim);
    let mut cross_cov = Matrix::zeros(dim, out_dim);
    for (x, y) in input_points.iter().zip(&propagated_points) {
        let dy = vsub(y, &mean_out);
        let dx = vsub(x, mean);
        for i in 0..out_dim {
            for j in 0..out_dim {
                cov_out[(i, j)] += dy[i] * dy[j];
            }
        }
        for i in 0..dim {
            for j in 0..out_dim {
                cross_cov[(i, j)] += dx[i] * dy[j];
            }
        }
    }

    Ok(TransformResult {
        input_mean: mean.to_vec(),
        input_cov: cov.clone(),
        input_points,
        propagated_points,
        mean_out,
        cov_out: cov_out.scale(w).symmetrize(),
        cross_cov: cross_cov.scale(w),
    })
}
