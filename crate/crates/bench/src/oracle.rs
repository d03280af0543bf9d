//! Textbook linear Kalman filter and RTS smoother on nalgebra.
//!
//! Shares no code with the cubature path, so agreement on affine models is
//! an end-to-end check of the filter, the smoother and the cubature rule.

use nalgebra::{DMatrix, DVector};
use wrw_core::{FilterStepRecord, Matrix, SmoothedTrajectory};

use crate::error::{BenchError, Result};
use crate::scenario::ScenarioConfig;

/// `x_k = A x_{k-1} + b + w`, `z_k = C x_k + d + v`.
#[derive(Debug, Clone)]
pub struct LinearGaussianSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct KalmanOutput {
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct RtsOutput {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

fn to_dmatrix(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

impl LinearGaussianSystem {
    /// The drag-free tracking dynamics observed linearly, with the filter's
    /// assumed noise. Fails unless the scenario is exactly linear.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        let m = &cfg.model;
        if m.kx != 0.0 || m.ky != 0.0 {
            return Err(BenchError::Config(
                "the linear oracle needs model.kx = model.ky = 0".into(),
            ));
        }
        let (c, d) = cfg
            .linear_observation()
            .map_err(|_| BenchError::Config("the linear oracle needs measurement.kind = \"linear\"".into()))?;
        let ts = m.ts;
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, ts,  0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, ts,
            0.0, 0.0, 0.0, 1.0,
        ]);
        let noise = cfg.filter_noise()?;
        Ok(Self {
            a,
            b: DVector::from_vec(vec![0.0, 0.0, 0.0, -ts * m.g]),
            c: to_dmatrix(&c),
            d: DVector::from_vec(d),
            q: to_dmatrix(&noise.q),
            r: to_dmatrix(&noise.r),
        })
    }
}

fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| BenchError::Numerical("oracle covariance is not positive definite".into()))
}

/// Covariance-form Kalman filter with the Joseph update.
pub fn kalman_filter(
    sys: &LinearGaussianSystem,
    x0: &DVector<f64>,
    p0: &DMatrix<f64>,
    measurements: &[Vec<f64>],
) -> Result<KalmanOutput> {
    let n = x0.len();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut out = KalmanOutput {
        predicted_means: Vec::with_capacity(measurements.len()),
        predicted_covs: Vec::with_capacity(measurements.len()),
        filtered_means: Vec::with_capacity(measurements.len()),
        filtered_covs: Vec::with_capacity(measurements.len()),
    };
    let mut x = x0.clone();
    let mut p = p0.clone();
    for z in measurements {
        let x_pred = &sys.a * &x + &sys.b;
        let p_pred = &sys.a * &p * sys.a.transpose() + &sys.q;
        let s = &sys.c * &p_pred * sys.c.transpose() + &sys.r;
        let k = &p_pred * sys.c.transpose() * spd_inverse(&s)?;
        let resid = DVector::from_column_slice(z) - (&sys.c * &x_pred + &sys.d);
        x = &x_pred + &k * resid;
        let ikc = &identity - &k * &sys.c;
        p = &ikc * &p_pred * ikc.transpose() + &k * &sys.r * k.transpose();
        out.predicted_means.push(x_pred);
        out.predicted_covs.push(p_pred);
        out.filtered_means.push(x.clone());
        out.filtered_covs.push(p.clone());
    }
    Ok(out)
}

/// Backward RTS pass over a [`kalman_filter`] output.
pub fn rts_smoother(sys: &LinearGaussianSystem, kf: &KalmanOutput) -> Result<RtsOutput> {
    let n = kf.filtered_means.len();
    let mut means = kf.filtered_means.clone();
    let mut covs = kf.filtered_covs.clone();
    for k in (0..n.saturating_sub(1)).rev() {
        let g = &kf.filtered_covs[k] * sys.a.transpose() * spd_inverse(&kf.predicted_covs[k + 1])?;
        means[k] = &kf.filtered_means[k] + &g * (&means[k + 1] - &kf.predicted_means[k + 1]);
        covs[k] = &kf.filtered_covs[k] + &g * (&covs[k + 1] - &kf.predicted_covs[k + 1]) * g.transpose();
    }
    Ok(RtsOutput { means, covs })
}

/// Largest absolute entrywise differences between the cubature path and
/// the oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleDiff {
    pub filter_mean: f64,
    pub filter_cov: f64,
    pub smoother_mean: f64,
    pub smoother_cov: f64,
}

impl OracleDiff {
    pub fn max(&self) -> f64 {
        self.filter_mean
            .max(self.filter_cov)
            .max(self.smoother_mean)
            .max(self.smoother_cov)
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            filter_mean: self.filter_mean.max(other.filter_mean),
            filter_cov: self.filter_cov.max(other.filter_cov),
            smoother_mean: self.smoother_mean.max(other.smoother_mean),
            smoother_cov: self.smoother_cov.max(other.smoother_cov),
        }
    }
}

fn max_vec_diff(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_mat_diff(a: &Matrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    worst
}

pub fn compare(
    records: &[FilterStepRecord<f64>],
    smoothed: &SmoothedTrajectory<f64>,
    kf: &KalmanOutput,
    rts: &RtsOutput,
) -> OracleDiff {
    let mut d = OracleDiff::default();
    for (k, rec) in records.iter().enumerate() {
        d.filter_mean = d
            .filter_mean
            .max(max_vec_diff(&rec.updated.mean, &kf.filtered_means[k]));
        d.filter_cov = d.filter_cov.max(max_mat_diff(&rec.updated.cov, &kf.filtered_covs[k]));
    }
    for (k, s) in smoothed.states.iter().enumerate() {
        d.smoother_mean = d.smoother_mean.max(max_vec_diff(&s.mean, &rts.means[k]));
        d.smoother_cov = d.smoother_cov.max(max_mat_diff(&s.cov, &rts.covs[k]));
    }
    d
}
