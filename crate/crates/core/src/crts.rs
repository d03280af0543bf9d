//! Cubature Rauch–Tung–Striebel smoother.
//!
//! The backward pass reuses the process transforms stored by the forward
//! filter: the cross-covariance between the posterior at `k` and the
//! prediction at `k + 1` is read off the points of record `k + 1`, so no
//! model evaluations happen here.

use crate::ckf::{FilterStepRecord, GaussState};
use crate::error::{Error, Result};
use crate::matlib::{psd_guard, solve_spd, vadd, vsub, Matrix};
use crate::scalar::Scalar;

/// Smoothed beliefs for every epoch of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTrajectory<T> {
    pub states: Vec<GaussState<T>>,
    /// `gains[k]` is the smoother gain of epoch `k`; the last epoch has none,
    /// so there is one fewer gain than states.
    pub gains: Vec<Matrix<T>>,
}

impl<T: Scalar> SmoothedTrajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn means(&self) -> impl Iterator<Item = &[T]> {
        self.states.iter().map(|s| s.mean.as_slice())
    }
}

/// Runs the backward recursion over `records`.
///
/// `x̂ˢ_N = x̂_N`, then for `k = N-1 … 0`:
/// `G_k = D_{k+1} (P̂⁻_{k+1})⁻¹`,
/// `x̂ˢ_k = x̂_k + G_k (x̂ˢ_{k+1} - x̂⁻_{k+1})`,
/// `P̂ˢ_k = P̂_k + G_k (P̂ˢ_{k+1} - P̂⁻_{k+1}) G_kᵀ`.
pub fn smooth<T: Scalar>(records: &[FilterStepRecord<T>]) -> Result<SmoothedTrajectory<T>> {
    let last = records.last().ok_or(Error::EmptyInput)?;
    let n = records.len();
    let mut states = vec![last.updated.clone(); n];
    let mut gains = vec![Matrix::zeros(0, 0); n - 1];

    for k in (0..n - 1).rev() {
        let filtered = &records[k].updated;
        let next = &records[k + 1];
        let d = &next.process_points.cross_cov;
        let gain = solve_spd(&next.predicted.cov, &d.transpose())
            .map_err(|e| e.at_epoch(k))?
            .transpose();

        let ahead = &states[k + 1];
        let mean = vadd(&filtered.mean, &gain.mul_vec(&vsub(&ahead.mean, &next.predicted.mean)));
        let delta = ahead.cov.as_matrix() - next.predicted.cov.as_matrix();
        let cov = filtered.cov.as_matrix() + &(&(&gain * &delta) * &gain.transpose());
        let cov = psd_guard(&cov).map_err(|e| e.at_epoch(k))?;

        states[k] = GaussState { mean, cov };
        gains[k] = gain;
    }
    Ok(SmoothedTrajectory { states, gains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ckf::run_filter;
    use crate::matlib::{min_eigenvalue, SpdMatrix};
    use crate::ssmodel::{simulate_trajectory, AffineModel, NoiseSpec};

    #[test]
    fn single_record_is_untouched() {
        let model = AffineModel::new(Matrix::identity(1), vec![0.0], Matrix::identity(1), vec![0.0]).unwrap();
        let noise = NoiseSpec::diagonal(&[0.1], &[1.0]).unwrap();
        let init = GaussState::new(vec![0.0], SpdMatrix::identity(1)).unwrap();
        let recs = run_filter(&model, &noise, &init, &[vec![0.4]]).unwrap();
        let s = smooth(&recs).unwrap();
        assert_eq!(s.states, vec![recs[0].updated.clone()]);
        assert!(s.gains.is_empty());
        assert_eq!(smooth::<f64>(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn scalar_random_walk_two_steps() {
        // by hand with P0 = Q = R = 1, z = [1, 3]:
        // k=0: P⁻ = 2, K = 2/3, x = 2/3, P = 2/3
        // k=1: P⁻ = 5/3, K = 5/8, P = 5/8
        // backward: G = P_0 / P⁻_1 = 2/5
        let model = AffineModel::new(Matrix::identity(1), vec![0.0], Matrix::identity(1), vec![0.0]).unwrap();
        let noise = NoiseSpec::diagonal(&[1.0], &[1.0]).unwrap();
        let init = GaussState::new(vec![0.0], SpdMatrix::identity(1)).unwrap();
        let recs = run_filter(&model, &noise, &init, &[vec![1.0], vec![3.0]]).unwrap();
        let x1: f64 = 2.0 / 3.0 + 5.0 / 8.0 * (3.0 - 2.0 / 3.0);
        assert!((recs[1].updated.mean[0] - x1).abs() < 1e-12);
        let s = smooth(&recs).unwrap();
        let g: f64 = 0.4;
        assert!((s.gains[0][(0, 0)] - g).abs() < 1e-12);
        let xs0: f64 = 2.0 / 3.0 + g * (x1 - 2.0 / 3.0);
        assert!((s.states[0].mean[0] - xs0).abs() < 1e-12);
        let p1 = 5.0 / 3.0 * (1.0 - 5.0 / 8.0);
        let ps0: f64 = 2.0 / 3.0 + g * g * (p1 - 5.0 / 3.0);
        assert!((s.states[0].cov[(0, 0)] - ps0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_and_psd_order_on_linear_model() {
        let ts = 0.1;
        let a = Matrix::from_rows(&[[1.0, ts], [0.0, 1.0]]).unwrap();
        let c = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let model = AffineModel::new(a, vec![0.0, 0.0], c, vec![0.0]).unwrap();
        let noise = NoiseSpec::diagonal(&[0.01, 0.05], &[0.5]).unwrap();
        let traj = simulate_trajectory(&model, &noise, &[0.0, 1.0], 60, 5).unwrap();
        let init = GaussState::new(vec![0.0, 1.0], SpdMatrix::identity(2)).unwrap();
        let recs = run_filter(&model, &noise, &init, &traj.measurements).unwrap();
        let s = smooth(&recs).unwrap();
        let last = recs.last().unwrap();
        assert_eq!(s.states.last().unwrap(), &last.updated);
        for (st, rec) in s.states.iter().zip(&recs) {
            let diff = rec.updated.cov.as_matrix() - st.cov.as_matrix();
            assert!(min_eigenvalue(&diff).unwrap() >= -1e-10);
        }
    }
}
