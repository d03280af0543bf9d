//! Forward cubature Kalman filter.
//!
//! One epoch is a [`predict`] followed by an [`update`]; the update draws a
//! fresh cubature point set from the predicted moments. Every epoch is kept
//! as a [`FilterStepRecord`] because both the smoother and the noise
//! estimators consume the intermediates.

use crate::cubature::{spherical_radial_transform, TransformResult};
use crate::error::{Error, Result};
use crate::matlib::{psd_guard, solve_spd, vsub, Matrix, SpdMatrix};
use crate::scalar::Scalar;
use crate::ssmodel::{wrap_angle, wrap_components, NoiseSpec, StateSpaceModel};

/// Gaussian belief at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussState<T> {
    pub mean: Vec<T>,
    pub cov: SpdMatrix<T>,
}

impl<T: Scalar> GaussState<T> {
    pub fn new(mean: Vec<T>, cov: SpdMatrix<T>) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state mean has {} entries, covariance is {1}x{1}",
                mean.len(),
                cov.dim()
            )));
        }
        Ok(Self { mean, cov })
    }
}

/// Output of the time update, ready for [`update`].
#[derive(Debug, Clone)]
pub struct Prediction<T> {
    pub epoch: usize,
    pub state: GaussState<T>,
    pub transform: TransformResult<T>,
    pub q_used: SpdMatrix<T>,
}

/// Everything computed during one filter epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStepRecord<T> {
    pub epoch: usize,
    pub predicted: GaussState<T>,
    pub updated: GaussState<T>,
    pub gain: Matrix<T>,
    /// `z - ẑ⁻`, angular components wrapped.
    pub innovation: Vec<T>,
    /// `P_zz`, including the measurement noise.
    pub innovation_cov: SpdMatrix<T>,
    /// `P_xz`.
    pub cross_cov: Matrix<T>,
    /// Transform of the previous posterior through the process model.
    pub process_points: TransformResult<T>,
    /// Transform of the predicted state through the measurement model.
    pub meas_points: TransformResult<T>,
    pub q_used: SpdMatrix<T>,
    pub r_used: SpdMatrix<T>,
}

/// Time update: propagate `prior` through the process model and add `q`.
pub fn predict<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    prior: &GaussState<T>,
    model: &M,
    q: &SpdMatrix<T>,
    epoch: usize,
) -> Result<Prediction<T>> {
    if prior.mean.len() != model.state_dim() || q.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch("prediction inputs disagree with model".into()));
    }
    let transform = spherical_radial_transform(&prior.mean, &prior.cov, |x| Ok(model.process(x, epoch)))?;
    let cov = psd_guard(&(&transform.cov_out + q.as_matrix()))?;
    Ok(Prediction {
        epoch,
        state: GaussState {
            mean: transform.mean_out.clone(),
            cov,
        },
        transform,
        q_used: q.clone(),
    })
}

/// Measurement update with a fresh cubature point set.
pub fn update<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    prediction: Prediction<T>,
    z: &[T],
    model: &M,
    r: &SpdMatrix<T>,
) -> Result<FilterStepRecord<T>> {
    let m = model.meas_dim();
    if z.len() != m || r.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "measurement has {} entries, R is {1}x{1}, model expects {m}",
            z.len(),
            r.dim()
        )));
    }
    let predicted = prediction.state;

    // Angular outputs are unwrapped around a reference so that points on
    // either side of the ±π seam average correctly.
    let reference = model.measure(&predicted.mean).ok();
    let meas_points = spherical_radial_transform(&predicted.mean, &predicted.cov, |x| {
        let mut y = model.measure(x)?;
        if let Some(reference) = &reference {
            for (i, v) in y.iter_mut().enumerate() {
                if model.is_angular(i) {
                    *v = reference[i] + wrap_angle(*v - reference[i]);
                }
            }
        }
        Ok(y)
    })?;

    let innovation_cov = psd_guard(&(&meas_points.cov_out + r.as_matrix()))?;
    let cross_cov = meas_points.cross_cov.clone();
    let gain = solve_spd(&innovation_cov, &cross_cov.transpose())?.transpose();

    let mut innovation = vsub(z, &meas_points.mean_out);
    wrap_components(model, &mut innovation);

    let correction = gain.mul_vec(&innovation);
    let mean: Vec<T> = predicted.mean.iter().zip(&correction).map(|(&a, &b)| a + b).collect();
    let shrink = &(&gain * innovation_cov.as_matrix()) * &gain.transpose();
    let cov = psd_guard(&(predicted.cov.as_matrix() - &shrink))?;

    Ok(FilterStepRecord {
        epoch: prediction.epoch,
        predicted,
        updated: GaussState { mean, cov },
        gain,
        innovation,
        innovation_cov,
        cross_cov,
        process_points: prediction.transform,
        meas_points,
        q_used: prediction.q_used,
        r_used: r.clone(),
    })
}

/// One full predict/update cycle.
pub fn step<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    prior: &GaussState<T>,
    z: &[T],
    model: &M,
    q: &SpdMatrix<T>,
    r: &SpdMatrix<T>,
    epoch: usize,
) -> Result<FilterStepRecord<T>> {
    let prediction = predict(prior, model, q, epoch)?;
    update(prediction, z, model, r)
}

/// Filters a measurement sequence with constant noise covariances.
///
/// `init` is the belief one step before the first measurement; epoch `k`
/// predicts from the previous posterior and then absorbs `measurements[k]`.
pub fn run_filter<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    model: &M,
    noise: &NoiseSpec<T>,
    init: &GaussState<T>,
    measurements: &[Vec<T>],
) -> Result<Vec<FilterStepRecord<T>>> {
    if measurements.is_empty() {
        return Err(Error::EmptyInput);
    }
    let q = noise.q_spd()?;
    let r = noise.r_spd()?;
    let mut records: Vec<FilterStepRecord<T>> = Vec::with_capacity(measurements.len());
    for (k, z) in measurements.iter().enumerate() {
        let prior = records.last().map_or(init, |rec| &rec.updated);
        let rec = step(prior, z, model, &q, &r, k).map_err(|e| e.at_epoch(k))?;
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlib::min_eigenvalue;
    use crate::ssmodel::{AffineModel, FnModel, TrackingModel, TrackingModelParams};

    fn scalar_model() -> AffineModel<f64> {
        AffineModel::new(Matrix::identity(1), vec![0.0], Matrix::identity(1), vec![0.0]).unwrap()
    }

    #[test]
    fn scalar_update_matches_hand_computation() {
        // P⁻ = 1, R = 1 → K = 0.5, P = 0.5
        let model = scalar_model();
        let prior = GaussState::new(vec![0.0], SpdMatrix::from_diagonal(&[1.0]).unwrap()).unwrap();
        let pred = Prediction {
            epoch: 0,
            state: prior.clone(),
            transform: spherical_radial_transform(&prior.mean, &prior.cov, |x| Ok(x.to_vec())).unwrap(),
            q_used: SpdMatrix::from_diagonal(&[1e-9]).unwrap(),
        };
        let rec = update(pred, &[2.0], &model, &SpdMatrix::from_diagonal(&[1.0]).unwrap()).unwrap();
        assert!((rec.gain[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rec.updated.cov[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rec.updated.mean[0] - 1.0).abs() < 1e-15);
        assert!((rec.innovation_cov[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_innovation_keeps_predicted_mean() {
        let model = TrackingModel::new(TrackingModelParams::linear()).unwrap();
        let prior = GaussState::new(
            vec![100.0, 100.0, 50.0, 50.0],
            SpdMatrix::<f64>::from_diagonal(&[4.0, 4.0, 4.0, 4.0]).unwrap(),
        )
        .unwrap();
        let q = SpdMatrix::from_diagonal(&[0.2; 4]).unwrap();
        let r = SpdMatrix::from_diagonal(&[100.0, 3e-3]).unwrap();
        let pred = predict(&prior, &model, &q, 0).unwrap();
        let zhat = spherical_radial_transform(&pred.state.mean, &pred.state.cov, |x| model.measure(x))
            .unwrap()
            .mean_out;
        let rec = update(pred, &zhat, &model, &r).unwrap();
        assert!(rec.innovation.iter().all(|v| v.abs() < 1e-12));
        for (a, b) in rec.updated.mean.iter().zip(&rec.predicted.mean) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_prediction_without_noise() {
        let model = FnModel::new(2, 1, |x: &[f64], _| x.to_vec(), |x| Ok(vec![x[0]]));
        let prior = GaussState::new(
            vec![1.0, 2.0],
            SpdMatrix::new(Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap()).unwrap(),
        )
        .unwrap();
        let q = SpdMatrix::from_diagonal(&[1e-300, 1e-300]).unwrap();
        let pred = predict(&prior, &model, &q, 0).unwrap();
        assert!(pred.state.cov.max_abs_diff(&prior.cov) < 1e-14);
        assert_eq!(pred.state.mean.len(), 2);
        assert!((pred.state.mean[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_prior_spread_collapses_to_point_propagation() {
        let params = TrackingModelParams {
            ts: 0.1,
            g: 9.8,
            kx: 0.01,
            ky: 0.01,
        };
        let model = TrackingModel::new(params).unwrap();
        let mu = vec![3.0f64, 1.0, 4.0, -2.0];
        let prior = GaussState::new(mu.clone(), SpdMatrix::from_diagonal(&[1e-12; 4]).unwrap()).unwrap();
        let pred = predict(&prior, &model, &SpdMatrix::from_diagonal(&[1e-6; 4]).unwrap(), 1).unwrap();
        let exact = model.process(&mu, 1);
        for (a, b) in pred.state.mean.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn posterior_never_exceeds_prior() {
        let model = TrackingModel::new(TrackingModelParams::linear()).unwrap();
        let prior = GaussState::new(
            vec![120.0, 90.0, 40.0, 55.0],
            SpdMatrix::from_diagonal(&[100.0; 4]).unwrap(),
        )
        .unwrap();
        let q = SpdMatrix::from_diagonal(&[0.2; 4]).unwrap();
        let r = SpdMatrix::from_diagonal(&[100.0, 3e-3]).unwrap();
        let rec = step(&prior, &[130.0, 0.35], &model, &q, &r, 0).unwrap();
        let diff = rec.predicted.cov.as_matrix() - rec.updated.cov.as_matrix();
        assert!(min_eigenvalue(&diff).unwrap() >= -1e-10);
        assert!(rec.updated.cov.trace() < rec.predicted.cov.trace());
    }

    #[test]
    fn bearing_innovation_wraps_across_seam() {
        let model = TrackingModel::new(TrackingModelParams::linear()).unwrap();
        // predicted bearing just below +π, measurement just above -π
        let prior = GaussState::new(
            vec![-1000.0, 0.0, 1.0, 0.0],
            SpdMatrix::from_diagonal(&[1.0, 1.0, 1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let q = SpdMatrix::from_diagonal(&[1e-6; 4]).unwrap();
        let r = SpdMatrix::from_diagonal(&[1.0, 1e-4]).unwrap();
        let z = [1000.0, -std::f64::consts::PI + 0.001];
        let rec = step(&prior, &z, &model, &q, &r, 0).unwrap();
        assert!(rec.innovation[1].abs() < 0.01, "{:?}", rec.innovation);
    }

    #[test]
    fn run_filter_contracts() {
        let model = scalar_model();
        let noise = NoiseSpec::diagonal(&[0.04], &[1.0]).unwrap();
        let init = GaussState::new(vec![0.0], SpdMatrix::identity(1)).unwrap();
        assert_eq!(run_filter(&model, &noise, &init, &[]), Err(Error::EmptyInput));
        let one = run_filter(&model, &noise, &init, &[vec![0.3]]).unwrap();
        assert_eq!(one.len(), 1);
        let zs: Vec<Vec<f64>> = (0..20).map(|k| vec![(k as f64 * 0.7).sin()]).collect();
        let a = run_filter(&model, &noise, &init, &zs).unwrap();
        let b = run_filter(&model, &noise, &init, &zs).unwrap();
        assert_eq!(a, b);
        let bad = vec![vec![0.0], vec![0.0, 1.0]];
        let err = run_filter(&model, &noise, &init, &bad).unwrap_err();
        assert_eq!(err.epoch(), Some(1));
    }
}
