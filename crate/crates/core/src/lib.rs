//! Cubature Kalman filtering and Rauch–Tung–Striebel smoothing with
//! windowed, random-weighted adaptation of the process and measurement
//! noise covariances.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases at the bottom fix the common double-precision case.
//!
//! ```
//! use wrw_core::{run_wrwacrts, AdaptiveConfig, GaussState64, NoiseSpec, SpdMatrix,
//!                simulate_trajectory, TrackingModel, TrackingModelParams};
//!
//! let model = TrackingModel::new(TrackingModelParams::linear()).unwrap();
//! let noise = NoiseSpec::diagonal(&[0.1; 4], &[1.0, 1e-3]).unwrap();
//! let x0 = [100.0, 100.0, 50.0, 50.0];
//! let traj = simulate_trajectory(&model, &noise, &x0, 40, 7).unwrap();
//! let init = GaussState64::new(x0.to_vec(), SpdMatrix::identity(4)).unwrap();
//! let (records, smoothed) =
//!     run_wrwacrts(&model, &noise, &init, &traj.measurements, &AdaptiveConfig::default()).unwrap();
//! assert_eq!(records.len(), 40);
//! assert_eq!(smoothed.len(), 40);
//! ```

// `!(x > 0)` deliberately rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod ckf;
pub mod crts;
pub mod cubature;
pub mod error;
pub mod lyapunov;
pub mod matlib;
pub mod scalar;
pub mod ssmodel;

pub use adaptive::{
    run_adaptive_filter, run_wrwacrts, AdaptiveConfig, AdaptiveMode, NoiseEstimate, WeightVector, WindowBuffer,
};
pub use ckf::{predict, run_filter, step, update, FilterStepRecord, GaussState, Prediction};
pub use crts::{smooth, SmoothedTrajectory};
pub use cubature::{cubature_points, spherical_radial_transform, CubaturePointSet, TransformResult};
pub use error::{Error, Result};
pub use lyapunov::{convergence_check, ConvergenceReport, EpochCondition, LyapunovParams};
pub use matlib::{Matrix, SpdMatrix};
pub use scalar::Scalar;
pub use ssmodel::{
    simulate_trajectory, AffineModel, FnModel, NoiseSpec, StateSpaceModel, TrackingModel, TrackingModelParams,
    Trajectory,
};

pub type Matrix64 = Matrix<f64>;
pub type SpdMatrix64 = SpdMatrix<f64>;
pub type GaussState64 = GaussState<f64>;
pub type FilterStepRecord64 = FilterStepRecord<f64>;
pub type SmoothedTrajectory64 = SmoothedTrajectory<f64>;
pub type NoiseSpec64 = NoiseSpec<f64>;
pub type TrackingModel64 = TrackingModel<f64>;
pub type AdaptiveConfig64 = AdaptiveConfig<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
