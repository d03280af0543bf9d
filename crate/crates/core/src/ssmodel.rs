//! Process/measurement models and the seeded trajectory simulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matlib::{symmetric_eigen, vadd, Matrix, SpdMatrix};
use crate::scalar::Scalar;

/// Discrete-time model `x_k = f(x_{k-1}) + w`, `z_k = h(x_k) + v`.
///
/// The control input is fixed at zero, so `process` takes the state and
/// the epoch index only.
pub trait StateSpaceModel<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;

    fn meas_dim(&self) -> usize;

    /// Noise-free transition from epoch `epoch - 1` to `epoch`.
    fn process(&self, x: &[T], epoch: usize) -> Vec<T>;

    /// Noise-free measurement.
    fn measure(&self, x: &[T]) -> Result<Vec<T>>;

    /// Whether measurement component `i` is an angle wrapped to `(-π, π]`.
    fn is_angular(&self, _component: usize) -> bool {
        false
    }

    fn angle_mask(&self) -> Vec<bool> {
        (0..self.meas_dim()).map(|i| self.is_angular(i)).collect()
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    // floor puts the seam at -π; move it to +π
    if w <= -pi {
        w += two_pi;
    }
    if w > pi {
        w -= two_pi;
    }
    w
}

/// Wraps the components of `v` flagged as angular by the model.
pub fn wrap_components<T: Scalar, M: StateSpaceModel<T> + ?Sized>(model: &M, v: &mut [T]) {
    for (i, c) in v.iter_mut().enumerate() {
        if model.is_angular(i) {
            *c = wrap_angle(*c);
        }
    }
}

/// Constants of the four-state tracking benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingModelParams<T> {
    /// Sample period, s.
    pub ts: T,
    /// Gravity, m/s².
    pub g: T,
    /// Drag coefficient in the `x2` update, 1/m.
    pub kx: T,
    /// Lift/drag coefficient in the `x4` update, 1/m.
    pub ky: T,
}

impl<T: Scalar> TrackingModelParams<T> {
    /// `T_s = 0.1 s`, `g = 9.8 m/s²`, no drag.
    pub fn linear() -> Self {
        Self {
            ts: T::lit(0.1),
            g: T::lit(9.8),
            kx: T::zero(),
            ky: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.ts > T::zero()
            && self.g >= T::zero()
            && self.kx >= T::zero()
            && self.ky >= T::zero()
            && [self.ts, self.g, self.kx, self.ky].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "tracking params need ts > 0 and g, kx, ky >= 0 (got {self:?})"
            )))
        }
    }
}

/// Noise-free tracking transition.
pub fn tracking_process<T: Scalar>(x: &[T], p: &TrackingModelParams<T>) -> Vec<T> {
    let x3sq = x[2] * x[2];
    vec![
        x[0] + p.ts * x[2],
        x[1] + p.ts * (-p.kx * x3sq),
        x[2] + p.ts * x[3],
        x[3] + p.ts * (p.ky * x3sq - p.g),
    ]
}

/// Range and four-quadrant bearing of `(x1, x3)`.
pub fn tracking_measure<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    let (a, b) = (x[0], x[2]);
    if a == T::zero() && b == T::zero() {
        return Err(Error::OriginSingularity);
    }
    let range = a.hypot(b);
    let mut bearing = b.atan2(a);
    if bearing <= -T::PI() {
        bearing = T::PI();
    }
    Ok(vec![range, bearing])
}

/// The range/bearing tracking benchmark.
#[derive(Debug, Clone, Copy)]
pub struct TrackingModel<T> {
    pub params: TrackingModelParams<T>,
}

impl<T: Scalar> TrackingModel<T> {
    pub fn new(params: TrackingModelParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl<T: Scalar> StateSpaceModel<T> for TrackingModel<T> {
    fn state_dim(&self) -> usize {
        4
    }

    fn meas_dim(&self) -> usize {
        2
    }

    fn process(&self, x: &[T], _epoch: usize) -> Vec<T> {
        tracking_process(x, &self.params)
    }

    fn measure(&self, x: &[T]) -> Result<Vec<T>> {
        tracking_measure(x)
    }

    fn is_angular(&self, component: usize) -> bool {
        component == 1
    }
}

/// `x_k = A x_{k-1} + a`, `z_k = C x_k + c`.
#[derive(Debug, Clone)]
pub struct AffineModel<T> {
    pub transition: Matrix<T>,
    pub offset: Vec<T>,
    pub observation: Matrix<T>,
    pub obs_offset: Vec<T>,
}

impl<T: Scalar> AffineModel<T> {
    pub fn new(transition: Matrix<T>, offset: Vec<T>, observation: Matrix<T>, obs_offset: Vec<T>) -> Result<Self> {
        let n = transition.rows();
        if !transition.is_square()
            || offset.len() != n
            || observation.cols() != n
            || obs_offset.len() != observation.rows()
        {
            return Err(Error::DimensionMismatch("affine model blocks disagree".into()));
        }
        Ok(Self {
            transition,
            offset,
            observation,
            obs_offset,
        })
    }

    /// Tracking dynamics without drag (exactly affine) observed through `C`.
    pub fn tracking(params: &TrackingModelParams<T>, observation: Matrix<T>) -> Result<Self> {
        params.validate()?;
        if params.kx != T::zero() || params.ky != T::zero() {
            return Err(Error::InvalidConfig("affine tracking needs kx = ky = 0".into()));
        }
        let (o, i, ts) = (T::zero(), T::one(), params.ts);
        let a = Matrix::from_rows(&[[i, o, ts, o], [o, i, o, o], [o, o, i, ts], [o, o, o, i]])?;
        let m = observation.rows();
        Self::new(a, vec![o, o, o, -ts * params.g], observation, vec![o; m])
    }
}

impl<T: Scalar> StateSpaceModel<T> for AffineModel<T> {
    fn state_dim(&self) -> usize {
        self.transition.rows()
    }

    fn meas_dim(&self) -> usize {
        self.observation.rows()
    }

    fn process(&self, x: &[T], _epoch: usize) -> Vec<T> {
        vadd(&self.transition.mul_vec(x), &self.offset)
    }

    fn measure(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vadd(&self.observation.mul_vec(x), &self.obs_offset))
    }
}

type ProcessFn<T> = Box<dyn Fn(&[T], usize) -> Vec<T> + Send + Sync>;
type MeasureFn<T> = Box<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

/// Model assembled from closures.
pub struct FnModel<T> {
    state_dim: usize,
    meas_dim: usize,
    process_fn: ProcessFn<T>,
    measure_fn: MeasureFn<T>,
    angular: Vec<bool>,
}

impl<T: Scalar> FnModel<T> {
    pub fn new(
        state_dim: usize,
        meas_dim: usize,
        process_fn: impl Fn(&[T], usize) -> Vec<T> + Send + Sync + 'static,
        measure_fn: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            state_dim,
            meas_dim,
            process_fn: Box::new(process_fn),
            measure_fn: Box::new(measure_fn),
            angular: vec![false; meas_dim],
        }
    }

    pub fn with_angle_mask(mut self, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), self.meas_dim);
        self.angular = mask;
        self
    }
}

impl<T: Scalar> StateSpaceModel<T> for FnModel<T> {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn meas_dim(&self) -> usize {
        self.meas_dim
    }

    fn process(&self, x: &[T], epoch: usize) -> Vec<T> {
        (self.process_fn)(x, epoch)
    }

    fn measure(&self, x: &[T]) -> Result<Vec<T>> {
        (self.measure_fn)(x)
    }

    fn is_angular(&self, component: usize) -> bool {
        self.angular[component]
    }
}

/// Process and measurement noise covariances.
///
/// Both must be symmetric positive semidefinite; a zero matrix is a valid
/// (noiseless) choice for simulation. Filters convert them with
/// [`NoiseSpec::q_spd`] / [`NoiseSpec::r_spd`], which demand definiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<T> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(q: Matrix<T>, r: Matrix<T>) -> Result<Self> {
        for m in [&q, &r] {
            psd_sqrt(m)?;
        }
        Ok(Self {
            q: q.symmetrize(),
            r: r.symmetrize(),
        })
    }

    pub fn diagonal(q: &[T], r: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(q), Matrix::from_diagonal(r))
    }

    pub fn q_spd(&self) -> Result<SpdMatrix<T>> {
        SpdMatrix::new(self.q.clone())
    }

    pub fn r_spd(&self) -> Result<SpdMatrix<T>> {
        SpdMatrix::new(self.r.clone())
    }

    pub fn scaled_q(&self, factor: T) -> Self {
        Self {
            q: self.q.scale(factor),
            r: self.r.clone(),
        }
    }
}

/// `B` with `B B^T = A` for symmetric PSD `A` (eigen-based, tolerates rank loss).
fn psd_sqrt<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("noise covariance must be square".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = a.max_abs();
    if a.max_asymmetry() > T::lit(1e-10) * scale {
        return Err(Error::NotSymmetric(a.max_asymmetry().to_f64_lossy()));
    }
    let (values, vectors) = symmetric_eigen(a)?;
    let tol = T::lit(1e-12) * scale.max(T::one());
    if values[0] < -tol {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            dim: a.rows(),
        });
    }
    let n = a.rows();
    let mut b = Matrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let s = lambda.max(T::zero()).sqrt();
        for i in 0..n {
            b[(i, k)] = vectors[(i, k)] * s;
        }
    }
    Ok(b)
}

/// Ground truth and the measurements taken of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub truth: Vec<Vec<T>>,
    pub measurements: Vec<Vec<T>>,
}

/// Draws a trajectory of `steps` epochs.
///
/// `truth[0] = x0` and `truth[k] = f(truth[k-1]) + w_k`; every epoch is
/// measured, `z_k = h(truth[k]) + v_k`. Angular measurement components are
/// wrapped. Normal draws come from a ChaCha8 stream keyed by `seed`, so a
/// given `(seed, model, noise, x0)` always yields the same bits.
pub fn simulate_trajectory<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    model: &M,
    noise: &NoiseSpec<T>,
    x0: &[T],
    steps: usize,
    seed: u64,
) -> Result<Trajectory<T>> {
    if steps == 0 {
        return Err(Error::EmptyInput);
    }
    let n = model.state_dim();
    let m = model.meas_dim();
    if x0.len() != n || noise.q.rows() != n || noise.r.rows() != m {
        return Err(Error::DimensionMismatch("simulation inputs disagree with model".into()));
    }
    let bq = psd_sqrt(&noise.q)?;
    let br = psd_sqrt(&noise.r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Vec<T> {
        (0..count)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                T::lit(v)
            })
            .collect()
    };

    let mut truth = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    let mut x = x0.to_vec();
    for k in 0..steps {
        if k > 0 {
            let w = bq.mul_vec(&draw(n));
            x = vadd(&model.process(&x, k), &w);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEvaluation.at_epoch(k));
            }
        }
        let v = br.mul_vec(&draw(m));
        let mut z = vadd(&model.measure(&x).map_err(|e| e.at_epoch(k))?, &v);
        wrap_components(model, &mut z);
        truth.push(x.clone());
        measurements.push(z);
    }
    Ok(Trajectory { truth, measurements })
}
