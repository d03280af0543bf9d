//! Windowed and random-weighted noise-statistics estimation.
//!
//! A [`WindowBuffer`] keeps the last `N` filter records. From it,
//! [`window_estimate`] forms weighted sample estimates of the process and
//! measurement noise covariances:
//!
//! ```text
//! R̂* = Σ_j λ_j [ υ_j υ_jᵀ − H_j P̂_j H_jᵀ ]
//! Q̂* = Σ_j λ_j [ P̂_j + K_j υ_j υ_jᵀ K_jᵀ − (1/2L) Σ_i (X_ij − x̂⁻_j)(X_ij − x̂⁻_j)ᵀ ]
//! ```
//!
//! With uniform weights this is the plain moving-window estimator. The
//! random-weighting variant draws its weights from [`weight_factors`]:
//! residual magnitudes scaled down by a covariance-matching test, then
//! normalized onto the simplex.
//!
//! Weight vectors are ordered like the window, oldest record first.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::ckf::{step, FilterStepRecord, GaussState};
use crate::crts::{smooth, SmoothedTrajectory};
use crate::error::{Error, Result};
use crate::matlib::{psd_project, solve_spd, vnorm, vsub, Matrix, SpdMatrix};
use crate::scalar::Scalar;
use crate::ssmodel::{NoiseSpec, StateSpaceModel};

/// The most recent `capacity` filter records, oldest first.
#[derive(Debug, Clone)]
pub struct WindowBuffer<T> {
    capacity: usize,
    records: VecDeque<FilterStepRecord<T>>,
}

impl<T: Scalar> WindowBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("window capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.records.len() == self.capacity
    }

    /// Appends a record, evicting the oldest when full. Epochs must follow on
    /// from the newest record without gaps.
    pub fn push(&mut self, record: FilterStepRecord<T>) -> Result<()> {
        if let Some(newest) = self.records.back() {
            if record.epoch != newest.epoch + 1 {
                return Err(Error::InvalidConfig(format!(
                    "window expects epoch {}, got {}",
                    newest.epoch + 1,
                    record.epoch
                )));
            }
        }
        if self.is_full() {
            self.records.pop_front();
        }
        self.records.push_back(record);
        Ok(())
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &FilterStepRecord<T>> {
        self.records.iter()
    }

    fn require_full(&self) -> Result<()> {
        if self.is_full() {
            Ok(())
        } else {
            Err(Error::WindowNotFull {
                have: self.len(),
                need: self.capacity,
            })
        }
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    lambdas: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::from_count(n);
        Self { lambdas: vec![w; n] }
    }

    /// Checks simplex membership (`λ ≥ 0`, `|Σλ − 1| ≤ 1e-12`).
    pub fn new(lambdas: Vec<T>) -> Result<Self> {
        let sum: T = lambdas.iter().copied().sum();
        if lambdas.is_empty()
            || lambdas.iter().any(|&l| l < T::zero() || !l.is_finite())
            || (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::from_count(lambdas.len()))
        {
            return Err(Error::InvalidConfig("weights must lie on the simplex".into()));
        }
        Ok(Self { lambdas })
    }

    /// Normalizes nonnegative raw weights. A vanishing total falls back to
    /// uniform weights.
    pub fn normalized(raw: &[T], epsilon: T) -> Self {
        let total: T = raw.iter().copied().sum();
        if !(total >= epsilon) || !total.is_finite() {
            return Self::uniform(raw.len());
        }
        Self {
            lambdas: raw.iter().map(|&w| w / total).collect(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Noise covariance estimate from one window.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate<T> {
    pub q_hat: SpdMatrix<T>,
    pub r_hat: SpdMatrix<T>,
    /// Weighted sample form before projection; may be indefinite.
    pub raw_q: Matrix<T>,
    pub raw_r: Matrix<T>,
    /// Epoch of the newest record in the window.
    pub epoch: usize,
}

/// Which weights feed the window estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdaptiveMode {
    /// Uniform weights (moving-window estimator).
    Windowed,
    /// Residual-driven random weights from [`weight_factors`].
    Wrw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig<T> {
    pub window_width: usize,
    /// Covariance-matching factor, `S ≥ 1`.
    pub s_factor: T,
    pub adapt_q: bool,
    pub adapt_r: bool,
    pub epsilon_div: T,
}

impl<T: Scalar> Default for AdaptiveConfig<T> {
    fn default() -> Self {
        Self {
            window_width: 15,
            s_factor: T::one(),
            adapt_q: true,
            adapt_r: true,
            epsilon_div: T::lit(1e-12),
        }
    }
}

impl<T: Scalar> AdaptiveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.window_width < 2 {
            return Err(Error::InvalidConfig("window_width must be at least 2".into()));
        }
        if !(self.s_factor >= T::one()) {
            return Err(Error::InvalidConfig("s_factor must be at least 1".into()));
        }
        if !(self.epsilon_div > T::zero()) {
            return Err(Error::InvalidConfig("epsilon_div must be positive".into()));
        }
        Ok(())
    }

    /// Same configuration with both adaptation flags cleared.
    pub fn disabled(mut self) -> Self {
        self.adapt_q = false;
        self.adapt_r = false;
        self
    }
}

/// Statistical linearization `H = P_xzᵀ (P̂⁻)⁻¹` of the measurement model.
pub fn pseudo_measurement_matrix<T: Scalar>(record: &FilterStepRecord<T>) -> Result<Matrix<T>> {
    Ok(solve_spd(&record.predicted.cov, &record.cross_cov)?.transpose())
}

/// Weighted window estimate of `Q` and `R`.
pub fn window_estimate<T: Scalar>(buffer: &WindowBuffer<T>, weights: &WeightVector<T>) -> Result<NoiseEstimate<T>> {
    buffer.require_full()?;
    if weights.len() != buffer.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a window of {}",
            weights.len(),
            buffer.len()
        )));
    }
    let first = buffer.iter().next().expect("full window is non-empty");
    let n = first.updated.mean.len();
    let m = first.innovation.len();
    let mut raw_q = Matrix::zeros(n, n);
    let mut raw_r = Matrix::zeros(m, m);

    for (rec, &lambda) in buffer.iter().zip(weights.as_slice()) {
        let h = pseudo_measurement_matrix(rec)?;
        let mapped = &(&h * rec.updated.cov.as_matrix()) * &h.transpose();
        let r_term = &Matrix::outer(&rec.innovation, &rec.innovation) - &mapped;

        let correction = rec.gain.mul_vec(&rec.innovation);
        let pts = &rec.process_points;
        let w = pts.weight();
        let mut spread = Matrix::zeros(n, n);
        for x in &pts.propagated_points {
            let d = vsub(x, &rec.predicted.mean);
            spread = &spread + &Matrix::outer(&d, &d);
        }
        let spread = spread.scale(w);
        let q_term = &(rec.updated.cov.as_matrix() + &Matrix::outer(&correction, &correction)) - &spread;

        raw_r = &raw_r + &r_term.scale(lambda);
        raw_q = &raw_q + &q_term.scale(lambda);
    }

    Ok(NoiseEstimate {
        q_hat: psd_project(&raw_q)?,
        r_hat: psd_project(&raw_r)?,
        raw_q,
        raw_r,
        epoch: buffer.iter().last().map_or(0, |r| r.epoch),
    })
}

/// Moving-window estimate with uniform weights.
pub fn windowed_estimate<T: Scalar>(buffer: &WindowBuffer<T>) -> Result<NoiseEstimate<T>> {
    window_estimate(buffer, &WeightVector::uniform(buffer.capacity()))
}

/// Covariance-matching factor `ΔS(j)` of one record, clamped to at most 1.
///
/// The threshold is `S · tr(P_zz)` with `P_zz` rebuilt from the record's
/// measurement points and `r_prev`.
pub fn matching_factor<T: Scalar>(
    record: &FilterStepRecord<T>,
    r_prev: &SpdMatrix<T>,
    config: &AdaptiveConfig<T>,
) -> T {
    let threshold = config.s_factor * (record.meas_points.cov_out.trace() + r_prev.trace());
    let energy: T = record.innovation.iter().map(|&v| v * v).sum();
    (threshold / (energy + config.epsilon_div)).min(T::one())
}

/// Residual-driven weights: `ω_j = ‖Δx_j‖ ‖Δz_j‖ ΔS(j)`, `λ_j = ω_j / Σω`.
///
/// `Δx_j = x̂_j − x̂⁻_j`, `Δz_j = υ_j`.
pub fn weight_factors<T: Scalar>(
    buffer: &WindowBuffer<T>,
    r_prev: &SpdMatrix<T>,
    config: &AdaptiveConfig<T>,
) -> Result<WeightVector<T>> {
    buffer.require_full()?;
    let omegas: Vec<T> = buffer
        .iter()
        .map(|rec| {
            let dx = vnorm(&vsub(&rec.updated.mean, &rec.predicted.mean));
            let dz = vnorm(&rec.innovation);
            dx * dz * matching_factor(rec, r_prev, config)
        })
        .collect();
    Ok(WeightVector::normalized(&omegas, config.epsilon_div))
}

/// Empirical distribution function `F_n(x) = (1/n) #{X_i < x}`.
pub fn empirical_distribution<T: Scalar>(samples: &[T], x: T) -> T {
    weighted_distribution(samples, &WeightVector::uniform(samples.len()), x)
}

/// `H_n(x) = Σ λ_i 1(X_i < x)`.
pub fn weighted_distribution<T: Scalar>(samples: &[T], weights: &WeightVector<T>, x: T) -> T {
    samples
        .iter()
        .zip(weights.as_slice())
        .filter(|(&s, _)| s < x)
        .map(|(_, &w)| w)
        .sum()
}

/// Draws `Dirichlet(1, …, 1)` weights as normalized unit exponentials.
pub fn dirichlet_weights<T: Scalar, R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> WeightVector<T> {
    let raw: Vec<T> = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            T::lit(e)
        })
        .collect();
    WeightVector::normalized(&raw, T::min_positive_value())
}

/// Random-weighting estimate of the distribution function at `x`, with
/// `Dirichlet(1, …, 1)` weights drawn from a stream keyed by `seed`.
pub fn rwe_edf<T: Scalar>(samples: &[T], x: T, seed: u64) -> T {
    if samples.is_empty() {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = dirichlet_weights(samples.len(), &mut rng);
    weighted_distribution(samples, &weights, x)
}

/// Adaptive forward pass.
///
/// Epochs before the window first fills use `noise0`. Afterwards each
/// prediction uses the window's `Q̂*` (when `adapt_q`) and each update its
/// `R̂*` (when `adapt_r`); the records keep what was actually applied.
pub fn run_adaptive_filter<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    model: &M,
    noise0: &NoiseSpec<T>,
    init: &GaussState<T>,
    measurements: &[Vec<T>],
    config: &AdaptiveConfig<T>,
    mode: AdaptiveMode,
) -> Result<Vec<FilterStepRecord<T>>> {
    config.validate()?;
    if measurements.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut q = noise0.q_spd()?;
    let mut r = noise0.r_spd()?;
    let adapting = config.adapt_q || config.adapt_r;
    let mut window = WindowBuffer::new(config.window_width)?;
    let mut records: Vec<FilterStepRecord<T>> = Vec::with_capacity(measurements.len());

    for (k, z) in measurements.iter().enumerate() {
        if adapting && window.is_full() {
            let estimate = (|| {
                let weights = match mode {
                    AdaptiveMode::Windowed => WeightVector::uniform(window.len()),
                    AdaptiveMode::Wrw => weight_factors(&window, &r, config)?,
                };
                window_estimate(&window, &weights)
            })()
            .map_err(|e| e.at_epoch(k))?;
            if config.adapt_q {
                q = estimate.q_hat;
            }
            if config.adapt_r {
                r = estimate.r_hat;
            }
        }
        let prior = records.last().map_or(init, |rec| &rec.updated);
        let rec = step(prior, z, model, &q, &r, k).map_err(|e| e.at_epoch(k))?;
        if adapting {
            window.push(rec.clone())?;
        }
        records.push(rec);
    }
    Ok(records)
}

/// Random-weighted adaptive forward pass followed by the cubature RTS pass.
pub fn run_wrwacrts<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    model: &M,
    noise0: &NoiseSpec<T>,
    init: &GaussState<T>,
    measurements: &[Vec<T>],
    config: &AdaptiveConfig<T>,
) -> Result<(Vec<FilterStepRecord<T>>, SmoothedTrajectory<T>)> {
    let records = run_adaptive_filter(model, noise0, init, measurements, config, AdaptiveMode::Wrw)?;
    let smoothed = smooth(&records)?;
    Ok((records, smoothed))
}
