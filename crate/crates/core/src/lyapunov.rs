//! Lyapunov-based convergence monitor.
//!
//! For each epoch the monitor evaluates the two sufficient conditions for
//! `V_k = x̃_kᵀ P̂_k⁻¹ x̃_k` to decrease along the filter trajectory:
//!
//! ```text
//! M1 = (1 − 2/α) R̂⁻¹ + (1/α²) R̂⁻¹ H P̂ Hᵀ R̂⁻¹              ⪯ 0
//! M2 = α Fᵀ ζ (P̂⁻)⁻¹ ζ F − P̂_{k−1}⁻¹                        ⪯ 0
//! ```
//!
//! `F` and `H` are central-difference Jacobians at the filter estimates.
//! The monitor only observes; it never feeds back into the filter.

use crate::ckf::FilterStepRecord;
use crate::error::{Error, Result};
use crate::matlib::{max_eigenvalue, vsub, Matrix, SpdMatrix};
use crate::scalar::Scalar;
use crate::ssmodel::{wrap_angle, StateSpaceModel};

/// Clamp applied to the diagnostic `ζ` estimates.
pub const ZETA_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovParams<T> {
    /// `α > 0`.
    pub alpha: T,
    /// Diagonal of `ζ`; `None` means identity.
    pub zeta: Option<Vec<T>>,
    /// Relative finite-difference step.
    pub fd_step: T,
}

impl<T: Scalar> Default for LyapunovParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            zeta: None,
            fd_step: T::lit(1e-6),
        }
    }
}

impl<T: Scalar> LyapunovParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !(self.fd_step > T::zero()) {
            return Err(Error::InvalidConfig("alpha and fd_step must be positive".into()));
        }
        Ok(())
    }
}

/// Condition values at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochCondition<T> {
    pub epoch: usize,
    pub cond1_max_eig: T,
    pub cond2_max_eig: T,
    pub satisfied: bool,
    /// Per-coordinate `(x̃⁻_k)_i / (F x̃⁻_{k−1})_i`, only with truth.
    pub zeta_estimate: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub per_epoch: Vec<EpochCondition<T>>,
    /// Fraction of epochs violating either condition.
    pub violation_rate: T,
    /// `V_k`, only with truth.
    pub lyapunov_values: Option<Vec<T>>,
    /// Fraction of steps with `V_k ≤ V_{k−1}`, only with truth.
    pub v_decrease_fraction: Option<T>,
}

/// Central-difference Jacobians of the process and measurement maps at `x`.
///
/// Coordinate `i` is perturbed by `fd_step · max(1, |x_i|)`; angular
/// measurement rows are differenced with wrapping.
pub fn numeric_jacobians<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    model: &M,
    x: &[T],
    fd_step: T,
    epoch: usize,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let n = model.state_dim();
    let m = model.meas_dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch("jacobian point has wrong dimension".into()));
    }
    let mut f_jac = Matrix::zeros(n, n);
    let mut h_jac = Matrix::zeros(m, n);
    for j in 0..n {
        let h = fd_step * T::one().max(x[j].abs());
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let width = plus[j] - minus[j];

        let fp = model.process(&plus, epoch);
        let fm = model.process(&minus, epoch);
        let zp = model.measure(&plus)?;
        let zm = model.measure(&minus)?;
        for i in 0..n {
            f_jac[(i, j)] = (fp[i] - fm[i]) / width;
        }
        for i in 0..m {
            let mut d = zp[i] - zm[i];
            if model.is_angular(i) {
                d = wrap_angle(d);
            }
            h_jac[(i, j)] = d / width;
        }
    }
    if !f_jac.is_finite() || !h_jac.is_finite() {
        return Err(Error::NonFiniteEvaluation);
    }
    Ok((f_jac, h_jac))
}

/// `M1` for one epoch.
pub fn condition_one<T: Scalar>(alpha: T, r_hat: &SpdMatrix<T>, h: &Matrix<T>, p_hat: &Matrix<T>) -> Result<Matrix<T>> {
    let r_inv = r_hat.inverse()?;
    let coeff = T::one() - T::lit(2.0) / alpha;
    Ok(&r_inv.scale(coeff) + &congruence(&(&r_inv * h), p_hat).scale(T::one() / (alpha * alpha)))
}

/// `M2` for one epoch.
pub fn condition_two<T: Scalar>(
    alpha: T,
    f: &Matrix<T>,
    zeta: &Matrix<T>,
    p_pred: &SpdMatrix<T>,
    p_prev: &SpdMatrix<T>,
) -> Result<Matrix<T>> {
    let zf = zeta * f;
    let inner = congruence(&zf.transpose(), &p_pred.inverse()?);
    Ok(&inner.scale(alpha) - &p_prev.inverse()?)
}

/// `B S Bᵀ` with exact symmetry. With a near-singular `R̂` the two triangles
/// of the plain product can drift apart by far more than rounding of the
/// result suggests.
fn congruence<T: Scalar>(b: &Matrix<T>, s: &Matrix<T>) -> Matrix<T> {
    (&(b * s) * &b.transpose()).symmetrize()
}

fn checked_max_eig<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    debug_assert!(
        m.max_asymmetry() <= T::lit(1e-10) * T::one().max(m.max_abs()),
        "condition matrix lost symmetry"
    );
    max_eigenvalue(&m.symmetrize())
}

/// Evaluates both conditions at every epoch of a forward pass.
pub fn convergence_check<T: Scalar, M: StateSpaceModel<T> + ?Sized>(
    records: &[FilterStepRecord<T>],
    model: &M,
    params: &LyapunovParams<T>,
    truth: Option<&[Vec<T>]>,
) -> Result<ConvergenceReport<T>> {
    params.validate()?;
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(t) = truth {
        if t.len() != records.len() {
            return Err(Error::DimensionMismatch("truth and records differ in length".into()));
        }
    }
    let n = model.state_dim();
    let zeta = match &params.zeta {
        Some(d) if d.len() == n => Matrix::from_diagonal(d),
        Some(_) => return Err(Error::DimensionMismatch("zeta diagonal length".into())),
        None => Matrix::identity(n),
    };

    let mut per_epoch = Vec::with_capacity(records.len());
    let mut values = truth.map(|_| Vec::with_capacity(records.len()));
    let mut violations = 0usize;

    for (idx, rec) in records.iter().enumerate() {
        let eval = || -> Result<EpochCondition<T>> {
            let (_, h) = numeric_jacobians(model, &rec.updated.mean, params.fd_step, rec.epoch)?;
            let (f, _) = numeric_jacobians(model, &rec.process_points.input_mean, params.fd_step, rec.epoch)?;
            let m1 = condition_one(params.alpha, &rec.r_used, &h, rec.updated.cov.as_matrix())?;
            let m2 = condition_two(
                params.alpha,
                &f,
                &zeta,
                &rec.predicted.cov,
                &rec.process_points.input_cov,
            )?;
            let e1 = checked_max_eig(&m1)?;
            let e2 = checked_max_eig(&m2)?;
            let tol1 = T::lit(1e-8) * (T::one() + m1.trace().abs());
            let tol2 = T::lit(1e-8) * (T::one() + m2.trace().abs());

            let zeta_estimate = match truth {
                Some(t) if idx > 0 => {
                    let now = vsub(&t[idx], &rec.predicted.mean);
                    let before = f.mul_vec(&vsub(&t[idx - 1], &records[idx - 1].predicted.mean));
                    let lim = T::lit(ZETA_CLAMP);
                    Some(
                        now.iter()
                            .zip(&before)
                            .map(|(&a, &b)| {
                                let ratio = a / b;
                                if ratio.is_nan() {
                                    T::one()
                                } else {
                                    ratio.max(-lim).min(lim)
                                }
                            })
                            .collect(),
                    )
                }
                _ => None,
            };
            Ok(EpochCondition {
                epoch: rec.epoch,
                cond1_max_eig: e1,
                cond2_max_eig: e2,
                satisfied: e1 <= tol1 && e2 <= tol2,
                zeta_estimate,
            })
        };
        let cond = eval().map_err(|e| e.at_epoch(rec.epoch))?;
        if !cond.satisfied {
            violations += 1;
        }
        per_epoch.push(cond);

        if let (Some(t), Some(vals)) = (truth, values.as_mut()) {
            let err = vsub(&t[idx], &rec.updated.mean);
            let p_inv = rec.updated.cov.inverse().map_err(|e| e.at_epoch(rec.epoch))?;
            let pe = p_inv.mul_vec(&err);
            vals.push(err.iter().zip(&pe).map(|(&a, &b)| a * b).sum());
        }
    }

    let v_decrease_fraction = values.as_ref().map(|v: &Vec<T>| {
        if v.len() < 2 {
            T::one()
        } else {
            let dec = v.windows(2).filter(|w| w[1] <= w[0]).count();
            T::from_count(dec) / T::from_count(v.len() - 1)
        }
    });

    Ok(ConvergenceReport {
        violation_rate: T::from_count(violations) / T::from_count(records.len()),
        per_epoch,
        lyapunov_values: values,
        v_decrease_fraction,
    })
}
