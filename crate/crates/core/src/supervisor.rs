//! Supervisory saturating controller.
//!
//! For each actuator the supervisor computes a cap `u_max(w)`: the input that,
//! applied alone, drives the error `e = [w, 1] - [w_max, 1]` with dynamics
//! `e(k+1) = (1 - gamma) A e(k)`. The one-step minimum-energy input toward the
//! inflated setpoint
//!
//! ```text
//! w_set = (1/gamma) (I - (1 - gamma) A) [w_max, 1]
//! ```
//!
//! scaled by `gamma` gives exactly this law. Any inner controller's request is
//! then clipped at the cap; since the actuator map is monotone in `u`, the
//! clipped input never takes `w` above `w_max` from a state at or below it.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::actuator_model::{ActuatorParams, AugmentedState};
use crate::error::{Error, Result};

/// Singular values below this are treated as zero in pseudo-inverses.
pub const PINV_EPS: f64 = 1e-12;

/// Slack used when flagging a clipped input as active.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupervisorConfig {
    pub gamma: f64,
    pub w_max: f64,
    pub w_lb: f64,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        Self {
            gamma: 0.2,
            w_max: 65.0,
            w_lb: 25.0,
        }
    }
}

impl SupervisorConfig {
    pub fn validate(self) -> Result<Self> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::domain("gamma", format!("{} is outside (0, 1)", self.gamma)));
        }
        if !self.w_max.is_finite() {
            return Err(Error::domain("w_max", "must be finite"));
        }
        if !(self.w_lb < self.w_max) {
            return Err(Error::domain(
                "w_lb",
                format!("{} must be strictly below w_max = {}", self.w_lb, self.w_max),
            ));
        }
        Ok(self)
    }
}

/// Result of clipping a request against the per-actuator caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedInput<const N: usize> {
    pub applied: [f64; N],
    pub attempted: [f64; N],
    pub cap: [f64; N],
    pub active: [bool; N],
}

impl<const N: usize> SupervisedInput<N> {
    pub fn any_active(&self) -> bool {
        self.active.iter().any(|&a| a)
    }
}

/// `W_K = sum_{t=0}^{K-1} A^t B B^T (A^T)^t`.
pub fn grammian(a: &DMatrix<f64>, b: &DVector<f64>, horizon: usize) -> Result<DMatrix<f64>> {
    check_pair(a, b)?;
    if horizon == 0 {
        return Err(Error::domain("horizon", "must be at least 1"));
    }
    let n = a.nrows();
    let mut w = DMatrix::zeros(n, n);
    let mut atb = b.clone();
    for _ in 0..horizon {
        w += &atb * atb.transpose();
        atb = a * atb;
    }
    Ok(w)
}

fn check_pair(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Minimum-energy input sequence steering `x0` to `target` in `horizon` steps.
///
/// `u(t) = B^T (A^T)^{K-t-1} W_K^+ (target - A^K x0)`.
pub fn min_energy_sequence(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    horizon: usize,
    target: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<Vec<f64>> {
    let w = grammian(a, b, horizon)?;
    for v in [target, x0] {
        if v.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: v.len(),
            });
        }
    }
    let ak = a.pow(horizon as u32);
    let gap = target - &ak * x0;
    let w_pinv = w
        .clone()
        .pseudo_inverse(PINV_EPS)
        .map_err(|e| Error::domain("grammian", e))?;
    let eta = &w_pinv * &gap;
    let projected = &w * &eta;
    if (&projected - &gap).norm() > 1e-9 * (1.0 + gap.norm()) {
        return Err(Error::Unreachable { horizon });
    }
    // (A^T)^{K-t-1} applied right to left: start with t = K-1.
    let mut seq = vec![0.0; horizon];
    let mut v = eta;
    for t in (0..horizon).rev() {
        seq[t] = b.dot(&v);
        v = a.transpose() * v;
    }
    Ok(seq)
}

/// Inflated setpoint whose gamma-scaled one-step law has `[w_max, 1]` as its
/// closed-loop equilibrium.
pub fn w_set(config: &SupervisorConfig, params: &ActuatorParams) -> Vector2<f64> {
    let (a, _) = params.augmented_matrices();
    let g = config.gamma;
    (Matrix2::identity() - a * (1.0 - g)) * Vector2::new(config.w_max, 1.0) / g
}

/// Uncapped supervisor input at actuator state `w`.
///
/// `B^T (B B^T)^+` reduces to `[1/a2, 0]` for the augmented actuator, so this
/// is evaluated in closed form. The result may be negative (already too hot)
/// or above one; clipping to the physical range is left to [`compose`].
pub fn u_max(params: &ActuatorParams, config: &SupervisorConfig, w: f64) -> f64 {
    let g = config.gamma;
    let target = config.w_max - (1.0 - g) * (params.a1 * config.w_max + params.a3);
    (target - g * (params.a1 * w + params.a3)) / params.a2
}

/// Error dynamics matrix `(1 - gamma) A`.
pub fn error_matrix(params: &ActuatorParams, gamma: f64) -> Matrix2<f64> {
    params.augmented_matrices().0 * (1.0 - gamma)
}

/// The error matrix is upper triangular, so its eigenvalues are the diagonal.
pub fn is_stable(params: &ActuatorParams, gamma: f64) -> bool {
    let m = error_matrix(params, gamma);
    m[(0, 0)].abs().max(m[(1, 1)].abs()) < 1.0
}

/// Clips each request at its cap and at the physical input range `[0, 1]`.
///
/// Requests are expected in `[0, 1]`; a cap of `+inf` disables clipping for
/// that actuator.
pub fn compose<const N: usize>(attempted: [f64; N], caps: [f64; N]) -> SupervisedInput<N> {
    let mut applied = [0.0; N];
    let mut active = [false; N];
    for i in 0..N {
        applied[i] = attempted[i].min(caps[i]).clamp(0.0, 1.0);
        active[i] = applied[i] < attempted[i] - ACTIVE_TOL;
    }
    SupervisedInput {
        applied,
        attempted,
        cap: caps,
        active,
    }
}

/// A validated supervisor for one actuator model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supervisor {
    params: ActuatorParams,
    config: SupervisorConfig,
}

impl Supervisor {
    /// Also requires `w_max` at or above the zero-input equilibrium: below it
    /// the cap at the boundary is negative, no admissible input can hold the
    /// bound and the safety guarantee is void.
    pub fn new(params: ActuatorParams, config: SupervisorConfig) -> Result<Self> {
        let params = params.validate()?;
        let config = config.validate()?;
        let floor = params.equilibrium(0.0);
        if config.w_max < floor {
            return Err(Error::domain(
                "w_max",
                format!("{} is below the zero-input equilibrium {floor}", config.w_max),
            ));
        }
        Ok(Self { params, config })
    }

    pub fn params(&self) -> &ActuatorParams {
        &self.params
    }

    pub fn config(&self) -> &SupervisorConfig {
        &self.config
    }

    pub fn cap(&self, w: f64) -> f64 {
        u_max(&self.params, &self.config, w)
    }

    pub fn w_set(&self) -> AugmentedState {
        AugmentedState::new(w_set(&self.config, &self.params)[0])
    }

    pub fn is_stable(&self) -> bool {
        is_stable(&self.params, self.config.gamma)
    }
}
