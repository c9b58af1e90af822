//! Pose controllers for the antagonistic wire pair.
//!
//! Both controllers produce a scalar command `mu` in `[-1, 1]`; [`siso_map`]
//! routes its positive part to wire 0 and its negative part to wire 1.
//! Step functions take the state by value and return the successor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear saturation onto `[-1, 1]`. NaN maps to NaN.
pub fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisoCommand(f64);

impl SisoCommand {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.abs() <= 1.0) {
            return Err(Error::domain("mu", format!("|{mu}| exceeds 1")));
        }
        Ok(Self(mu))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Recovers the scalar command from a pair of wire inputs.
    pub fn from_inputs(inputs: [f64; 2]) -> Self {
        Self((inputs[0] - inputs[1]).clamp(-1.0, 1.0))
    }
}

/// `[mu, 0]` for `mu >= 0`, `[0, -mu]` otherwise.
pub fn siso_map(mu: SisoCommand) -> [f64; 2] {
    let m = mu.0;
    if m >= 0.0 {
        [m, 0.0]
    } else {
        [0.0, -m]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiAwGains {
    pub kp: f64,
    pub ki: f64,
    pub kaw: f64,
}

impl Default for PiAwGains {
    fn default() -> Self {
        Self {
            kp: 0.02,
            ki: 0.01,
            kaw: 1.0,
        }
    }
}

impl PiAwGains {
    pub fn validate(self) -> Result<Self> {
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kaw", self.kaw)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(self)
    }
}

/// PI controller with back-calculation anti-windup.
///
/// `last_mu` and `last_eta` start at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiAwState {
    pub gains: PiAwGains,
    pub integral: f64,
    pub last_mu: f64,
    pub last_eta: f64,
}

impl PiAwState {
    pub fn new(gains: PiAwGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            last_mu: 0.0,
            last_eta: 0.0,
        }
    }

    /// Replaces the fed-back output with what was actually applied downstream.
    pub fn with_applied(mut self, mu: f64) -> Self {
        self.last_mu = mu;
        self
    }
}

pub fn pi_aw_step(state: PiAwState, e: f64, dt: f64) -> (SisoCommand, PiAwState) {
    let g = state.gains;
    let integral = state.integral + e * dt + g.kaw * (state.last_mu - state.last_eta) * dt;
    let eta = g.kp * e + g.ki * integral;
    let mu = sat(eta);
    (
        SisoCommand(mu),
        PiAwState {
            gains: g,
            integral,
            last_mu: mu,
            last_eta: eta,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmcGains {
    pub lambda: f64,
    pub ki: f64,
    pub phi: f64,
}

impl Default for SmcGains {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            ki: 0.05,
            phi: 20.0,
        }
    }
}

impl SmcGains {
    pub fn validate(self) -> Result<Self> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::domain("lambda", format!("{} must be positive", self.lambda)));
        }
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return Err(Error::domain("phi", format!("{} must be positive", self.phi)));
        }
        if !(self.ki >= 0.0) || !self.ki.is_finite() {
            return Err(Error::domain("ki", format!("{} must be finite and >= 0", self.ki)));
        }
        Ok(self)
    }
}

/// Sliding mode controller with a boundary layer of thickness `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcState {
    pub gains: SmcGains,
    pub last_error: f64,
    pub integral: f64,
}

impl SmcState {
    pub fn new(gains: SmcGains) -> Self {
        Self {
            gains,
            last_error: 0.0,
            integral: 0.0,
        }
    }
}

/// Sliding variable `s = de/dt + 2 lambda e + ki * integral`, derivative by
/// backward difference.
pub fn smc_surface(state: &SmcState, e: f64, dt: f64) -> (f64, f64) {
    let g = state.gains;
    let e_dot = (e - state.last_error) / dt;
    let integral = state.integral + e * dt;
    (e_dot + 2.0 * g.lambda * e + g.ki * integral, integral)
}

pub fn smc_step(state: SmcState, e: f64, dt: f64) -> (SisoCommand, SmcState) {
    let (s, integral) = smc_surface(&state, e, dt);
    (
        SisoCommand(sat(s / state.gains.phi)),
        SmcState {
            gains: state.gains,
            last_error: e,
            integral,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    PiAw,
    Smc,
}

/// Either pose controller behind one stepping interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoseController {
    PiAw(PiAwState),
    Smc(SmcState),
}

impl PoseController {
    pub fn step(self, e: f64, dt: f64) -> (SisoCommand, Self) {
        match self {
            PoseController::PiAw(s) => {
                let (mu, s) = pi_aw_step(s, e, dt);
                (mu, PoseController::PiAw(s))
            }
            PoseController::Smc(s) => {
                let (mu, s) = smc_step(s, e, dt);
                (mu, PoseController::Smc(s))
            }
        }
    }

    /// Feeds the applied command back; only the PI controller uses it.
    pub fn with_applied(self, mu: f64) -> Self {
        match self {
            PoseController::PiAw(s) => PoseController::PiAw(s.with_applied(mu)),
            other => other,
        }
    }
}
