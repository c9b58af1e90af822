//! Affine single-state actuator model.
//!
//! Each actuator evolves as `w(k+1) = a1 w(k) + a2 u(k) + a3` with the input
//! `u` a duty cycle in `[0, 1]`. For an SMA wire `w` is its temperature and the
//! coefficients lump together the Joule heating and convective cooling terms.
//! The augmented form `[w, 1]` turns the affine map into a linear one:
//!
//! ```text
//! A = | a1  a3 |    B = | a2 |
//!     | 0   1  |        | 0  |
//! ```

use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ambient temperature the default coefficients are built around (°C).
pub const DEFAULT_AMBIENT: f64 = 25.0;

/// Coefficients of the affine actuator map.
///
/// `dt` is not used by [`ActuatorParams::step`]; the sample time is already
/// folded into the lumped coefficients. Controllers and the simulator read it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub dt: f64,
}

impl Default for ActuatorParams {
    /// `a3 = (1 - a1) * 25`, so the zero-input equilibrium is 25 °C.
    fn default() -> Self {
        Self {
            a1: 0.95,
            a2: 10.0,
            a3: 1.25,
            dt: 0.1,
        }
    }
}

impl ActuatorParams {
    pub fn new(a1: f64, a2: f64, a3: f64, dt: f64) -> Result<Self> {
        Self { a1, a2, a3, dt }.validate()
    }

    /// Returns `self` unchanged iff every coefficient invariant holds.
    pub fn validate(self) -> Result<Self> {
        if !(self.a1 > 0.0 && self.a1 < 1.0) {
            return Err(Error::domain("a1", format!("{} is outside (0, 1)", self.a1)));
        }
        if !(self.a2 > 0.0) || !self.a2.is_finite() {
            return Err(Error::domain("a2", format!("{} must be positive", self.a2)));
        }
        if !(self.a3 >= 0.0) || !self.a3.is_finite() {
            return Err(Error::domain("a3", format!("{} must be nonnegative", self.a3)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain("dt", format!("{} must be positive", self.dt)));
        }
        Ok(self)
    }

    /// One step of the actuator with the input checked against `[0, 1]`.
    pub fn step(&self, w: f64, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain("u", format!("{u} is outside [0, 1]")));
        }
        Ok(self.advance(w, u))
    }

    /// The affine map without any input-domain check.
    #[inline]
    pub fn advance(&self, w: f64, u: f64) -> f64 {
        self.a1 * w + self.a2 * u + self.a3
    }

    /// Fixed point of the map under a constant input.
    pub fn equilibrium(&self, u: f64) -> f64 {
        (self.a2 * u + self.a3) / (1.0 - self.a1)
    }

    pub fn augmented_matrices(&self) -> (Matrix2<f64>, Vector2<f64>) {
        (
            Matrix2::new(self.a1, self.a3, 0.0, 1.0),
            Vector2::new(self.a2, 0.0),
        )
    }

    /// Same coefficients with the input gain scaled, used to model a plant
    /// that heats faster (or slower) than the controller believes.
    pub fn with_input_gain_scaled(mut self, factor: f64) -> Self {
        self.a2 *= factor;
        self
    }
}

/// Actuator state augmented with a constant coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState {
    w: f64,
}

impl AugmentedState {
    pub fn new(w: f64) -> Self {
        Self { w }
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn one(&self) -> f64 {
        1.0
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.w, 1.0)
    }

    /// Fails unless the second coordinate is exactly one.
    pub fn from_vector(v: &Vector2<f64>) -> Result<Self> {
        if v[1] != 1.0 {
            return Err(Error::domain(
                "augmented state",
                format!("affine coordinate is {} instead of 1", v[1]),
            ));
        }
        Ok(Self { w: v[0] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub w_k: f64,
    pub u_k: f64,
    pub w_next: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub params: ActuatorParams,
    pub residual_rms: f64,
}

/// Relative singular-value floor of the column-normalised Gram matrix.
const RANK_TOL: f64 = 1e-12;

/// Ordinary least squares fit of `(a1, a2, a3)` via the normal equations.
///
/// Columns are normalised before forming the Gram matrix so the rank test and
/// the solve are insensitive to the very different scales of `w` and `u`.
pub fn calibrate(samples: &[CalibrationSample], dt: f64) -> Result<Calibration> {
    if samples.len() < 3 {
        return Err(Error::Config(format!(
            "calibration needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        if !(0.0..=1.0).contains(&s.u_k) {
            return Err(Error::Config(format!("sample {i}: u = {} is outside [0, 1]", s.u_k)));
        }
    }

    let mut norms = Vector3::zeros();
    for s in samples {
        norms += Vector3::new(s.w_k * s.w_k, s.u_k * s.u_k, 1.0);
    }
    let norms = norms.map(f64::sqrt);
    if norms.iter().any(|&n| n == 0.0) {
        return Err(Error::RankDeficient { rank: norms.iter().filter(|&&n| n > 0.0).count() });
    }

    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for s in samples {
        let x = Vector3::new(s.w_k, s.u_k, 1.0).component_div(&norms);
        gram += x * x.transpose();
        rhs += x * s.w_next;
    }

    let sv = gram.singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&v| v > RANK_TOL * smax).count();
    if rank < 3 {
        return Err(Error::RankDeficient { rank });
    }

    let beta = gram
        .cholesky()
        .ok_or(Error::RankDeficient { rank: 2 })?
        .solve(&rhs)
        .component_div(&norms);

    let sse: f64 = samples
        .iter()
        .map(|s| {
            let r = s.w_next - (beta[0] * s.w_k + beta[1] * s.u_k + beta[2]);
            r * r
        })
        .sum();
    let params = ActuatorParams {
        a1: beta[0],
        a2: beta[1],
        a3: beta[2],
        dt,
    }
    .validate()?;
    Ok(Calibration {
        params,
        residual_rms: (sse / samples.len() as f64).sqrt(),
    })
}

#[derive(Debug, Deserialize)]
struct CalibrationRow {
    #[allow(dead_code)]
    k: f64,
    w: f64,
    u: f64,
    w_next: f64,
}

/// Reads a `k,w,u,w_next` log. Row numbers in errors count the header as row 1.
pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_calibration_csv(file)
}

pub fn parse_calibration_csv<R: std::io::Read>(reader: R) -> Result<Vec<CalibrationSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Config(format!("calibration csv header: {e}")))?
        .clone();
    let expected = ["k", "w", "u", "w_next"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "calibration csv header must be `k,w,u,w_next`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<CalibrationRow>().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Config(format!("calibration csv row {row}: {e}")))?;
        if !(0.0..=1.0).contains(&rec.u) {
            return Err(Error::Config(format!(
                "calibration csv row {row}: u = {} is outside [0, 1]",
                rec.u
            )));
        }
        out.push(CalibrationSample {
            w_k: rec.w,
            u_k: rec.u,
            w_next: rec.w_next,
        });
    }
    Ok(out)
}
