//! Closed-loop simulation of a planar limb bent by two antagonistic wires.
//!
//! The body is a damped rotational spring driven by the thresholded
//! temperature difference of the wires. It only exists to close the loop
//! around the pose controllers; the supervisor never looks at it.
//!
//! Sign convention: the pose error is `e = theta - theta_ref` and the pose
//! controllers see `e` directly. Their command is negated before routing, so a
//! positive error heats the wire that bends the limb back towards negative
//! angles. Wire 0 bends towards positive `theta` unless `flip_orientation` is set.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::actuator_model::{ActuatorParams, DEFAULT_AMBIENT};
use crate::error::{Error, Result};
use crate::pose_control::{
    siso_map, PiAwGains, PiAwState, PoseController, SisoCommand, SmcGains, SmcState,
};
use crate::supervisor::{compose, Supervisor, SupervisorConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbState {
    pub theta: f64,
    pub theta_dot: f64,
    pub t0: f64,
    pub t1: f64,
}

impl LimbState {
    pub fn at_rest(temperature: f64) -> Self {
        Self {
            theta: 0.0,
            theta_dot: 0.0,
            t0: temperature,
            t1: temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    /// deg/s² per °C of net activation
    pub gain: f64,
    /// 1/s²
    pub stiffness: f64,
    /// 1/s
    pub damping: f64,
    /// wire temperature below which it produces no bending (°C)
    pub t_act: f64,
    pub theta_wall: Option<f64>,
    /// When set, wire 1 bends towards positive angles instead of wire 0.
    pub flip_orientation: bool,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            gain: 1.0,
            stiffness: 3.0,
            damping: 2.0,
            t_act: 35.0,
            theta_wall: None,
            flip_orientation: false,
        }
    }
}

impl BodyParams {
    pub fn validate(self, ambient: f64) -> Result<Self> {
        if !(self.stiffness > 0.0) || !self.stiffness.is_finite() {
            return Err(Error::domain("stiffness", format!("{} must be positive", self.stiffness)));
        }
        if !(self.damping > 0.0) || !self.damping.is_finite() {
            return Err(Error::domain("damping", format!("{} must be positive", self.damping)));
        }
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::domain("gain", format!("{} must be >= 0", self.gain)));
        }
        if !(self.t_act >= ambient) {
            return Err(Error::domain(
                "t_act",
                format!("{} is below ambient {ambient}", self.t_act),
            ));
        }
        if let Some(w) = self.theta_wall {
            if !w.is_finite() {
                return Err(Error::domain("theta_wall", "must be finite"));
            }
        }
        Ok(self)
    }

    fn activation(&self, t: f64) -> f64 {
        (t - self.t_act).max(0.0)
    }
}

/// Semi-implicit Euler step of the body; returns `(theta, theta_dot)`.
pub fn body_step(state: &LimbState, params: &BodyParams, disturbance: f64, dt: f64) -> (f64, f64) {
    let mut drive = params.activation(state.t0) - params.activation(state.t1);
    if params.flip_orientation {
        drive = -drive;
    }
    let accel = params.gain * drive - params.stiffness * state.theta
        - params.damping * state.theta_dot
        + disturbance;
    let mut theta_dot = state.theta_dot + accel * dt;
    let mut theta = state.theta + theta_dot * dt;
    if let Some(wall) = params.theta_wall {
        if theta >= wall {
            theta = wall;
            theta_dot = 0.0;
        }
    }
    (theta, theta_dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    FreeStep,
    Wall,
    HumanDisturbance,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Constant(f64),
    /// One sample per control step.
    Samples(Vec<f64>),
}

/// Additive angular acceleration over `[start, end)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Disturbance {
    pub start: f64,
    pub end: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub reference: Reference,
    pub duration: f64,
    pub wall_angle: Option<f64>,
    pub disturbance: Option<Disturbance>,
}

impl Scenario {
    pub fn step(theta_ref: f64, duration: f64) -> Self {
        Self {
            kind: ScenarioKind::FreeStep,
            reference: Reference::Constant(theta_ref),
            duration,
            wall_angle: None,
            disturbance: None,
        }
    }

    pub fn reference_at(&self, k: usize) -> f64 {
        match &self.reference {
            Reference::Constant(v) => *v,
            Reference::Samples(s) => s[k],
        }
    }

    pub fn disturbance_at(&self, t: f64) -> f64 {
        match self.disturbance {
            Some(d) if t >= d.start && t < d.end => d.magnitude,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerChoice {
    PiAw(PiAwGains),
    Smc(SmcGains),
}

impl ControllerChoice {
    fn build(self) -> Result<PoseController> {
        Ok(match self {
            ControllerChoice::PiAw(g) => PoseController::PiAw(PiAwState::new(g.validate()?)),
            ControllerChoice::Smc(g) => PoseController::Smc(SmcState::new(g.validate()?)),
        })
    }
}

/// Everything one closed-loop run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// The actuator models the supervisor believes.
    pub actuators: [ActuatorParams; 2],
    pub body: BodyParams,
    pub controller: ControllerChoice,
    pub supervisor: Option<SupervisorConfig>,
    pub scenario: Scenario,
    pub dt: f64,
    pub ambient: f64,
    /// Initial wire temperatures.
    pub initial_temperature: f64,
    /// Plant input gain relative to the model (`a2_plant = mismatch * a2`).
    pub mismatch: f64,
    /// Standard deviation of additive angle measurement noise (deg).
    pub sensor_noise: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            actuators: [ActuatorParams::default(); 2],
            body: BodyParams::default(),
            controller: ControllerChoice::PiAw(PiAwGains::default()),
            supervisor: Some(SupervisorConfig::default()),
            scenario: Scenario::step(40.0, 60.0),
            dt: 0.1,
            ambient: DEFAULT_AMBIENT,
            initial_temperature: DEFAULT_AMBIENT,
            mismatch: 1.0,
            sensor_noise: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn num_steps(&self) -> usize {
        (self.scenario.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub k: usize,
    pub t: f64,
    pub theta: f64,
    pub theta_ref: f64,
    pub temps: [f64; 2],
    pub attempted: [f64; 2],
    pub caps: [f64; 2],
    pub applied: [f64; 2],
    pub active: [bool; 2],
    pub supervisor_enabled: bool,
}

fn check_dt(dt: f64, other: f64, what: &str) -> Result<()> {
    if (dt - other).abs() > 1e-12 * dt.abs().max(1.0) {
        return Err(Error::Config(format!("{what} dt {other} differs from simulation dt {dt}")));
    }
    Ok(())
}

/// Runs the composed controller for `scenario.duration` seconds.
///
/// Record `k` holds the state at `t = k dt` and the inputs chosen there.
pub fn run_closed_loop(cfg: &SimConfig) -> Result<Vec<TelemetryRecord>> {
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(Error::Config(format!("dt {} must be positive", cfg.dt)));
    }
    if !(cfg.scenario.duration > 0.0) || !cfg.scenario.duration.is_finite() {
        return Err(Error::Config(format!(
            "duration {} must be positive",
            cfg.scenario.duration
        )));
    }
    if !(cfg.mismatch > 0.0) || !cfg.mismatch.is_finite() {
        return Err(Error::Config(format!("mismatch {} must be positive", cfg.mismatch)));
    }
    if !(cfg.sensor_noise >= 0.0) || !cfg.sensor_noise.is_finite() {
        return Err(Error::Config(format!(
            "sensor_noise {} must be >= 0",
            cfg.sensor_noise
        )));
    }
    for (i, p) in cfg.actuators.iter().enumerate() {
        p.validate()?;
        check_dt(cfg.dt, p.dt, &format!("actuator {i}"))?;
    }
    let steps = cfg.num_steps();
    if let Reference::Samples(s) = &cfg.scenario.reference {
        if s.len() != steps {
            return Err(Error::Config(format!(
                "trajectory has {} samples but the run needs {steps}",
                s.len()
            )));
        }
    }
    let mut body = cfg.body;
    if cfg.scenario.kind == ScenarioKind::Wall {
        body.theta_wall = cfg.scenario.wall_angle.or(body.theta_wall);
        if body.theta_wall.is_none() {
            return Err(Error::Config("wall scenario needs a wall angle".into()));
        }
    }
    let body = body.validate(cfg.ambient)?;
    let supervisors = match cfg.supervisor {
        Some(sc) => Some([
            Supervisor::new(cfg.actuators[0], sc)?,
            Supervisor::new(cfg.actuators[1], sc)?,
        ]),
        None => None,
    };
    let plant = cfg.actuators.map(|p| p.with_input_gain_scaled(cfg.mismatch));

    let noise = if cfg.sensor_noise > 0.0 {
        Some(Normal::new(0.0, cfg.sensor_noise).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut controller = cfg.controller.build()?;
    let mut state = LimbState::at_rest(cfg.initial_temperature);
    let mut records = Vec::with_capacity(steps);
    let route = |cmd: f64| -> [f64; 2] {
        let v = siso_map(SisoCommand::new(cmd).expect("controller output is saturated"));
        if body.flip_orientation {
            [v[1], v[0]]
        } else {
            v
        }
    };

    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let theta_ref = cfg.scenario.reference_at(k);
        let measured = state.theta + noise.map_or(0.0, |n| n.sample(&mut rng));
        let e = measured - theta_ref;

        let (mu, next_ctrl) = controller.step(e, cfg.dt);
        let attempted = route(-mu.value());
        let temps = [state.t0, state.t1];
        let caps = match &supervisors {
            Some(s) => [s[0].cap(temps[0]), s[1].cap(temps[1])],
            None => [f64::INFINITY; 2],
        };
        let sup = compose(attempted, caps);

        let mut applied_cmd = SisoCommand::from_inputs(sup.applied).value();
        if body.flip_orientation {
            applied_cmd = -applied_cmd;
        }
        controller = next_ctrl.with_applied(-applied_cmd);

        records.push(TelemetryRecord {
            k,
            t,
            theta: state.theta,
            theta_ref,
            temps,
            attempted,
            caps,
            applied: sup.applied,
            active: sup.active,
            supervisor_enabled: supervisors.is_some(),
        });

        let (theta, theta_dot) = body_step(&state, &body, cfg.scenario.disturbance_at(t), cfg.dt);
        state = LimbState {
            theta,
            theta_dot,
            t0: plant[0].step(state.t0, sup.applied[0])?,
            t1: plant[1].step(state.t1, sup.applied[1])?,
        };
    }
    Ok(records)
}

/// Time of the first record where the supervisor clipped any input.
pub fn activation_time(records: &[TelemetryRecord]) -> Option<f64> {
    records.iter().find(|r| r.active.iter().any(|&a| a)).map(|r| r.t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub max_temps: [f64; 2],
    pub final_error: f64,
    pub activation_time: Option<f64>,
}

impl RunSummary {
    pub fn of(records: &[TelemetryRecord]) -> Self {
        let mut max_temps = [f64::NEG_INFINITY; 2];
        for r in records {
            for (m, t) in max_temps.iter_mut().zip(r.temps) {
                *m = m.max(t);
            }
        }
        Self {
            max_temps,
            final_error: records.last().map_or(0.0, |r| r.theta - r.theta_ref),
            activation_time: activation_time(records),
        }
    }

    pub fn max_temp(&self) -> f64 {
        self.max_temps[0].max(self.max_temps[1])
    }

    /// How far the hotter wire went above `w_max` (zero if it never did).
    pub fn overshoot(&self, w_max: f64) -> f64 {
        (self.max_temp() - w_max).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub summary: RunSummary,
    pub overshoot: f64,
}

/// Re-runs `base` once per gamma, everything else held fixed. Runs execute
/// in parallel; rows come back in the order of `gammas`.
pub fn gamma_sweep(base: &SimConfig, gammas: &[f64]) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(Error::Config("gamma list is empty".into()));
    }
    let sup = base.supervisor.unwrap_or_default();
    for &g in gammas {
        SupervisorConfig { gamma: g, ..sup }.validate()?;
    }
    gammas
        .par_iter()
        .map(|&gamma| {
            let cfg = SimConfig {
                supervisor: Some(SupervisorConfig { gamma, ..sup }),
                ..base.clone()
            };
            let summary = RunSummary::of(&run_closed_loop(&cfg)?);
            Ok(SweepRow {
                gamma,
                summary,
                overshoot: summary.overshoot(sup.w_max),
            })
        })
        .collect()
}

pub const TELEMETRY_HEADER: &str = "k,t,theta,theta_ref,T0,T1,v0,v1,cap0,cap1,u0,u1,active0,active1";

pub fn write_telemetry_csv<W: Write>(records: &[TelemetryRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TELEMETRY_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.t,
            r.theta,
            r.theta_ref,
            r.temps[0],
            r.temps[1],
            r.attempted[0],
            r.attempted[1],
            r.caps[0],
            r.caps[1],
            r.applied[0],
            r.applied[1],
            u8::from(r.active[0]),
            u8::from(r.active[1]),
        )?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    #[allow(dead_code)]
    t: f64,
    theta_ref: f64,
}

/// Reads a `t,theta_ref` reference trajectory.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TrajectoryRow>().enumerate() {
        let row = row.map_err(|e| {
            Error::Config(format!("{}: row {}: {e}", path.display(), i + 2))
        })?;
        out.push(row.theta_ref);
    }
    Ok(out)
}
