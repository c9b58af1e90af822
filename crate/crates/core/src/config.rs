//! Run configuration file.
//!
//! TOML with one table per module. Every table and field has a default, so an
//! empty file is a valid config (the 40° supervised PI-AW step). Unknown keys
//! are rejected.
//!
//! ```toml
//! [sim]
//! dt = 0.1
//! mismatch = 1.0
//!
//! [actuator]          # both wires
//! a1 = 0.95
//! a2 = 10.0
//! a3 = 1.25
//!
//! [controller]
//! kind = "pi_aw"      # or "smc"
//!
//! [supervisor]
//! enabled = true
//! gamma = 0.2
//! w_max = 65.0
//! w_lb = 25.0
//!
//! [scenario]
//! kind = "free_step"  # wall | human_disturbance | trajectory
//! theta_ref = 40.0
//! duration = 60.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::actuator_model::{ActuatorParams, DEFAULT_AMBIENT};
use crate::error::{Error, Result};
use crate::limb_sim::{
    read_trajectory_csv, BodyParams, ControllerChoice, Disturbance, Reference, Scenario,
    ScenarioKind, SimConfig,
};
use crate::polytope::DEFAULT_TOL;
use crate::pose_control::{ControllerKind, PiAwGains, SmcGains};
use crate::supervisor::SupervisorConfig;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub ambient: f64,
    pub initial_temperature: Option<f64>,
    pub mismatch: f64,
    pub sensor_noise: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 0.1,
            ambient: DEFAULT_AMBIENT,
            initial_temperature: None,
            mismatch: 1.0,
            sensor_noise: 0.0,
            seed: 0,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Must equal `sim.dt` when given.
    pub dt: Option<f64>,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        let d = ActuatorParams::default();
        Self {
            a1: d.a1,
            a2: d.a2,
            a3: d.a3,
            dt: None,
        }
    }
}

impl ActuatorSection {
    fn params(&self, sim_dt: f64) -> ActuatorParams {
        ActuatorParams {
            a1: self.a1,
            a2: self.a2,
            a3: self.a3,
            dt: self.dt.unwrap_or(sim_dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodySection {
    pub gain: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub t_act: f64,
    pub flip_orientation: bool,
}

impl Default for BodySection {
    fn default() -> Self {
        let d = BodyParams::default();
        Self {
            gain: d.gain,
            stiffness: d.stiffness,
            damping: d.damping,
            t_act: d.t_act,
            flip_orientation: d.flip_orientation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    pub pi_aw: PiAwGains,
    pub smc: SmcGains,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            kind: ControllerKind::PiAw,
            pi_aw: PiAwGains::default(),
            smc: SmcGains::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorSection {
    pub enabled: bool,
    pub gamma: f64,
    pub w_max: f64,
    pub w_lb: f64,
}

impl Default for SupervisorSection {
    fn default() -> Self {
        let d = SupervisorConfig::default();
        Self {
            enabled: true,
            gamma: d.gamma,
            w_max: d.w_max,
            w_lb: d.w_lb,
        }
    }
}

impl SupervisorSection {
    pub fn config(&self) -> SupervisorConfig {
        SupervisorConfig {
            gamma: self.gamma,
            w_max: self.w_max,
            w_lb: self.w_lb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub theta_ref: f64,
    pub duration: f64,
    pub wall_angle: Option<f64>,
    /// `t,theta_ref` csv, relative to the config file's directory.
    pub trajectory: Option<PathBuf>,
    pub disturbance: Option<Disturbance>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::FreeStep,
            theta_ref: 40.0,
            duration: 60.0,
            wall_angle: None,
            trajectory: None,
            disturbance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimSection,
    pub actuator: ActuatorSection,
    /// Overrides `actuator` for wire 1.
    pub actuator1: Option<ActuatorSection>,
    pub body: BodySection,
    pub controller: ControllerSection,
    pub supervisor: SupervisorSection,
    pub scenario: ScenarioSection,
    pub verify: VerifySection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Controller-side actuator models for both wires.
    pub fn actuators(&self) -> [ActuatorParams; 2] {
        let a0 = self.actuator.params(self.sim.dt);
        let a1 = self.actuator1.unwrap_or(self.actuator).params(self.sim.dt);
        [a0, a1]
    }

    /// Overrides the shared step size everywhere it appears.
    pub fn set_dt(&mut self, dt: f64) {
        self.sim.dt = dt;
        self.actuator.dt = None;
        if let Some(a) = self.actuator1.as_mut() {
            a.dt = None;
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Validates every section and assembles the simulator input. Reads the
    /// trajectory file when the scenario needs one.
    pub fn to_sim(&self) -> Result<SimConfig> {
        let actuators = self.actuators();
        for a in &actuators {
            a.validate()?;
        }
        let supervisor = if self.supervisor.enabled {
            Some(self.supervisor.config().validate()?)
        } else {
            None
        };
        let controller = match self.controller.kind {
            ControllerKind::PiAw => ControllerChoice::PiAw(self.controller.pi_aw.validate()?),
            ControllerKind::Smc => ControllerChoice::Smc(self.controller.smc.validate()?),
        };
        let b = self.body;
        let body = BodyParams {
            gain: b.gain,
            stiffness: b.stiffness,
            damping: b.damping,
            t_act: b.t_act,
            theta_wall: None,
            flip_orientation: b.flip_orientation,
        }
        .validate(self.sim.ambient)?;

        let sc = &self.scenario;
        let reference = match sc.kind {
            ScenarioKind::Trajectory => {
                let rel = sc.trajectory.as_ref().ok_or_else(|| {
                    Error::Config("scenario.trajectory is required for kind = \"trajectory\"".into())
                })?;
                Reference::Samples(read_trajectory_csv(&self.resolve(rel))?)
            }
            _ => Reference::Constant(sc.theta_ref),
        };
        if sc.kind == ScenarioKind::Wall && sc.wall_angle.is_none() {
            return Err(Error::Config("scenario.wall_angle is required for kind = \"wall\"".into()));
        }
        if sc.kind == ScenarioKind::HumanDisturbance && sc.disturbance.is_none() {
            return Err(Error::Config(
                "scenario.disturbance is required for kind = \"human_disturbance\"".into(),
            ));
        }
        Ok(SimConfig {
            actuators,
            body,
            controller,
            supervisor,
            scenario: Scenario {
                kind: sc.kind,
                reference,
                duration: sc.duration,
                wall_angle: sc.wall_angle,
                disturbance: sc.disturbance,
            },
            dt: self.sim.dt,
            ambient: self.sim.ambient,
            initial_temperature: self.sim.initial_temperature.unwrap_or(self.sim.ambient),
            mismatch: self.sim.mismatch,
            sensor_noise: self.sim.sensor_noise,
            seed: self.sim.seed,
        })
    }
}

/// Config fragment holding fitted actuator coefficients. It is a complete run
/// config on its own.
pub fn actuator_fragment(params: &ActuatorParams, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!(
        "[sim]\ndt = {:?}\n\n[actuator]\na1 = {:?}\na2 = {:?}\na3 = {:?}\ndt = {:?}\n",
        params.dt, params.a1, params.a2, params.a3, params.dt
    ));
    out
}
