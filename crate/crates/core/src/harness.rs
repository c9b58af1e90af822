//! Subcommand implementations behind the `softsafe` binary.
//!
//! Each function takes a parsed [`RunConfig`] plus overrides and returns a
//! printable report; the binary only handles argument parsing and exit codes.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::actuator_model::{calibrate, read_calibration_csv, ActuatorParams, Calibration};
use crate::config::{actuator_fragment, RunConfig};
use crate::error::{Error, Result};
use crate::limb_sim::{gamma_sweep, run_closed_loop, write_telemetry_csv, RunSummary, SweepRow};
use crate::polytope::{max_invariant_set, safe_set, set_equal, HPolyhedron, SafeSetSpec};
use crate::supervisor::{error_matrix, SupervisorConfig};

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub mismatch: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(dt) = self.dt {
            cfg.set_dt(dt);
        }
        if let Some(m) = self.mismatch {
            cfg.sim.mismatch = m;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub steps: usize,
    pub summary: RunSummary,
    pub w_max: Option<f64>,
    pub output: Option<PathBuf>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.summary;
        writeln!(f, "steps           {}", self.steps)?;
        writeln!(f, "max T0, T1      {:.4}, {:.4}", s.max_temps[0], s.max_temps[1])?;
        writeln!(f, "final error     {:.4}", s.final_error)?;
        match s.activation_time {
            Some(t) => writeln!(f, "activation      {t:.2} s")?,
            None => writeln!(f, "activation      none")?,
        }
        match self.w_max {
            Some(w) => writeln!(f, "overshoot       {:.6}", s.overshoot(w))?,
            None => writeln!(f, "supervisor      disabled")?,
        }
        if let Some(p) = &self.output {
            writeln!(f, "telemetry       {}", p.display())?;
        }
        Ok(())
    }
}

/// Runs one closed-loop simulation and writes its telemetry csv to `out`, or
/// to `sim.output` from the config when `out` is `None`.
pub fn cmd_run(cfg: &RunConfig, out: Option<&Path>, ov: Overrides) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    ov.apply(&mut cfg);
    let sim = cfg.to_sim()?;
    let records = run_closed_loop(&sim)?;
    let output = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.sim.output.as_ref().map(|p| cfg.resolve(p)));
    if let Some(path) = &output {
        let mut w = create(path)?;
        write_telemetry_csv(&records, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(RunReport {
        steps: records.len(),
        summary: RunSummary::of(&records),
        w_max: sim.supervisor.map(|s| s.w_max),
        output,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub gamma: f64,
    pub safe: bool,
    pub iterations: usize,
    pub spectral_radius: f64,
    pub invariant: HPolyhedron,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gamma={} {} iterations={} rho={:.6}",
            self.gamma,
            if self.safe { "SAFE" } else { "UNSAFE" },
            self.iterations,
            self.spectral_radius
        )
    }
}

/// Computes the maximal invariant subset of the safe set under the closed-loop
/// error dynamics and checks whether it is the whole safe set.
pub fn verify_one(
    params: &ActuatorParams,
    sup: &SupervisorConfig,
    max_iters: usize,
    tol: f64,
) -> Result<Verdict> {
    let params = params.validate()?;
    let sup = sup.validate()?;
    let a_cl = DMatrix::from_iterator(2, 2, error_matrix(&params, sup.gamma).iter().copied());
    let s = safe_set(SafeSetSpec {
        w_lb: sup.w_max - sup.w_lb,
    })?;
    let inv = max_invariant_set(&a_cl, &s, max_iters, tol)?;
    let safe = set_equal(&inv.set, &s, tol)?;
    Ok(Verdict {
        gamma: sup.gamma,
        safe,
        iterations: inv.iterations,
        spectral_radius: inv.spectral_radius,
        invariant: inv.set,
    })
}

/// Verifies every wire model at every gamma. With no gammas given, uses the
/// configured one.
pub fn cmd_verify(cfg: &RunConfig, gammas: Option<&[f64]>, max_iters: Option<usize>) -> Result<Vec<Verdict>> {
    let sup = cfg.supervisor.config();
    let gammas = match gammas {
        Some([]) => return Err(Error::Config("gamma list is empty".into())),
        Some(g) => g.to_vec(),
        None => vec![sup.gamma],
    };
    let max_iters = max_iters.unwrap_or(cfg.verify.max_iters);
    let actuators = cfg.actuators();
    let wires: &[ActuatorParams] = if actuators[0] == actuators[1] {
        &actuators[..1]
    } else {
        &actuators
    };
    let mut out = Vec::new();
    for &gamma in &gammas {
        for p in wires {
            out.push(verify_one(p, &SupervisorConfig { gamma, ..sup }, max_iters, cfg.verify.tol)?);
        }
    }
    Ok(out)
}

pub const SWEEP_HEADER: &str = "gamma,activation_time,max_T0,max_T1,final_error,overshoot";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let act = r
            .summary
            .activation_time
            .map_or_else(|| "none".to_string(), |t| t.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.gamma, act, r.summary.max_temps[0], r.summary.max_temps[1], r.summary.final_error, r.overshoot
        )?;
    }
    Ok(())
}

/// Re-runs the configured scenario once per gamma. Writes the sweep csv to
/// `out` when given.
pub fn cmd_sweep(cfg: &RunConfig, gammas: &[f64], out: Option<&Path>, ov: Overrides) -> Result<Vec<SweepRow>> {
    let mut cfg = cfg.clone();
    ov.apply(&mut cfg);
    cfg.supervisor.enabled = true;
    let sim = cfg.to_sim()?;
    let rows = gamma_sweep(&sim, gammas)?;
    if let Some(path) = out {
        let mut w = create(path)?;
        write_sweep_csv(&rows, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(rows)
}

/// Fits actuator coefficients to a `k,w,u,w_next` log. The returned text is a
/// config fragment that `run` accepts as is.
pub fn cmd_calibrate(data: &Path, dt: f64, out: Option<&Path>) -> Result<(Calibration, String)> {
    let samples = read_calibration_csv(data)?;
    let cal = calibrate(&samples, dt)?;
    let comment = format!(
        "fitted from {} ({} samples)\nresidual rms = {:e}",
        data.display(),
        samples.len(),
        cal.residual_rms
    );
    let text = actuator_fragment(&cal.params, &comment);
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
    }
    Ok((cal, text))
}

/// Parses `"0.1,0.2, 0.5"`.
pub fn parse_gammas(s: &str) -> Result<Vec<f64>> {
    let list: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad gamma value {t:?}")))
        })
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::Config("gamma list is empty".into()));
    }
    Ok(list)
}
