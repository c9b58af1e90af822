//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use softsafe::actuator_model::{calibrate, ActuatorParams, CalibrationSample};
use softsafe::config::RunConfig;
use softsafe::harness::{cmd_run, cmd_sweep, cmd_verify, Overrides};
use softsafe::limb_sim::{run_closed_loop, RunSummary};
use softsafe::polytope::{intersect, minimize, pre_image, spectral_radius, HPolyhedron, DEFAULT_TOL};
use softsafe::supervisor::{compose, u_max, SupervisorConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::from_path(&configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {elapsed:?}, limit {limit:?}"))
    }
}

/// Valid model and supervisor with `w_max` between the zero- and full-input
/// equilibria, so the cap at the boundary lies in [0, 1].
fn random_config(rng: &mut ChaCha8Rng) -> (ActuatorParams, SupervisorConfig) {
    let p = ActuatorParams {
        a1: rng.random_range(0.05..0.995),
        a2: rng.random_range(0.5..30.0),
        a3: rng.random_range(0.0..5.0),
        dt: 0.1,
    };
    let (lo, hi) = (p.equilibrium(0.0), p.equilibrium(1.0));
    let w_max = lo + rng.random_range(0.0..1.0) * (hi - lo);
    let c = SupervisorConfig {
        gamma: rng.random_range(0.01..0.99),
        w_max,
        w_lb: w_max - 50.0,
    };
    (p, c)
}

fn ac1() -> Outcome {
    let gammas = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let start = Instant::now();
    let verdicts = cmd_verify(&RunConfig::default(), Some(&gammas), None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    for v in &verdicts {
        if !v.safe || v.iterations != 1 {
            return Err(format!("{v}"));
        }
    }
    within(elapsed, Duration::from_secs(1), format!("{} gammas SAFE in 1 iteration", verdicts.len()))
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, c) = random_config(&mut rng);
        let u = u_max(&p, &c, c.w_max);
        let next = p.step(c.w_max, u).map_err(|e| e.to_string())?;
        worst = worst.max((next - c.w_max).abs());
    }
    let elapsed = start.elapsed();
    if worst > 1e-9 {
        return Err(format!("max |step(w_max, u_max) - w_max| = {worst:e}"));
    }
    within(elapsed, Duration::from_secs(1), format!("1000 configs, max deviation {worst:e}"))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (p, c) = random_config(&mut rng);
        let rate = (1.0 - c.gamma) * p.a1;
        let e0 = -rng.random_range(0.0..60.0);
        let mut w = c.w_max + e0;
        for k in 1..=200 {
            w = p.advance(w, u_max(&p, &c, w));
            worst = worst.max((w - c.w_max - rate.powi(k) * e0).abs());
        }
    }
    if worst > 1e-9 {
        return Err(format!("max deviation from closed form {worst:e}"));
    }
    Ok(format!("100 configs x 200 steps, max deviation {worst:e}"))
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (p, c) = random_config(&mut rng);
        let mut w = c.w_max - rng.random_range(0.0..40.0);
        for _ in 0..10_000 {
            let req: f64 = rng.random_range(0.0..=1.0);
            let s = compose([req], [u_max(&p, &c, w)]);
            w = p.step(w, s.applied[0]).map_err(|e| e.to_string())?;
            worst = worst.max(w - c.w_max);
        }
    }
    let elapsed = start.elapsed();
    if worst > 1e-6 {
        return Err(format!("temperature exceeded w_max by {worst:e}"));
    }
    within(
        elapsed,
        Duration::from_secs(30),
        format!("1000 configs x 1e4 steps, max(w - w_max) = {worst:e}"),
    )
}

fn ac5() -> Outcome {
    let mut detail = Vec::new();
    for name in ["step_pi.toml", "step_smc.toml"] {
        let cfg = load(name);
        let sim = cfg.to_sim().map_err(|e| e.to_string())?;
        let sup = sim.supervisor.ok_or(format!("{name}: supervisor disabled"))?;
        if sup.gamma != 0.2 || sup.w_max != 65.0 || sim.scenario.reference_at(0) != 40.0 {
            return Err(format!("{name}: unexpected scenario parameters"));
        }
        let s = RunSummary::of(&run_closed_loop(&sim).map_err(|e| e.to_string())?);
        if s.max_temp() > 65.0 + 1e-6 {
            return Err(format!("{name}: max T = {}", s.max_temp()));
        }
        detail.push(format!("{name} max T {:.6}", s.max_temp()));
    }
    let sim = load("wall_unsupervised.toml").to_sim().map_err(|e| e.to_string())?;
    if sim.supervisor.is_some() {
        return Err("wall_unsupervised.toml has the supervisor enabled".into());
    }
    let s = RunSummary::of(&run_closed_loop(&sim).map_err(|e| e.to_string())?);
    if s.max_temp() <= 65.0 {
        return Err(format!("unsupervised wall run stayed at {}", s.max_temp()));
    }
    detail.push(format!("unsupervised wall max T {:.2}", s.max_temp()));
    Ok(detail.join(", "))
}

fn ac6() -> Outcome {
    let cfg = load("sweep.toml");
    let grid = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let rows = cmd_sweep(&cfg, &grid, None, Overrides::default()).map_err(|e| e.to_string())?;
    let times: Vec<f64> = rows
        .iter()
        .map(|r| r.summary.activation_time.unwrap_or(f64::INFINITY))
        .collect();
    let fmt_times: Vec<String> = times.iter().map(|t| format!("{t:.1}")).collect();
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(format!("activation times not nondecreasing: [{}]", fmt_times.join(", ")));
    }

    let gammas = [0.6, 0.3, 0.1];
    let ov = Overrides { dt: None, mismatch: Some(1.2) };
    let rows = cmd_sweep(&cfg, &gammas, None, ov).map_err(|e| e.to_string())?;
    let over: Vec<f64> = rows.iter().map(|r| r.overshoot).collect();
    let fmt_over: Vec<String> = gammas
        .iter()
        .zip(&over)
        .map(|(g, o)| format!("g={g}: {o:.4}"))
        .collect();
    if over.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        return Err(format!(
            "activation times ok [{}]; mismatch 1.2 overshoot grows as gamma decreases: {}",
            fmt_times.join(", "),
            fmt_over.join(", ")
        ));
    }
    Ok(format!(
        "activation times [{}]; mismatch overshoot {}",
        fmt_times.join(", "),
        fmt_over.join(", ")
    ))
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..10_000 {
        let p = ActuatorParams {
            a1: rng.random_range(1e-3..1.0),
            a2: rng.random_range(1e-3..50.0),
            a3: rng.random_range(0.0..10.0),
            dt: 0.1,
        };
        let w = rng.random_range(-50.0..200.0);
        let (x, y): (f64, f64) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let (u1, u2) = (x.min(y), x.max(y));
        let (a, b) = (p.step(w, u1).map_err(|e| e.to_string())?, p.step(w, u2).map_err(|e| e.to_string())?);
        if a > b {
            violations += 1;
        }
    }
    if violations > 0 {
        return Err(format!("{violations} violations"));
    }
    Ok("1e4 triples, 0 violations".into())
}

fn random_stable(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let rho = spectral_radius(&m);
        if rho > 1e-6 {
            return m * (rng.random_range(0.05..0.98) / rho);
        }
    }
}

/// Axis box with a few random cuts, all keeping the origin inside.
fn random_polygon(rng: &mut ChaCha8Rng) -> HPolyhedron {
    let mut rows = Vec::new();
    let mut offsets = Vec::new();
    for (i, s) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
        let mut r = vec![0.0; 2];
        r[i] = s;
        rows.push(r);
        offsets.push(rng.random_range(0.5..5.0));
    }
    for _ in 0..rng.random_range(0..5) {
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        rows.push(vec![t.cos(), t.sin()]);
        offsets.push(rng.random_range(0.3..4.0));
    }
    HPolyhedron::from_rows(&rows, &offsets).expect("valid polygon")
}

fn sample_in(rng: &mut ChaCha8Rng, p: &HPolyhedron, count: usize) -> Vec<DVector<f64>> {
    let (lo, hi) = p.bounding_box().expect("bounded");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = DVector::from_fn(2, |i, _| {
            if hi[i] > lo[i] {
                rng.random_range(lo[i]..=hi[i])
            } else {
                lo[i]
            }
        });
        if p.contains(&x, 0.0) {
            out.push(x);
        }
    }
    out
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..500 {
        let a = random_stable(&mut rng);
        let o = random_polygon(&mut rng);
        let pre = pre_image(&a, &o).map_err(|e| e.to_string())?;
        let p = intersect(&pre, &o, DEFAULT_TOL).map_err(|e| e.to_string())?;
        for x in sample_in(&mut rng, &p, 1000) {
            if !o.contains(&(&a * x), DEFAULT_TOL) {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return Err(format!("{violations} sampled points of Pre(A,O) n O left O"));
    }

    let mut mismatches = 0;
    for _ in 0..100 {
        let p = random_polygon(&mut rng);
        let m = minimize(&p, DEFAULT_TOL).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-6.0..6.0));
            if p.contains(&x, DEFAULT_TOL) != m.contains(&x, DEFAULT_TOL) {
                mismatches += 1;
            }
        }
    }
    if mismatches > 0 {
        return Err(format!("minimize changed membership of {mismatches} points"));
    }
    Ok("500 systems x 1000 points, 0 violations; minimize preserved 1e4 points".into())
}

fn synthetic_log(truth: &ActuatorParams, n: usize, sigma: f64, seed: u64) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut w = 25.0;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(0.0..=1.0);
            let clean = truth.advance(w, u);
            let w_next = if sigma > 0.0 { clean + noise.sample(&mut rng) } else { clean };
            let s = CalibrationSample { w_k: w, u_k: u, w_next };
            w = w_next;
            s
        })
        .collect()
}

fn ac9() -> Outcome {
    let truth = ActuatorParams::default();
    let rel = |c: &ActuatorParams| {
        [
            ((c.a1 - truth.a1) / truth.a1).abs(),
            ((c.a2 - truth.a2) / truth.a2).abs(),
            ((c.a3 - truth.a3) / truth.a3).abs(),
        ]
    };
    let clean = calibrate(&synthetic_log(&truth, 200, 0.0, 9), truth.dt).map_err(|e| e.to_string())?;
    let abs_err = [
        (clean.params.a1 - truth.a1).abs(),
        (clean.params.a2 - truth.a2).abs(),
        (clean.params.a3 - truth.a3).abs(),
    ];
    let worst_clean = abs_err.iter().copied().fold(0.0, f64::max);
    if worst_clean > 1e-8 {
        return Err(format!("noiseless error {worst_clean:e}"));
    }
    let noisy = calibrate(&synthetic_log(&truth, 10_000, 0.1, 19), truth.dt).map_err(|e| e.to_string())?;
    let worst_noisy = rel(&noisy.params).into_iter().fold(0.0, f64::max);
    if worst_noisy > 0.02 {
        return Err(format!("noisy relative error {:.4}%", 100.0 * worst_noisy));
    }
    Ok(format!(
        "noiseless error {worst_clean:e}; sigma 0.1 relative error {:.4}%",
        100.0 * worst_noisy
    ))
}

fn bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_softsafe"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("softsafe {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = configs_dir().join("human_disturbance.toml");
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    bin(&["run", "-c", cfg, "-o", a.to_str().unwrap()])?;
    bin(&["run", "-c", cfg, "-o", b.to_str().unwrap()])?;
    let (ta, tb) = (std::fs::read(&a).map_err(|e| e.to_string())?, std::fs::read(&b).map_err(|e| e.to_string())?);
    if ta != tb || ta.is_empty() {
        return Err("repeated runs differ".into());
    }

    // noisy config too: the seed must pin the noise
    let mut noisy = RunConfig::default();
    noisy.sim.sensor_noise = 0.5;
    noisy.sim.seed = 11;
    noisy.scenario.duration = 5.0;
    let (na, nb) = (dir.path().join("na.csv"), dir.path().join("nb.csv"));
    cmd_run(&noisy, Some(&na), Overrides::default()).map_err(|e| e.to_string())?;
    cmd_run(&noisy, Some(&nb), Overrides::default()).map_err(|e| e.to_string())?;
    if std::fs::read(&na).ok() != std::fs::read(&nb).ok() {
        return Err("seeded noisy runs differ".into());
    }

    let log = dir.path().join("log.csv");
    let truth = ActuatorParams { a1: 0.9, a2: 8.0, a3: 2.5, dt: 0.1 };
    let mut text = String::from("k,w,u,w_next\n");
    for (k, s) in synthetic_log(&truth, 100, 0.0, 10).iter().enumerate() {
        text.push_str(&format!("{k},{},{},{}\n", s.w_k, s.u_k, s.w_next));
    }
    std::fs::write(&log, text).map_err(|e| e.to_string())?;
    let frag = dir.path().join("fitted.toml");
    bin(&["calibrate", log.to_str().unwrap(), "--dt", "0.1", "-o", frag.to_str().unwrap()])?;
    let out = dir.path().join("fitted.csv");
    bin(&["run", "-c", frag.to_str().unwrap(), "-o", out.to_str().unwrap()])?;
    let rows = std::fs::read_to_string(&out).map_err(|e| e.to_string())?.lines().count();
    Ok(format!(
        "byte-identical telemetry ({} bytes); calibrate output ran ({} rows)",
        ta.len(),
        rows - 1
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1", "invariant set equals safe set", ac1),
        ("AC2", "supervisor boundary hold", ac2),
        ("AC3", "closed-form error decay", ac3),
        ("AC4", "temperature bound under arbitrary requests", ac4),
        ("AC5", "supervised step runs stay safe, unsupervised wall overheats", ac5),
        ("AC6", "gamma sweep ordering", ac6),
        ("AC7", "monotone actuator map", ac7),
        ("AC8", "polytope kernel oracle", ac8),
        ("AC9", "calibration round trip", ac9),
        ("AC10", "determinism and CLI contract", ac10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("[PASS] {id} {name} ({secs:.2}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {id} {name} ({secs:.2}s): {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
