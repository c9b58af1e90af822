use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use softsafe::config::RunConfig;
use softsafe::harness::{self, Overrides};
use softsafe::Error;

#[derive(Parser)]
#[command(name = "softsafe", version, about = "Supervised soft actuator simulation and verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one closed-loop scenario and write telemetry.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Telemetry csv (defaults to `sim.output` from the config).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        mismatch: Option<f64>,
    },
    /// Check that the safe set is invariant under the supervised error dynamics.
    Verify {
        /// Built-in defaults when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Comma separated list, overrides `supervisor.gamma`.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Re-run a scenario for several gammas and tabulate the results.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value = "0.05,0.1,0.2,0.3,0.5,0.7,0.9")]
        gammas: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        mismatch: Option<f64>,
    },
    /// Fit actuator coefficients to a `k,w,u,w_next` log.
    Calibrate {
        data: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Config fragment output (printed when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Writes to stdout; a closed pipe (`softsafe ... | head`) ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: <stdout>: {e}");
        std::process::exit(1);
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig, Error> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::from_path)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Run { config, out, dt, mismatch } => {
            let cfg = load(Some(&config))?;
            let report = harness::cmd_run(&cfg, out.as_deref(), Overrides { dt, mismatch })?;
            emit(&report.to_string());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { config, gammas, max_iters } => {
            let cfg = load(config.as_deref())?;
            let gammas = gammas.as_deref().map(harness::parse_gammas).transpose()?;
            let verdicts = harness::cmd_verify(&cfg, gammas.as_deref(), max_iters)?;
            let mut all_safe = true;
            for v in &verdicts {
                emit(&format!("{v}\n{}", v.invariant));
                all_safe &= v.safe;
            }
            Ok(if all_safe { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Sweep { config, gammas, out, dt, mismatch } => {
            let cfg = load(Some(&config))?;
            let gammas = harness::parse_gammas(&gammas)?;
            let rows = harness::cmd_sweep(&cfg, &gammas, out.as_deref(), Overrides { dt, mismatch })?;
            if out.is_none() {
                let mut buf = Vec::new();
                harness::write_sweep_csv(&rows, &mut buf).expect("writing to memory");
                emit(&String::from_utf8_lossy(&buf));
            } else {
                emit(&format!("{} runs\n", rows.len()));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Calibrate { data, dt, out } => {
            let (cal, text) = harness::cmd_calibrate(&data, dt, out.as_deref())?;
            match out {
                Some(p) => emit(&format!("residual rms {:e}, written to {}\n", cal.residual_rms, p.display())),
                None => emit(&text),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NoConvergence { last, .. } = &e {
                eprintln!("last iterate:");
                eprint!("{last}");
            }
            ExitCode::FAILURE
        }
    }
}
