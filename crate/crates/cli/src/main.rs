//! `scarsim` command-line driver.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration or domain error, 3 capacity
//! exceeded, 4 numerical failure. `manifest.json` is written in every case
//! once the output directory exists.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::Context;
use config::{ConfigError, Run};
use output::{Outputs, Stages};

#[derive(Parser, Debug)]
#[command(
    name = "scarsim",
    version,
    about = "Scar dynamics and spectra of dimerized XY models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact diagonalization, level statistics, entropies, overlaps and towers.
    Spectrum,
    /// Quench trajectories of the initial states.
    Evolve,
    /// Imbalance Fourier peak of named plus random basis states.
    Scan,
    /// Imbalance peak versus intra/inter coupling ratio.
    Sweep,
    /// Hypercube coupling sums versus size and ratio.
    Hypercube,
    /// Effective couplings of a circuit by coupler elimination.
    Sw,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Scan => "scan",
            Command::Sweep => "sweep",
            Command::Hypercube => "hypercube",
            Command::Sw => "sw",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use scarsim::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Capacity(_) => 3,
                E::Integration { .. } | E::LinearAlgebra(_) => 4,
                E::Io(_) | E::Csv(_) => 1,
                E::Domain(_) | E::State(_) | E::SymmetryAbsent(_) | E::DispersiveViolation { .. } | E::Parse(_) => 2,
            };
        }
        if cause.is::<ConfigError>() || cause.is::<toml::de::Error>() {
            return 2;
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return 1;
        }
    }
    1
}

struct Session {
    command: Command,
    config_path: Option<PathBuf>,
    config_text: Option<String>,
    run: Option<Run>,
    workers: usize,
    started: f64,
    clock: Instant,
}

fn load(cli: &Cli) -> anyhow::Result<(String, Run)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let run = Run::parse(&text, &base, cli.seed)?;
    Ok((text, run))
}

fn execute(
    session: &Session,
    out: &mut Outputs,
    stages: &mut Stages,
    notes: &mut serde_json::Map<String, Value>,
) -> anyhow::Result<()> {
    let mut cx = Context {
        run: session.run.as_ref().expect("loaded"),
        out,
        stages,
        notes,
    };
    match session.command {
        Command::Spectrum => commands::spectrum(&mut cx),
        Command::Evolve => commands::evolve(&mut cx),
        Command::Scan => commands::scan(&mut cx),
        Command::Sweep => commands::sweep(&mut cx),
        Command::Hypercube => commands::hypercube(&mut cx),
        Command::Sw => commands::sw(&mut cx),
    }
}

fn manifest(
    session: &Session,
    outputs: &Outputs,
    stages: &Stages,
    notes: serde_json::Map<String, Value>,
    error: Option<(&anyhow::Error, u8)>,
) -> Value {
    let config = session
        .run
        .as_ref()
        .and_then(|r| serde_json::to_value(&r.config).ok())
        .unwrap_or(Value::Null);
    let (seed, krylov, graph_notes) = match &session.run {
        Some(r) => (
            json!(r.config.seed),
            serde_json::to_value(&r.config.krylov).unwrap_or(Value::Null),
            r.graph().map(|g| json!(g.provenance())).unwrap_or(Value::Null),
        ),
        None => (Value::Null, Value::Null, Value::Null),
    };
    json!({
        "tool": "scarsim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": session.command.name(),
        "status": if error.is_some() { "error" } else { "ok" },
        "error": error.map(|(e, code)| json!({"exit_code": code, "message": format!("{e:#}")})),
        "config_path": session.config_path.as_ref().map(|p| p.display().to_string()),
        "config": config,
        "config_text": if session.run.is_none() { json!(session.config_text) } else { Value::Null },
        "prng": scarsim::model::PRNG_NAME,
        "seed": seed,
        "workers": session.workers,
        "started_unix_s": session.started,
        "wall_time_s": session.clock.elapsed().as_secs_f64(),
        "stages": stages.0.iter().map(|(n, s)| json!({"stage": n, "seconds": s})).collect::<Vec<_>>(),
        "tolerances": {
            "krylov": krylov,
            "degeneracy_flag": scarsim::spectral::DEGENERACY_FLAG,
            "degenerate_spacing": scarsim::spectral::DEGENERATE_SPACING,
            "dense_budget": scarsim::spectral::DENSE_BUDGET,
        },
        "conventions": {
            "units": "couplings and frequencies in MHz (J/2pi), time in ns",
            "fourier": "mean-subtracted, zero-padded, single-sided amplitude 2|X_k|/N_raw",
            "subsystem_fidelity": "projector form <phi_A|rho_A|phi_A>",
            "entropy": "natural logarithm",
            "cross_couplings": "uniform on [f_lo, f_hi] over grid-diagonal pairs",
        },
        "graph": graph_notes,
        "notes": notes,
        "outputs": outputs.files,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    if let Some(n) = cli.workers {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid worker count {n}");
            return ExitCode::from(2);
        }
    }
    let mut session = Session {
        command: cli.command,
        config_path: cli.config.clone(),
        config_text: None,
        run: None,
        workers: rayon::current_num_threads(),
        started,
        clock,
    };
    let mut outputs = Outputs::new(&cli.out);
    let mut stages = Stages::default();
    let mut notes = serde_json::Map::new();

    let result = match load(&cli) {
        Ok((text, run)) => {
            session.config_text = Some(text);
            session.run = Some(run);
            execute(&session, &mut outputs, &mut stages, &mut notes)
        }
        Err(e) => {
            session.config_text = cli.config.as_ref().and_then(|p| std::fs::read_to_string(p).ok());
            Err(e)
        }
    };
    let error = result.as_ref().err().map(|e| (e, exit_code(e)));
    let m = manifest(&session, &outputs, &stages, notes, error);
    let path = cli.out.join("manifest.json");
    let written = serde_json::to_string_pretty(&m)
        .map_err(anyhow::Error::from)
        .and_then(|t| std::fs::write(&path, t + "\n").map_err(anyhow::Error::from));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", path.display());
        return ExitCode::from(1);
    }
    match error {
        None => ExitCode::SUCCESS,
        Some((e, code)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
