//! Subcommand dispatch.

use std::io::Write;
use std::path::Path;

use thiserror::Error;
use tonguelock_core::acceptance::CRITERIA;
use tonguelock_core::locking::{classify_detailed, LockClassification};
use tonguelock_core::lyapunov::{derivative_integral_check, exponent_bounds};
use tonguelock_core::probe::{exponent_minimize, lock_search, LockSearchConfig};
use tonguelock_core::rotation::rotation_enclosure;
use tonguelock_core::scan::{locked_fraction, tongue_scan};

use crate::config::{ConfigError, FiberKindName, RunConfig, Subcommand};

pub const EXIT_OK: i32 = 0;
/// Some selftest criterion failed.
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;

pub const THREADS_ENV: &str = "TONGUELOCK_THREADS";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] tonguelock_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn stdout_err(source: std::io::Error) -> RunError {
    RunError::Io {
        path: "stdout".into(),
        source,
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

/// Worker count after applying the environment override.
pub fn effective_workers(cfg: &RunConfig) -> Result<usize, RunError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| RunError::Other(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(cfg.workers),
    }
}

/// Runs the configured command, printing to `out`, and returns the exit
/// code. Errors are reported to stderr as exit code 2.
pub fn run(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> i32 {
    match execute(cfg, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let workers = effective_workers(cfg)?;
    let mut cfg = cfg.clone();
    cfg.workers = workers;
    if workers == 0 {
        return dispatch(&cfg, out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Other(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| dispatch(&cfg, out))
}

fn dispatch(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    match cfg.command {
        Subcommand::Rho => rho(cfg, out),
        Subcommand::Classify => classify_cmd(cfg, out),
        Subcommand::Lyap => lyap(cfg, out),
        Subcommand::Scan => scan(cfg, out),
        Subcommand::ProbeLock => probe_lock(cfg, out),
        Subcommand::ProbeExponent => probe_exponent(cfg, out),
        Subcommand::Selftest => selftest(cfg, out),
    }
}

fn rho(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let map = cfg.forced_map()?;
    let e = rotation_enclosure(&map, cfg.n, cfg.grid_x, cfg.grid_y, cfg.eps)?;
    if cfg.json {
        write!(out, "{}", pretty(&e)).map_err(stdout_err)?;
    } else {
        writeln!(
            out,
            "{:.6} {:.6} {} {}{}",
            e.lo,
            e.hi,
            e.n,
            e.rigor,
            if e.flagged { " flagged" } else { "" }
        )
        .map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}

fn classify_cmd(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let map = cfg.forced_map()?;
    let report = classify_detailed(&map, &cfg.classify_budget())?;
    if cfg.json {
        write!(out, "{}", pretty(&report)).map_err(stdout_err)?;
    } else {
        let line = match &report.class {
            LockClassification::Locked { delta, strip, steps } => format!(
                "LOCKED delta={delta} steps={steps} radius={}",
                strip.radii()[0]
            ),
            LockClassification::UnlockedUp { eps, n, gap_per_step }
            | LockClassification::UnlockedDown { eps, n, gap_per_step } => format!(
                "{} eps={eps} n={n} gap_per_step={gap_per_step:.6e}",
                report.class.label()
            ),
            LockClassification::Undecided { diagnostics } => format!("UNDECIDED {diagnostics}"),
        };
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(match report.class {
        LockClassification::Undecided { .. } => EXIT_UNDECIDED,
        _ => EXIT_OK,
    })
}

fn lyap(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let map = cfg.forced_map()?;
    let e = exponent_bounds(&map, cfg.n, cfg.grid_x, cfg.grid_y)?;
    let integral = if cfg.check_integral {
        Some(derivative_integral_check(
            &map,
            &map.base.origin(),
            cfg.integral_n,
            cfg.nodes,
        )?)
    } else {
        None
    };
    if cfg.json {
        let v = serde_json::json!({ "estimate": e, "integral": integral });
        write!(out, "{}", pretty(&v)).map_err(stdout_err)?;
    } else {
        writeln!(
            out,
            "upper_L_plus={:.6} lower_L_minus={:.6} margin={:.6} n={} {}",
            e.upper_l_plus, e.lower_l_minus, e.margin, e.n, e.rigor
        )
        .map_err(stdout_err)?;
        if let Some(v) = integral {
            writeln!(out, "integral={v:.12} n={} nodes={}", cfg.integral_n, cfg.nodes)
                .map_err(stdout_err)?;
        }
    }
    Ok(EXIT_OK)
}

fn scan(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let scan_cfg = cfg.scan_config()?;
    let grid = tongue_scan(&scan_cfg)?;
    let csv = grid.to_csv();
    match &cfg.csv {
        Some(p) => write_file(p, &csv)?,
        None => write!(out, "{csv}").map_err(stdout_err)?,
    }
    if let Some(p) = &cfg.pgm {
        write_file(p, &grid.to_pgm())?;
    }
    if let Some(p) = &cfg.meta {
        write_file(p, &pretty(&grid.metadata_json(cfg.timings)))?;
    }
    if cfg.csv.is_some() {
        let (locked, undecided) = locked_fraction(&grid);
        writeln!(
            out,
            "cells={} locked_fraction={locked:.4} undecided_fraction={undecided:.4}",
            grid.codes.len()
        )
        .map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}

fn emit_report(cfg: &RunConfig, out: &mut (dyn Write + Send), text: &str) -> Result<(), RunError> {
    if let Some(p) = &cfg.meta {
        write_file(p, text)?;
    }
    write!(out, "{text}").map_err(stdout_err)
}

fn probe_lock(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    if cfg.fiber_kind != Some(FiberKindName::Arnold) {
        return Err(RunError::Other(
            "probe-lock perturbs the forcing of fiber.kind=arnold".into(),
        ));
    }
    let base = cfg.base_map()?;
    let probe = LockSearchConfig {
        seed: cfg.seed,
        ..cfg.lock_probe.clone()
    };
    let report = lock_search(
        &base,
        cfg.tau,
        cfg.alpha,
        cfg.beta,
        &cfg.q,
        &probe,
        &cfg.classify_budget(),
    )?;
    emit_report(cfg, out, &pretty(&report))?;
    Ok(if report.found.is_some() {
        EXIT_OK
    } else {
        EXIT_NOT_FOUND
    })
}

fn probe_exponent(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let map = cfg.forced_map()?;
    let mut probe = cfg.exponent_probe.clone();
    probe.seed = cfg.seed;
    let report = exponent_minimize(&map.base, &map.fiber, &probe, &cfg.classify_budget())?;
    emit_report(cfg, out, &pretty(&report))?;
    Ok(EXIT_OK)
}

fn selftest(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<i32, RunError> {
    let mut all = true;
    for c in CRITERIA
        .iter()
        .filter(|c| cfg.selftest_only.is_empty() || cfg.selftest_only.contains(&c.id))
    {
        let report = c.run();
        writeln!(out, "{report}").map_err(stdout_err)?;
        out.flush().map_err(stdout_err)?;
        all &= report.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILED })
}
