//! Tongue scans over the `(τ, α)` parameter plane.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::BaseMap;
use crate::error::{Error, Result};
use crate::fiber::{FiberFamily, ForcedMap};
use crate::locking::{classify, ClassifyBudget, LockClassification};
use crate::rng;
use crate::rotation::{rho_orbit_estimate, DEFAULT_SCAN_N};
use crate::trig::TrigPoly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub tau_count: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_count: usize,
    pub beta: f64,
    pub q: TrigPoly,
    pub base: BaseMap,
    pub budget: ClassifyBudget,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool. Not part of the exported
    /// echo, since results do not depend on it.
    #[serde(skip)]
    pub workers: usize,
    /// Orbit length of the per-cell rotation number estimate.
    pub rho_n: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            tau_lo: 0.0,
            tau_hi: 0.2,
            tau_count: 64,
            alpha_lo: 0.2,
            alpha_hi: 0.8,
            alpha_count: 16,
            beta: 0.0,
            q: TrigPoly::cos1(),
            base: BaseMap::default(),
            budget: ClassifyBudget::default(),
            seed: 0,
            workers: 0,
            rho_n: DEFAULT_SCAN_N,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_count < 2 || self.alpha_count < 2 {
            return Err(Error::Precondition("scan counts must be at least 2".into()));
        }
        if !(self.tau_lo.is_finite() && self.tau_hi.is_finite() && self.tau_lo < self.tau_hi) {
            return Err(Error::Precondition("tau range must be finite and increasing".into()));
        }
        if !(self.alpha_lo > 0.0 && self.alpha_lo < self.alpha_hi && self.alpha_hi < 1.0) {
            return Err(Error::Precondition(format!(
                "alpha range [{}, {}] must be increasing and inside (0, 1)",
                self.alpha_lo, self.alpha_hi
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::Precondition("beta must be finite".into()));
        }
        if self.rho_n == 0 {
            return Err(Error::Precondition("rho_n must be positive".into()));
        }
        self.budget.validate()
    }

    pub fn tau(&self, i: usize) -> f64 {
        axis(self.tau_lo, self.tau_hi, self.tau_count, i)
    }

    pub fn alpha(&self, j: usize) -> f64 {
        axis(self.alpha_lo, self.alpha_hi, self.alpha_count, j)
    }

    /// Spacing between neighboring `τ` cells.
    pub fn tau_step(&self) -> f64 {
        (self.tau_hi - self.tau_lo) / (self.tau_count - 1) as f64
    }

    pub fn map_at(&self, tau: f64, alpha: f64) -> Result<ForcedMap> {
        Ok(ForcedMap::new(
            self.base.clone(),
            FiberFamily::arnold(tau, alpha, self.beta, self.q.clone())?,
        ))
    }
}

fn axis(lo: f64, hi: f64, count: usize, i: usize) -> f64 {
    if i + 1 == count {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellCode {
    #[serde(rename = "L")]
    Locked,
    #[serde(rename = "U+")]
    UnlockedUp,
    #[serde(rename = "U-")]
    UnlockedDown,
    #[serde(rename = "?")]
    Undecided,
}

impl CellCode {
    pub fn of(class: &LockClassification) -> Self {
        match class {
            LockClassification::Locked { .. } => CellCode::Locked,
            LockClassification::UnlockedUp { .. } => CellCode::UnlockedUp,
            LockClassification::UnlockedDown { .. } => CellCode::UnlockedDown,
            LockClassification::Undecided { .. } => CellCode::Undecided,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellCode::Locked => "L",
            CellCode::UnlockedUp => "U+",
            CellCode::UnlockedDown => "U-",
            CellCode::Undecided => "?",
        }
    }

    /// Gray level in the PGM export.
    pub fn pixel(self) -> u8 {
        match self {
            CellCode::Locked => 0,
            CellCode::UnlockedUp => 1,
            CellCode::UnlockedDown => 2,
            CellCode::Undecided => 3,
        }
    }

    pub fn is_unlocked(self) -> bool {
        matches!(self, CellCode::UnlockedUp | CellCode::UnlockedDown)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTiming {
    pub total_secs: f64,
    pub slowest_cell_secs: f64,
    pub workers: usize,
}

/// Cells are stored row-major: `α` index outer, `τ` index inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TongueGrid {
    pub config: ScanConfig,
    pub codes: Vec<CellCode>,
    pub rho: Vec<f64>,
    pub classes: Vec<LockClassification>,
    pub timing: ScanTiming,
}

impl TongueGrid {
    pub fn index(&self, tau_i: usize, alpha_j: usize) -> usize {
        alpha_j * self.config.tau_count + tau_i
    }

    pub fn code(&self, tau_i: usize, alpha_j: usize) -> CellCode {
        self.codes[self.index(tau_i, alpha_j)]
    }

    pub fn row(&self, alpha_j: usize) -> &[CellCode] {
        let w = self.config.tau_count;
        &self.codes[alpha_j * w..(alpha_j + 1) * w]
    }

    /// `tau,alpha,class,rho_est` with one line per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,alpha,class,rho_est\n");
        for j in 0..self.config.alpha_count {
            for i in 0..self.config.tau_count {
                let k = self.index(i, j);
                let _ = writeln!(
                    out,
                    "{:.8},{:.8},{},{:.10}",
                    self.config.tau(i),
                    self.config.alpha(j),
                    self.codes[k].as_str(),
                    self.rho[k]
                );
            }
        }
        out
    }

    /// Plain PGM, one pixel per cell, rows in CSV order.
    pub fn to_pgm(&self) -> String {
        let (w, h) = (self.config.tau_count, self.config.alpha_count);
        let mut out = format!("P2\n{w} {h}\n3\n");
        for j in 0..h {
            let row: Vec<String> = self.row(j).iter().map(|c| c.pixel().to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Metadata sidecar. Timings vary between runs, so they are only
    /// included on request.
    pub fn metadata_json(&self, include_timings: bool) -> serde_json::Value {
        let (locked, undecided) = locked_fraction(self);
        let mut v = serde_json::json!({
            "config": self.config,
            "cells": self.codes.len(),
            "locked_fraction": locked,
            "undecided_fraction": undecided,
            "version": env!("CARGO_PKG_VERSION"),
        });
        if include_timings {
            v["timing"] = serde_json::to_value(&self.timing).expect("timing serializes");
        }
        v
    }
}

/// `(locked, undecided)` fractions of the cells.
pub fn locked_fraction(grid: &TongueGrid) -> (f64, f64) {
    fraction_of(&grid.codes)
}

/// `(locked, undecided)` fractions of a slice of codes, such as one row.
pub fn fraction_of(codes: &[CellCode]) -> (f64, f64) {
    if codes.is_empty() {
        return (0.0, 0.0);
    }
    let n = codes.len() as f64;
    let count = |c: CellCode| codes.iter().filter(|&&x| x == c).count() as f64 / n;
    (count(CellCode::Locked), count(CellCode::Undecided))
}

/// Index of the last cell in the run of `L` cells starting at `τ` index 0,
/// if the row starts locked.
pub fn locked_run_end(row: &[CellCode]) -> Option<usize> {
    let run = row.iter().take_while(|&&c| c == CellCode::Locked).count();
    run.checked_sub(1)
}

fn classify_cell(cfg: &ScanConfig, i: usize, j: usize) -> (LockClassification, f64, f64) {
    let start = Instant::now();
    let index = (j * cfg.tau_count + i) as u64;
    let outcome = cfg.map_at(cfg.tau(i), cfg.alpha(j)).and_then(|map| {
        let class = classify(&map, &cfg.budget)?;
        let mut r = rng::stream(cfg.seed, index);
        let x = map.base.sample(&mut r);
        let y: f64 = r.gen();
        let rho = rho_orbit_estimate(&map, &x, y, cfg.rho_n)?;
        Ok((class, rho))
    });
    let (class, rho) = outcome.unwrap_or_else(|e| {
        (
            LockClassification::Undecided {
                diagnostics: e.to_string(),
            },
            f64::NAN,
        )
    });
    (class, rho, start.elapsed().as_secs_f64())
}

/// Classifies every cell of the grid. Output does not depend on `workers`.
pub fn tongue_scan(cfg: &ScanConfig) -> Result<TongueGrid> {
    cfg.validate()?;
    let start = Instant::now();
    let cells: Vec<(usize, usize)> = (0..cfg.alpha_count)
        .flat_map(|j| (0..cfg.tau_count).map(move |i| (i, j)))
        .collect();
    let work = || -> Vec<(LockClassification, f64, f64)> {
        cells
            .par_iter()
            .map(|&(i, j)| classify_cell(cfg, i, j))
            .collect()
    };
    let (results, workers) = if cfg.workers == 0 {
        (work(), rayon::current_num_threads())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
        (pool.install(work), cfg.workers)
    };
    let slowest = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let codes = results.iter().map(|r| CellCode::of(&r.0)).collect();
    let rho = results.iter().map(|r| r.1).collect();
    let classes = results.into_iter().map(|r| r.0).collect();
    Ok(TongueGrid {
        config: cfg.clone(),
        codes,
        rho,
        classes,
        timing: ScanTiming {
            total_secs: start.elapsed().as_secs_f64(),
            slowest_cell_secs: slowest,
            workers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locking::locked_certificate;

    fn row_config(alpha: f64, tau_count: usize) -> ScanConfig {
        ScanConfig {
            tau_count,
            alpha_lo: alpha,
            alpha_hi: alpha + 1e-9,
            alpha_count: 2,
            rho_n: 2048,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn axis_endpoints() {
        let c = ScanConfig::default();
        assert_eq!(c.tau(0), 0.0);
        assert_eq!(c.tau(63), 0.2);
        assert_eq!(c.alpha(15), 0.8);
        assert!((c.tau_step() - 0.2 / 63.0).abs() < 1e-15);
    }

    #[test]
    fn config_guards() {
        let bad = ScanConfig {
            alpha_hi: 1.0,
            ..ScanConfig::default()
        };
        assert!(tongue_scan(&bad).is_err());
        let bad = ScanConfig {
            tau_count: 1,
            ..ScanConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tiny_grid_shape() {
        let cfg = ScanConfig {
            tau_count: 2,
            alpha_count: 2,
            rho_n: 256,
            ..ScanConfig::default()
        };
        let g = tongue_scan(&cfg).unwrap();
        assert_eq!(g.codes.len(), 4);
        let csv = g.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().next(), Some("tau,alpha,class,rho_est"));
        let pgm = g.to_pgm();
        assert!(pgm.starts_with("P2\n2 2\n3\n"));
        assert_eq!(pgm.lines().count(), 5);
    }

    #[test]
    fn alpha_half_row_boundary() {
        let cfg = row_config(0.5, 64);
        let g = tongue_scan(&cfg).unwrap();
        let edge = 0.5 / std::f64::consts::TAU;
        let h = cfg.tau_step();
        for i in 0..cfg.tau_count {
            let t = cfg.tau(i);
            if t < edge - h {
                assert_eq!(g.code(i, 0), CellCode::Locked, "tau={t}");
            }
            if t > 0.09 {
                assert!(g.code(i, 0).is_unlocked(), "tau={t} {:?}", g.code(i, 0));
            }
        }
        let (locked, undecided) = fraction_of(g.row(0));
        assert!((locked - edge / 0.2).abs() <= 1.0 / 64.0 + 1e-9, "{locked}");
        assert!(undecided <= 2.0 / 64.0);
        let end = locked_run_end(g.row(0)).unwrap();
        assert!((cfg.tau(end) - edge).abs() <= h);

        for (k, class) in g.classes.iter().enumerate() {
            if let LockClassification::Locked { delta, strip, steps } = class {
                let i = k % cfg.tau_count;
                let map = cfg.map_at(cfg.tau(i), cfg.alpha(k / cfg.tau_count)).unwrap();
                assert!(locked_certificate(&map, strip, *delta, *steps).unwrap().is_some());
            }
        }
    }

    #[test]
    fn fractions() {
        assert_eq!(fraction_of(&[CellCode::Undecided; 4]), (0.0, 1.0));
        assert_eq!(
            fraction_of(&[CellCode::Locked, CellCode::UnlockedUp]),
            (0.5, 0.0)
        );
        assert_eq!(locked_run_end(&[CellCode::UnlockedUp]), None);
        assert_eq!(
            locked_run_end(&[CellCode::Locked, CellCode::Locked, CellCode::Undecided]),
            Some(1)
        );
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let mut cfg = row_config(0.3, 12);
        cfg.workers = 1;
        let a = tongue_scan(&cfg).unwrap();
        cfg.workers = 3;
        let b = tongue_scan(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_pgm(), b.to_pgm());
        assert_eq!(a.metadata_json(false), b.metadata_json(false));
        assert!(a.metadata_json(true).get("timing").is_some());
    }
}
