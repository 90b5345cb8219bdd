//! Flat `section.key=value` configuration.
//!
//! Values come from three layers: built-in defaults, a config file, and
//! command-line overrides, later layers winning. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tonguelock_core::base::{BaseMap, DEFAULT_ODOMETER_DEPTH, GOLDEN_CONJUGATE};
use tonguelock_core::locking::ClassifyBudget;
use tonguelock_core::probe::{ExponentSearchConfig, LockSearchConfig};
use tonguelock_core::rotation::{DEFAULT_ENCLOSURE_N, DEFAULT_GRID, DEFAULT_SCAN_N};
use tonguelock_core::scan::ScanConfig;
use tonguelock_core::{FiberFamily, ForcedMap, TrigPoly};

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: {key}: {message}")]
    Key {
        origin: Origin,
        key: String,
        message: String,
    },
    #[error("{origin}: expected `key=value`, got {text:?}")]
    Syntax { origin: Origin, text: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Rho,
    Classify,
    Lyap,
    Scan,
    ProbeLock,
    ProbeExponent,
    Selftest,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Rho,
        Subcommand::Classify,
        Subcommand::Lyap,
        Subcommand::Scan,
        Subcommand::ProbeLock,
        Subcommand::ProbeExponent,
        Subcommand::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Rho => "rho",
            Subcommand::Classify => "classify",
            Subcommand::Lyap => "lyap",
            Subcommand::Scan => "scan",
            Subcommand::ProbeLock => "probe-lock",
            Subcommand::ProbeExponent => "probe-exponent",
            Subcommand::Selftest => "selftest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Rotation,
    SkewShift,
    Odometer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberKindName {
    Arnold,
    PFamily,
    TrigLift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Subcommand,

    pub base_kind: BaseKind,
    pub omega: Vec<f64>,
    pub skew_alpha: f64,
    pub radices: Vec<u32>,
    pub depth: usize,

    /// Required for every command except `selftest`.
    pub fiber_kind: Option<FiberKindName>,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: TrigPoly,
    pub p: TrigPoly,
    pub h: TrigPoly,
    /// Constant term, then `a_1, b_1, a_2, b_2, …`, each a polynomial in θ.
    pub lift: Vec<TrigPoly>,

    pub n: usize,
    pub grid_x: usize,
    pub grid_y: usize,
    pub eps: f64,
    pub json: bool,
    pub check_integral: bool,
    pub integral_n: usize,
    pub nodes: usize,
    pub workers: usize,

    pub budget: ClassifyBudget,
    pub scan: ScanConfig,
    pub lock_probe: LockSearchConfig,
    pub exponent_probe: ExponentSearchConfig,
    pub selftest_only: Vec<u8>,

    pub csv: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub timings: bool,

    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let budget = ClassifyBudget::default();
        RunConfig {
            command: Subcommand::Rho,
            base_kind: BaseKind::Rotation,
            omega: vec![GOLDEN_CONJUGATE],
            skew_alpha: GOLDEN_CONJUGATE,
            radices: vec![2],
            depth: DEFAULT_ODOMETER_DEPTH,
            fiber_kind: None,
            tau: 0.0,
            alpha: 0.5,
            beta: 0.0,
            q: TrigPoly::cos1(),
            p: TrigPoly::new(0.0, vec![0.05], vec![0.0]).expect("finite"),
            h: TrigPoly::zero(),
            lift: vec![TrigPoly::zero(), TrigPoly::constant(0.05), TrigPoly::zero()],
            n: DEFAULT_ENCLOSURE_N,
            grid_x: DEFAULT_GRID,
            grid_y: DEFAULT_GRID,
            eps: 0.0,
            json: false,
            check_integral: false,
            integral_n: 8,
            nodes: 4096,
            workers: 0,
            scan: ScanConfig {
                budget: budget.clone(),
                rho_n: DEFAULT_SCAN_N,
                ..ScanConfig::default()
            },
            budget,
            lock_probe: LockSearchConfig::default(),
            exponent_probe: ExponentSearchConfig::default(),
            selftest_only: Vec::new(),
            csv: None,
            pgm: None,
            meta: None,
            timings: false,
            seed: 0,
        }
    }
}

/// Every accepted key, in export order.
pub const KEYS: &[&str] = &[
    "command.name",
    "base.kind",
    "base.omega",
    "base.alpha",
    "base.radices",
    "base.depth",
    "fiber.kind",
    "fiber.tau",
    "fiber.alpha",
    "fiber.beta",
    "fiber.q",
    "fiber.p",
    "fiber.h",
    "fiber.lift",
    "command.n",
    "command.grid_x",
    "command.grid_y",
    "command.eps",
    "command.json",
    "command.check_integral",
    "command.integral_n",
    "command.nodes",
    "command.workers",
    "classify.n_list",
    "classify.eps_list",
    "classify.transient",
    "classify.x_nodes",
    "classify.radii",
    "classify.strip_steps",
    "classify.deltas",
    "scan.tau_lo",
    "scan.tau_hi",
    "scan.tau_count",
    "scan.alpha_lo",
    "scan.alpha_hi",
    "scan.alpha_count",
    "scan.rho_n",
    "probe.radius",
    "probe.trials",
    "probe.modes",
    "probe.iterations",
    "probe.step_radius",
    "probe.n",
    "probe.grid_x",
    "probe.grid_y",
    "selftest.only",
    "output.csv",
    "output.pgm",
    "output.json",
    "output.timings",
    "seed",
];

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.trim()
        .parse()
        .map_err(|_| format!("malformed number {:?}", v.trim()))
}

fn real(v: &str) -> Result<f64, String> {
    let x: f64 = num(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{:?} is not finite", v.trim()))
    }
}

fn list<T, F: Fn(&str) -> Result<T, String>>(v: &str, item: F) -> Result<Vec<T>, String> {
    let out: Vec<T> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(item)
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        Err("list must not be empty".into())
    } else {
        Ok(out)
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn poly(v: &str) -> Result<TrigPoly, String> {
    v.trim().parse().map_err(|e: tonguelock_core::Error| e.to_string())
}

fn path(v: &str) -> Option<PathBuf> {
    let v = v.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Assigns one key. The error is a message without the key name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "command.name" => {
                self.command =
                    Subcommand::parse(v).ok_or_else(|| format!("unknown command {v:?}"))?
            }
            "base.kind" => {
                self.base_kind = match v {
                    "rotation" => BaseKind::Rotation,
                    "skewshift" | "skew_shift" => BaseKind::SkewShift,
                    "odometer" => BaseKind::Odometer,
                    _ => return Err(format!("unknown base kind {v:?}")),
                }
            }
            "base.omega" => self.omega = list(v, real)?,
            "base.alpha" => self.skew_alpha = real(v)?,
            "base.radices" => self.radices = list(v, num)?,
            "base.depth" => self.depth = num(v)?,
            "fiber.kind" => {
                self.fiber_kind = Some(match v {
                    "arnold" => FiberKindName::Arnold,
                    "pfamily" => FiberKindName::PFamily,
                    "triglift" => FiberKindName::TrigLift,
                    _ => return Err(format!("unknown fiber kind {v:?}")),
                })
            }
            "fiber.tau" => self.tau = real(v)?,
            "fiber.alpha" => {
                let a = real(v)?;
                if !(0.0..1.0).contains(&a) {
                    return Err(format!("alpha must lie in [0, 1), got {a}"));
                }
                self.alpha = a;
            }
            "fiber.beta" => self.beta = real(v)?,
            "fiber.q" => self.q = poly(v)?,
            "fiber.p" => self.p = poly(v)?,
            "fiber.h" => self.h = poly(v)?,
            "fiber.lift" => {
                let polys: Vec<TrigPoly> = v.split('|').map(poly).collect::<Result<_, _>>()?;
                if polys.len().is_multiple_of(2) {
                    return Err("lift needs a constant term and (a, b) pairs".into());
                }
                self.lift = polys;
            }
            "command.n" => self.n = num(v)?,
            "command.grid_x" => self.grid_x = num(v)?,
            "command.grid_y" => self.grid_y = num(v)?,
            "command.eps" => self.eps = real(v)?,
            "command.json" => self.json = boolean(v)?,
            "command.check_integral" => self.check_integral = boolean(v)?,
            "command.integral_n" => self.integral_n = num(v)?,
            "command.nodes" => self.nodes = num(v)?,
            "command.workers" => self.workers = num(v)?,
            "classify.n_list" => self.budget.n_list = list(v, num)?,
            "classify.eps_list" => self.budget.eps_list = list(v, real)?,
            "classify.transient" => self.budget.transient = num(v)?,
            "classify.x_nodes" => self.budget.x_nodes = num(v)?,
            "classify.radii" => self.budget.radii = list(v, real)?,
            "classify.strip_steps" => self.budget.strip_steps = list(v, num)?,
            "classify.deltas" => self.budget.deltas = list(v, real)?,
            "scan.tau_lo" => self.scan.tau_lo = real(v)?,
            "scan.tau_hi" => self.scan.tau_hi = real(v)?,
            "scan.tau_count" => self.scan.tau_count = num(v)?,
            "scan.alpha_lo" => self.scan.alpha_lo = real(v)?,
            "scan.alpha_hi" => self.scan.alpha_hi = real(v)?,
            "scan.alpha_count" => self.scan.alpha_count = num(v)?,
            "scan.rho_n" => self.scan.rho_n = num(v)?,
            "probe.radius" => self.lock_probe.radius = real(v)?,
            "probe.trials" => self.lock_probe.trials = num(v)?,
            "probe.modes" => {
                let m = num(v)?;
                self.lock_probe.modes = m;
                self.exponent_probe.modes = m;
            }
            "probe.iterations" => self.exponent_probe.iterations = num(v)?,
            "probe.step_radius" => self.exponent_probe.radius = real(v)?,
            "probe.n" => self.exponent_probe.n = num(v)?,
            "probe.grid_x" => self.exponent_probe.grid_x = num(v)?,
            "probe.grid_y" => self.exponent_probe.grid_y = num(v)?,
            "selftest.only" => {
                self.selftest_only = if v.is_empty() { Vec::new() } else { list(v, num)? }
            }
            "output.csv" => self.csv = path(v),
            "output.pgm" => self.pgm = path(v),
            "output.json" => self.meta = path(v),
            "output.timings" => self.timings = boolean(v)?,
            "seed" => self.seed = num(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Current value of a key in config syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        Some(match key {
            "command.name" => self.command.name().into(),
            "base.kind" => match self.base_kind {
                BaseKind::Rotation => "rotation",
                BaseKind::SkewShift => "skewshift",
                BaseKind::Odometer => "odometer",
            }
            .into(),
            "base.omega" => join(&self.omega),
            "base.alpha" => self.skew_alpha.to_string(),
            "base.radices" => join(&self.radices),
            "base.depth" => self.depth.to_string(),
            "fiber.kind" => match self.fiber_kind? {
                FiberKindName::Arnold => "arnold",
                FiberKindName::PFamily => "pfamily",
                FiberKindName::TrigLift => "triglift",
            }
            .into(),
            "fiber.tau" => self.tau.to_string(),
            "fiber.alpha" => self.alpha.to_string(),
            "fiber.beta" => self.beta.to_string(),
            "fiber.q" => self.q.to_string(),
            "fiber.p" => self.p.to_string(),
            "fiber.h" => self.h.to_string(),
            "fiber.lift" => self
                .lift
                .iter()
                .map(TrigPoly::to_string)
                .collect::<Vec<_>>()
                .join(" | "),
            "command.n" => self.n.to_string(),
            "command.grid_x" => self.grid_x.to_string(),
            "command.grid_y" => self.grid_y.to_string(),
            "command.eps" => self.eps.to_string(),
            "command.json" => self.json.to_string(),
            "command.check_integral" => self.check_integral.to_string(),
            "command.integral_n" => self.integral_n.to_string(),
            "command.nodes" => self.nodes.to_string(),
            "command.workers" => self.workers.to_string(),
            "classify.n_list" => join(&self.budget.n_list),
            "classify.eps_list" => join(&self.budget.eps_list),
            "classify.transient" => self.budget.transient.to_string(),
            "classify.x_nodes" => self.budget.x_nodes.to_string(),
            "classify.radii" => join(&self.budget.radii),
            "classify.strip_steps" => join(&self.budget.strip_steps),
            "classify.deltas" => join(&self.budget.deltas),
            "scan.tau_lo" => self.scan.tau_lo.to_string(),
            "scan.tau_hi" => self.scan.tau_hi.to_string(),
            "scan.tau_count" => self.scan.tau_count.to_string(),
            "scan.alpha_lo" => self.scan.alpha_lo.to_string(),
            "scan.alpha_hi" => self.scan.alpha_hi.to_string(),
            "scan.alpha_count" => self.scan.alpha_count.to_string(),
            "scan.rho_n" => self.scan.rho_n.to_string(),
            "probe.radius" => self.lock_probe.radius.to_string(),
            "probe.trials" => self.lock_probe.trials.to_string(),
            "probe.modes" => self.lock_probe.modes.to_string(),
            "probe.iterations" => self.exponent_probe.iterations.to_string(),
            "probe.step_radius" => self.exponent_probe.radius.to_string(),
            "probe.n" => self.exponent_probe.n.to_string(),
            "probe.grid_x" => self.exponent_probe.grid_x.to_string(),
            "probe.grid_y" => self.exponent_probe.grid_y.to_string(),
            "selftest.only" => join(&self.selftest_only),
            "output.csv" => opt(&self.csv),
            "output.pgm" => opt(&self.pgm),
            "output.json" => opt(&self.meta),
            "output.timings" => self.timings.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Config text that parses back to this configuration.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = self.get(key) {
                let _ = writeln!(out, "{key}={v}");
            }
        }
        out
    }

    pub fn base_map(&self) -> tonguelock_core::Result<BaseMap> {
        match self.base_kind {
            BaseKind::Rotation => BaseMap::rotation(&self.omega),
            BaseKind::SkewShift => BaseMap::skew_shift(self.skew_alpha),
            BaseKind::Odometer if self.radices.len() == 1 => {
                BaseMap::odometer_uniform(self.radices[0], self.depth)
            }
            BaseKind::Odometer => BaseMap::odometer(&self.radices),
        }
    }

    pub fn fiber(&self) -> Result<FiberFamily, ConfigError> {
        let kind = self.fiber_kind.ok_or_else(|| ConfigError::Invalid {
            key: "fiber.kind".into(),
            message: "required (arnold, pfamily or triglift)".into(),
        })?;
        let invalid = |key: &str| {
            let key = key.to_string();
            move |e: tonguelock_core::Error| ConfigError::Invalid {
                key,
                message: e.to_string(),
            }
        };
        match kind {
            FiberKindName::Arnold => FiberFamily::arnold(self.tau, self.alpha, self.beta, self.q.clone())
                .map_err(invalid("fiber.alpha")),
            FiberKindName::PFamily => {
                FiberFamily::pfamily(self.p.clone(), self.h.clone()).map_err(invalid("fiber.p"))
            }
            FiberKindName::TrigLift => {
                let constant = self.lift[0].clone();
                let modes = self.lift[1..]
                    .chunks(2)
                    .map(|ab| (ab[0].clone(), ab[1].clone()))
                    .collect();
                FiberFamily::trig_lift(constant, modes).map_err(invalid("fiber.lift"))
            }
        }
    }

    pub fn forced_map(&self) -> Result<ForcedMap, ConfigError> {
        let base = self.base_map().map_err(|e| ConfigError::Invalid {
            key: "base".into(),
            message: e.to_string(),
        })?;
        Ok(ForcedMap::new(base, self.fiber()?))
    }

    /// Classification budget with the command grids.
    pub fn classify_budget(&self) -> ClassifyBudget {
        ClassifyBudget {
            grid_x: self.grid_x,
            grid_y: self.grid_y,
            ..self.budget.clone()
        }
    }

    pub fn scan_config(&self) -> Result<ScanConfig, ConfigError> {
        let base = self.base_map().map_err(|e| ConfigError::Invalid {
            key: "base".into(),
            message: e.to_string(),
        })?;
        Ok(ScanConfig {
            beta: self.beta,
            q: self.q.clone(),
            base,
            budget: self.classify_budget(),
            seed: self.seed,
            workers: self.workers,
            ..self.scan.clone()
        })
    }
}

fn check_writable(key: &str, p: &Path) -> Result<(), ConfigError> {
    let dir = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let fail = |message: String| ConfigError::Invalid {
        key: key.into(),
        message,
    };
    if !dir.is_dir() {
        return Err(fail(format!("directory {} does not exist", dir.display())));
    }
    let probe = dir.join(format!(".tonguelock-write-check-{}", std::process::id()));
    std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&probe)
        .map_err(|e| fail(format!("directory {} is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

/// Parses config text, then applies `overrides` in order.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin,
                text: raw.to_string(),
            });
        };
        let key = key.trim();
        cfg.set(key, value).map_err(|message| ConfigError::Key {
            origin,
            key: key.to_string(),
            message,
        })?;
    }
    for (key, value) in overrides {
        cfg.set(key, value).map_err(|message| ConfigError::Key {
            origin: Origin::Override,
            key: key.clone(),
            message,
        })?;
    }
    for (key, p) in [("output.csv", &cfg.csv), ("output.pgm", &cfg.pgm), ("output.json", &cfg.meta)] {
        if let Some(p) = p {
            check_writable(key, p)?;
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips_through_get_and_set() {
        let mut cfg = RunConfig {
            fiber_kind: Some(FiberKindName::Arnold),
            ..RunConfig::default()
        };
        for key in KEYS {
            let v = cfg.get(key).unwrap();
            cfg.set(key, &v).unwrap_or_else(|e| panic!("{key}={v}: {e}"));
        }
        assert_eq!(cfg.get("nope"), None);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config("# header\n\nfiber.kind = arnold # trailing\nfiber.tau=0.25\n", &[]).unwrap();
        assert_eq!(cfg.tau, 0.25);
        assert_eq!(cfg.fiber_kind, Some(FiberKindName::Arnold));
    }

    #[test]
    fn syntax_error_names_line() {
        let err = parse_config("fiber.kind=arnold\njunk\n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn lift_parsing() {
        let mut cfg = RunConfig::default();
        cfg.set("fiber.lift", "0.1; 0,0.05 | 0.02 | 0").unwrap();
        assert_eq!(cfg.lift.len(), 3);
        assert!(cfg.set("fiber.lift", "0 | 1").is_err());
        cfg.fiber_kind = Some(FiberKindName::TrigLift);
        assert!(cfg.fiber().is_ok());
    }
}
