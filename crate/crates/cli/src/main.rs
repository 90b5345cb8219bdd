use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use tonguelock_cli::config::Subcommand;
use tonguelock_cli::{parse_config, run};

/// Rotation numbers, mode-locking certificates and Lyapunov bounds for
/// forced circle maps.
#[derive(Parser)]
#[command(name = "tonguelock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(clap::Subcommand, Clone, Copy)]
enum Command {
    /// Rotation-number enclosure.
    Rho,
    /// Locked / unlocked certificate.
    Classify,
    /// Extremal fiberwise Lyapunov exponent bounds.
    Lyap,
    /// Tongue scan over (tau, alpha).
    Scan,
    /// Search near the forcing for a mode-locked map.
    ProbeLock,
    /// Descend the extremal exponents while staying unlocked.
    ProbeExponent,
    /// Run the acceptance checks.
    Selftest,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Rho => Subcommand::Rho,
            Command::Classify => Subcommand::Classify,
            Command::Lyap => Subcommand::Lyap,
            Command::Scan => Subcommand::Scan,
            Command::ProbeLock => Subcommand::ProbeLock,
            Command::ProbeExponent => Subcommand::ProbeExponent,
            Command::Selftest => Subcommand::Selftest,
        }
    }
}

#[derive(Args)]
struct Flags {
    /// Config file with `section.key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Forcing coefficients `c0; a1,b1; ...`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    grid_x: Option<String>,
    #[arg(long, global = true)]
    grid_y: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true)]
    check_integral: bool,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
    #[arg(long, global = true)]
    csv: Option<String>,
    #[arg(long, global = true)]
    pgm: Option<String>,
    /// JSON sidecar or report path.
    #[arg(long = "out-json", global = true)]
    out_json: Option<String>,
    /// Selftest criteria to run, e.g. `2,4`.
    #[arg(long, global = true)]
    only: Option<String>,
    /// Any config key, e.g. `--set scan.tau_count=16`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Flags {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        };
        put("fiber.tau", &self.tau);
        put("fiber.alpha", &self.alpha);
        put("fiber.beta", &self.beta);
        put("fiber.q", &self.q);
        put("command.n", &self.n);
        put("command.grid_x", &self.grid_x);
        put("command.grid_y", &self.grid_y);
        put("command.eps", &self.eps);
        put("seed", &self.seed);
        put("command.workers", &self.workers);
        put("output.csv", &self.csv);
        put("output.pgm", &self.pgm);
        put("output.json", &self.out_json);
        put("selftest.only", &self.only);
        if self.json {
            out.push(("command.json".into(), "true".into()));
        }
        if self.check_integral {
            out.push(("command.check_integral".into(), "true".into()));
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            out.push((k.trim().to_string(), v.to_string()));
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.flags.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let mut overrides = vec![(
        "command.name".to_string(),
        Subcommand::from(cli.command).name().to_string(),
    )];
    match cli.flags.overrides() {
        Ok(o) => overrides.extend(o),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match parse_config(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let code = run(&cfg, &mut std::io::stdout());
    ExitCode::from(code as u8)
}
