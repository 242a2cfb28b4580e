//! Run configuration: command-line flags over an optional TOML config file
//! over built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const DEFAULT_REPS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_T: f64 = 1.0;
pub const DEFAULT_TRAJECTORIES: usize = 1;

/// Flags shared by every command. All are optional here; each command
/// checks for the ones it needs.
#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// TOML file with any of the keys below (snake_case); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file (TOML).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Epidemic parameter file (TOML).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Value-iteration tolerance on the sup-norm step.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Bound on the discounted cost ignored when a trajectory is truncated.
    #[arg(long = "tail-tol")]
    pub tail_tol: Option<f64>,
    /// Monte Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; replication r uses stream r of this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory receiving the output artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the carrier truncation bound of an epidemic parameter file.
    #[arg(long = "c-max")]
    pub c_max: Option<usize>,
    /// Initial state label (epidemic labels look like `s10_c2_i2`).
    #[arg(long)]
    pub x0: Option<String>,
    /// Time horizon of the Dynkin check.
    #[arg(long)]
    pub t: Option<f64>,
    /// Comma-separated immunization costs for the sweep.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated waits before successive impulses.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Number of sampled trajectories written to CSV.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Reject epidemic parameters whose carrier coefficients decrease.
    #[arg(long = "strict-hd")]
    pub strict_hd: bool,
    /// Also solve the full epidemic model and compare with the carrier solution.
    #[arg(long)]
    pub generic: bool,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<PathBuf>,
    params: Option<PathBuf>,
    tol: Option<f64>,
    tail_tol: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    c_max: Option<usize>,
    x0: Option<String>,
    t: Option<f64>,
    lambdas: Option<Vec<f64>>,
    deltas: Option<Vec<f64>>,
    trajectories: Option<usize>,
    strict_hd: Option<bool>,
    generic: Option<bool>,
}

/// The effective configuration, echoed into every metadata record. The
/// output directory and thread count are left out: they do not affect
/// results.
#[derive(Serialize, Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub model: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub tol: f64,
    pub tail_tol: f64,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub c_max: Option<usize>,
    pub x0: Option<String>,
    pub t: f64,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub trajectories: usize,
    pub strict_hd: bool,
    pub generic: bool,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut file: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_owned(),
        message: e.message().to_owned(),
    })?;
    // Paths inside a config file are relative to the file itself.
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut file.model, &mut file.params, &mut file.out].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(file)
}

impl RunConfig {
    pub fn resolve(command: &'static str, flags: Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let cfg = Self {
            command,
            model: flags.model.or(file.model),
            params: flags.params.or(file.params),
            tol: flags.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            tail_tol: flags.tail_tol.or(file.tail_tol).unwrap_or(DEFAULT_TAIL_TOL),
            reps: flags.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads: flags.threads.or(file.threads),
            out: flags.out.or(file.out),
            c_max: flags.c_max.or(file.c_max),
            x0: flags.x0.or(file.x0),
            t: flags.t.or(file.t).unwrap_or(DEFAULT_T),
            lambdas: flags.lambdas.or(file.lambdas).unwrap_or_default(),
            deltas: flags.deltas.or(file.deltas).unwrap_or_default(),
            trajectories: flags.trajectories.or(file.trajectories).unwrap_or(DEFAULT_TRAJECTORIES),
            strict_hd: flags.strict_hd || file.strict_hd.unwrap_or(false),
            generic: flags.generic || file.generic.unwrap_or(false),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return usage(format!("--tol must be positive, got {}", self.tol));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol.is_finite()) {
            return usage(format!("--tail-tol must be positive, got {}", self.tail_tol));
        }
        if self.threads == Some(0) {
            return usage("--threads must be at least 1".into());
        }
        match self.command {
            "validate" | "solve" | "simulate" | "dynkin-check" => {
                if self.model.is_some() == self.params.is_some() {
                    return usage(format!("{} needs exactly one of --model or --params", self.command));
                }
            }
            _ => {
                if self.params.is_none() {
                    return usage(format!("{} needs --params", self.command));
                }
            }
        }
        if self.command == "epidemic-sweep" && self.lambdas.is_empty() {
            return usage("epidemic-sweep needs --lambdas".into());
        }
        if self.command == "simulate" && self.reps < 2 {
            return usage(format!("--reps must be at least 2, got {}", self.reps));
        }
        Ok(())
    }
}
