//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::chain::ChainParams;
use crate::config::RunConfig;
use crate::dynamics::RampProtocol;
use crate::error::{Error, Result};
use crate::fermion::integrable_friction;
use crate::figures::{FigureId, FigureRecipe};
use crate::report::{format_float, modes_csv, sweep_csv, write_atomic};
use crate::sweep::{content_hash, Engine, PointSpec, Solver, VERSION};

/// Tolerance of the exact identities reported by `check`.
pub const IDENTITY_TOL: f64 = 1e-8;
const NEGATIVITY_TOL: f64 = 1e-8;
const RELATIVE_ENTROPY_FLOOR: f64 = -1e-10;
const DIAGONAL_ENTROPY_FLOOR: f64 = -1e-9;

#[derive(Debug, Parser)]
#[command(name = "frictionwork", version, about = "Frictional work in driven transverse-field Ising chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sweep described by a config file.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Output file name; defaults to the config file stem plus `.csv`.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Regenerate the tables and plot description of one figure, or `all`.
    Figure {
        id: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Per-mode table of the free-fermion solver (L = 0).
    Modes {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "modes.csv")]
        name: String,
    },
    /// Evaluate the exact identities at one point and print their residuals.
    Check {
        #[command(flatten)]
        point: PointArgs,
    },
}

/// One parameter point; unset flags fall back to the config file, then to
/// the reference point (N=8, g=1, L=1, h_i=1.5, dh=2, tau=1, T_i=3).
#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long = "Ti")]
    pub t_i: Option<f64>,
    #[arg(long = "hi")]
    pub h_i: Option<f64>,
    #[arg(long)]
    pub dh: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub step_dt: Option<f64>,
}

impl PointArgs {
    fn resolve(&self, default_longitudinal: Option<f64>) -> Result<PointSpec> {
        let mut p = match &self.config {
            Some(path) => RunConfig::load(path)?.point,
            None => {
                let mut p = RunConfig::default().point;
                if let Some(l) = default_longitudinal {
                    p.params.longitudinal = l;
                }
                p
            }
        };
        let pr = p.protocol;
        p.params = ChainParams::new(
            self.n.unwrap_or(p.params.n_sites),
            self.g.unwrap_or(p.params.coupling),
            self.l.unwrap_or(p.params.longitudinal),
        )
        .map_err(as_config)?;
        p.protocol = RampProtocol::linear(
            self.h_i.unwrap_or(pr.h_initial),
            self.dh.unwrap_or(pr.delta_h),
            self.tau.unwrap_or(pr.duration),
        )
        .map_err(as_config)?;
        p.t_i = self.t_i.unwrap_or(p.t_i);
        if self.step_dt.is_some() {
            p.evolution.step_dt = self.step_dt;
        }
        p.validate().map_err(as_config)?;
        Ok(p)
    }
}

fn as_config(e: Error) -> Error {
    if e.is_config() {
        e
    } else {
        Error::Config(e.to_string())
    }
}

/// 2 for bad input or unwritable output, 3 for numerical failures.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_config() || matches!(e, Error::Io { .. }) {
        2
    } else {
        3
    }
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    Ok(path)
}

/// Outcome of a command that completed but produced failed rows.
struct PartialFailure(Vec<String>);

fn run_sweep(config: &Path, out: &Path, name: Option<&str>, workers: usize) -> Result<PartialFailure> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.sweep_spec();
    spec.validate()?;
    let result = Engine::new(workers).run(&spec)?;
    let file = match name {
        Some(n) => n.to_string(),
        None => format!("{}.csv", config.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep")),
    };
    let path = write_out(out, &file, &sweep_csv(&result)?)?;
    println!("{} rows -> {} (config_hash={})", result.rows.len(), path.display(), result.config_hash);
    let failures = result
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|m| format!("{}={}: {m}", result.axis.name(), r.axis_value)))
        .collect();
    Ok(PartialFailure(failures))
}

fn run_figure(id: &str, out: &Path, workers: usize) -> Result<PartialFailure> {
    let ids: Vec<FigureId> = if id == "all" {
        FigureId::ALL.to_vec()
    } else {
        vec![FigureId::from_name(id).ok_or_else(|| {
            let known: Vec<&str> = FigureId::ALL.iter().map(|f| f.name()).collect();
            Error::Config(format!("unknown figure {id:?}; known: {}, all", known.join(", ")))
        })?]
    };
    let engine = Engine::new(workers);
    let mut failures = Vec::new();
    for id in ids {
        let output = FigureRecipe::new(id).run(&engine)?;
        for f in &output.files {
            let path = write_out(out, &f.name, &f.bytes)?;
            println!("{} -> {}", id.name(), path.display());
        }
        println!("{} config_hash={}", id.name(), output.config_hash);
        failures.extend(output.failures);
    }
    Ok(PartialFailure(failures))
}

fn run_modes(args: &PointArgs, out: &Path, name: &str) -> Result<PartialFailure> {
    let p = args.resolve(Some(0.0))?;
    let report = integrable_friction(&p.params, &p.protocol, p.t_i, &p.evolution)?;
    let path = write_out(out, name, &modes_csv(&report, &content_hash(&p), VERSION)?)?;
    let t = &report.total;
    println!("{} modes -> {}", report.modes.len(), path.display());
    println!("W_fric = {}", format_float(t.w_fric));
    println!("T_A = {}", format_float(t.t_a));
    println!("T_A dS_d = {}", format_float(t.t_a_delta_s_d));
    println!("sum_j T_A^j dS_d^j = {}", format_float(report.sum_mode_t_a_delta_s_d));
    Ok(PartialFailure(vec![]))
}

/// One line of the `check` listing.
pub struct CheckLine {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

/// Every exact identity and sign constraint at one point.
pub fn check_lines(point: &PointSpec) -> Result<(Vec<(&'static str, f64)>, Vec<CheckLine>)> {
    let r = Engine::new(1).evaluate(point, Solver::Exact)?;
    let rep = r.report;
    let d = r.diagnostics.expect("exact solver reports diagnostics");
    let id = d.identities;
    let quantities = vec![
        ("W_tau", rep.w_tau),
        ("W_A", rep.w_a),
        ("W_fric", rep.w_fric),
        ("T_A", rep.t_a),
        ("dS_d", rep.delta_s_d),
        ("T_A dS_d", rep.t_a_delta_s_d),
        ("D(rho_tau||rho_A)", rep.d_tau_a),
        ("D(rho_tau^diag||rho_A)", rep.d_diag_a),
        ("delta", rep.delta),
        ("W_opt", rep.w_opt),
        ("unitarity deviation", d.unitarity_deviation),
    ];
    let small = |name, value: f64| CheckLine {
        name,
        value,
        pass: value.abs() < IDENTITY_TOL,
    };
    let lines = vec![
        small("W_fric - (W_tau - W_A)", rep.w_fric - (rep.w_tau - rep.w_a)),
        small("coherence split: D(tau||A) - dS_d - D(diag||A)", id.coherence_split),
        small("free-energy split at T_A", id.free_energy_split[0]),
        small("free-energy split at 2 T_A", id.free_energy_split[1]),
        small("thermal-reference split at T_A", id.thermal_reference_split[0]),
        small("thermal-reference split at 2 T_A", id.thermal_reference_split[1]),
        small("entropy mismatch S(rho_tau) - S(rho_A)", id.entropy_mismatch),
        CheckLine {
            name: "W_fric (must be >= -1e-8)",
            value: rep.w_fric,
            pass: rep.w_fric >= -NEGATIVITY_TOL,
        },
        CheckLine {
            name: "dS_d (must be >= -1e-9)",
            value: rep.delta_s_d,
            pass: rep.delta_s_d >= DIAGONAL_ENTROPY_FLOOR,
        },
        CheckLine {
            name: "min relative entropy (must be >= -1e-10)",
            value: rep.d_tau_a.min(rep.d_diag_a),
            pass: rep.d_tau_a.min(rep.d_diag_a) >= RELATIVE_ENTROPY_FLOOR,
        },
    ];
    Ok((quantities, lines))
}

fn run_check(args: &PointArgs) -> Result<PartialFailure> {
    let p = args.resolve(None)?;
    let (quantities, lines) = check_lines(&p)?;
    let mut out = std::io::stdout().lock();
    let pr = &p.protocol;
    let _ = writeln!(
        out,
        "point: n={} g={} L={} h_i={} dh={} tau={} T_i={}",
        p.params.n_sites, p.params.coupling, p.params.longitudinal, pr.h_initial, pr.delta_h, pr.duration, p.t_i
    );
    for (name, v) in &quantities {
        let _ = writeln!(out, "  {name:<48} {}", format_float(*v));
    }
    let mut failed = Vec::new();
    for l in &lines {
        let status = if l.pass { "ok" } else { "FAILED" };
        let _ = writeln!(out, "  {:<48} {:>20}  {status}", l.name, format_float(l.value));
        if !l.pass {
            failed.push(format!("{} = {}", l.name, format_float(l.value)));
        }
    }
    Ok(PartialFailure(failed))
}

pub fn run(cli: Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Sweep {
            config,
            out,
            name,
            workers,
        } => run_sweep(config, out, name.as_deref(), *workers),
        Command::Figure { id, out, workers } => run_figure(id, out, *workers),
        Command::Modes { point, out, name } => run_modes(point, out, name),
        Command::Check { point } => run_check(point),
    };
    match outcome {
        Ok(PartialFailure(f)) if f.is_empty() => ExitCode::SUCCESS,
        Ok(PartialFailure(f)) => {
            for m in &f {
                eprintln!("error: {m}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
