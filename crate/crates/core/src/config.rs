//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [chain]
//! n = 8
//! g = 1
//! L = 1
//! [protocol]
//! h_i = 1.5
//! dh = 2
//! tau = 1
//! T_i = 3
//! [sweep]
//! axis = tau
//! grid_start = 0.05
//! grid_stop = 5
//! grid_points = 60
//! grid_scale = log
//! solver = exact
//! ```
//!
//! Section headers only group keys for the reader; every key is global and
//! may appear at most once.

use std::collections::BTreeMap;
use std::path::Path;

use crate::chain::ChainParams;
use crate::dynamics::{AdiabaticMethod, EvolutionConfig, RampProtocol};
use crate::error::{Error, Result};
use crate::sweep::{grid, Axis, Constraint, PointSpec, Solver, SweepSpec};

const SECTIONS: [&str; 4] = ["chain", "protocol", "evolution", "sweep"];

const KEYS: [&str; 20] = [
    "n",
    "g",
    "L",
    "h_i",
    "dh",
    "tau",
    "T_i",
    "adiabatic_tau",
    "adiabatic_step",
    "adiabatic_method",
    "step_dt",
    "unitarity_tol",
    "axis",
    "grid_start",
    "grid_stop",
    "grid_points",
    "grid_scale",
    "solver",
    "drive_rate",
    "grid",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridScale {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub point: PointSpec,
    pub solver: Solver,
    pub grid: Option<GridSpec>,
    pub constraint: Option<Constraint>,
}

impl Default for RunConfig {
    /// The chain and protocol of the non-integrable reference runs.
    fn default() -> Self {
        RunConfig {
            point: PointSpec {
                params: ChainParams {
                    n_sites: 8,
                    coupling: 1.0,
                    longitudinal: 1.0,
                },
                protocol: RampProtocol::linear(1.5, 2.0, 1.0).expect("valid default"),
                t_i: 3.0,
                evolution: EvolutionConfig::default(),
            },
            solver: Solver::Exact,
            grid: None,
            constraint: None,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::config(format!("{key}: expected a number, got {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: expected a non-negative integer, got {value:?}")))
}

/// Key-value pairs in file order, with duplicate and unknown keys rejected.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::config(format!("line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| at(format!("malformed section header {line:?}")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(at(format!("unknown section [{name}]")));
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(at(format!("unknown key {key:?}")));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(at(format!("duplicate key {key:?}")));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let kv = parse_pairs(text)?;
        let mut cfg = RunConfig::default();
        let num = |k: &str| kv.get(k).map(|v| parse_f64(k, v)).transpose();

        let p = &mut cfg.point;
        if let Some(v) = kv.get("n") {
            p.params.n_sites = parse_usize("n", v)?;
        }
        if let Some(v) = num("g")? {
            p.params.coupling = v;
        }
        if let Some(v) = num("L")? {
            p.params.longitudinal = v;
        }
        if let Some(v) = num("h_i")? {
            p.protocol.h_initial = v;
        }
        if let Some(v) = num("dh")? {
            p.protocol.delta_h = v;
        }
        if let Some(v) = num("tau")? {
            p.protocol.duration = v;
        }
        if let Some(v) = num("T_i")? {
            p.t_i = v;
        }
        if let Some(v) = num("adiabatic_tau")? {
            p.evolution.adiabatic_tau = v;
        }
        if let Some(v) = num("adiabatic_step")? {
            p.evolution.adiabatic_step = v;
        }
        if let Some(v) = num("step_dt")? {
            p.evolution.step_dt = Some(v);
        }
        if let Some(v) = num("unitarity_tol")? {
            p.evolution.unitarity_tol = v;
        }
        if let Some(v) = kv.get("adiabatic_method") {
            p.evolution.adiabatic_method = match v.as_str() {
                "transport" => AdiabaticMethod::Transport,
                "projected" => AdiabaticMethod::Projected,
                other => return Err(Error::config(format!("adiabatic_method: unknown value {other:?}"))),
            };
        }
        if let Some(v) = kv.get("solver") {
            cfg.solver = match v.as_str() {
                "exact" => Solver::Exact,
                "free-fermion" | "free_fermion" => Solver::FreeFermion,
                other => return Err(Error::config(format!("solver: unknown value {other:?}"))),
            };
        }
        if let Some(v) = num("drive_rate")? {
            cfg.constraint = Some(Constraint::FixedDriveRate(v));
        }

        let grid_keys = ["grid_start", "grid_stop", "grid_points", "grid_scale", "grid"];
        let has_grid = grid_keys.iter().any(|k| kv.contains_key(*k));
        match kv.get("axis") {
            Some(name) => {
                let axis = Axis::from_name(name).ok_or_else(|| Error::config(format!("axis: unknown axis {name:?}")))?;
                let values = if let Some(list) = kv.get("grid") {
                    if ["grid_start", "grid_stop", "grid_points", "grid_scale"].iter().any(|k| kv.contains_key(*k)) {
                        return Err(Error::config("give either grid or grid_start/grid_stop/grid_points"));
                    }
                    list.split(',').map(|s| parse_f64("grid", s.trim())).collect::<Result<Vec<_>>>()?
                } else {
                    let need = |k: &str| kv.get(k).ok_or_else(|| Error::config(format!("axis given but {k} missing")));
                    let start = parse_f64("grid_start", need("grid_start")?)?;
                    let stop = parse_f64("grid_stop", need("grid_stop")?)?;
                    let points = parse_usize("grid_points", need("grid_points")?)?;
                    let scale = match kv.get("grid_scale").map(String::as_str) {
                        None | Some("lin") => GridScale::Linear,
                        Some("log") => GridScale::Log,
                        Some(other) => return Err(Error::config(format!("grid_scale: expected lin or log, got {other:?}"))),
                    };
                    grid(start, stop, points, scale == GridScale::Log)?
                };
                cfg.grid = Some(GridSpec { axis, values });
            }
            None if has_grid => return Err(Error::config("grid keys given without axis")),
            None => {}
        }
        cfg.point.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// The sweep this config describes; a config without a grid is a single
    /// point on the `tau` axis.
    pub fn sweep_spec(&self) -> SweepSpec {
        let (axis, grid) = match &self.grid {
            Some(g) => (g.axis, g.values.clone()),
            None => (Axis::Tau, vec![self.point.protocol.duration]),
        };
        SweepSpec {
            base: self.point,
            axis,
            grid,
            solver: self.solver,
            constraint: self.constraint,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_example_parses() {
        let text = "# reference sweep\n[chain]\nn = 6\ng = 1\nL = 0.5\n[protocol]\nh_i = 1.5\ndh = 2\ntau = 1\nT_i = 3\n\
                    [evolution]\nstep_dt = 0.0005\n[sweep]\naxis = tau\ngrid_start = 0.1\ngrid_stop = 10\n\
                    grid_points = 3\ngrid_scale = log\nsolver = exact\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.point.params.n_sites, 6);
        assert_eq!(c.point.params.longitudinal, 0.5);
        assert_eq!(c.point.evolution.step_dt, Some(0.0005));
        let g = c.grid.unwrap();
        assert_eq!(g.axis, Axis::Tau);
        assert_eq!(g.values.len(), 3);
        assert!((g.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_config_error() {
        let e = RunConfig::parse("n = 4\nfoo = 1\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("line 2")));
    }

    #[test]
    fn bad_values_rejected() {
        for text in [
            "n = four",
            "T_i = -1",
            "axis = tau\ngrid_start = 1",
            "grid_points = 3",
            "[bogus]",
            "g = 1\ng = 2",
            "solver = magic",
            "axis = tau\ngrid = 1, 2\ngrid_points = 2",
        ] {
            let e = RunConfig::parse(text).unwrap_err();
            assert!(e.is_config(), "{text}: {e}");
        }
    }

    #[test]
    fn explicit_grid_list() {
        let c = RunConfig::parse("axis = T_i\ngrid = 0.5, 1, 2\n").unwrap();
        assert_eq!(c.grid.unwrap().values, vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn empty_config_is_default_point() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.sweep_spec().grid, vec![1.0]);
    }
}
