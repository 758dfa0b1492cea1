//! CSV tables and declarative plot descriptions.
//!
//! Every float is written with 12 significant digits; non-finite values use
//! the literal tokens `inf`, `-inf` and `nan`. Output bytes depend only on the
//! inputs, so repeated runs can be compared with `cmp`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::chain::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::fermion::IntegrableReport;
use crate::observables::cumulative_friction;
use crate::sweep::{PointResult, SweepResult};
use crate::thermal::PopulationDistribution;

pub const UNITS: &str = "energy g, time 1/g, temperature g, entropy nats";

/// Columns shared by every sweep table, after the axis column.
pub const SWEEP_COLUMNS: [&str; 10] = [
    "W_tau", "W_A", "W_fric", "TA", "dSd", "TA_dSd", "D_tau_A", "D_diag_A", "delta", "W_opt",
];

/// Diagnostics appended after [`SWEEP_COLUMNS`].
pub const EXTRA_COLUMNS: [&str; 10] = [
    "TA_D_tau_A",
    "F_diag_TA",
    "F_A_TA",
    "T_mean",
    "W_fric_two_level",
    "sum_TAj_dSdj",
    "identity_residual",
    "unitarity_deviation",
    "flag",
    "message",
];

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn comment_line(config_hash: &str, version: &str) -> String {
    format!("# units: {UNITS}; config_hash={config_hash}; version={version}\n")
}

fn csv_bytes(comment: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut out = comment.as_bytes().to_vec();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        let fail = |e: csv::Error| Error::io("<csv buffer>", e.into());
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        w.flush().map_err(|e| Error::io("<buffer>", e))?;
    }
    Ok(out)
}

fn point_cells(p: &PointResult) -> Vec<String> {
    let r = &p.report;
    let mut cells: Vec<String> = [
        r.w_tau,
        r.w_a,
        r.w_fric,
        r.t_a,
        r.delta_s_d,
        r.t_a_delta_s_d,
        r.d_tau_a,
        r.d_diag_a,
        r.delta,
        r.w_opt,
        r.t_a_d_tau_a,
        r.f_diag_ta,
        r.f_a_ta,
        r.t_mean_energy,
    ]
    .into_iter()
    .map(format_float)
    .collect();
    let d = p.diagnostics.as_ref();
    cells.push(opt(d.map(|d| d.two_level_friction)));
    cells.push(opt(p.sum_mode_t_a_delta_s_d));
    cells.push(opt(d.map(|d| d.identities.max_abs())));
    cells.push(opt(d.map(|d| d.unitarity_deviation)));
    let non_finite = [r.w_fric, r.d_tau_a, r.d_diag_a, r.delta, r.t_a].iter().any(|x| x.is_nan());
    cells.push(if r.flagged || non_finite { "1" } else { "0" }.into());
    cells.push(String::new());
    cells
}

/// The sweep table: comment line, header, one row per grid point. Failed
/// points keep their axis value, empty numeric cells, `flag=error` and the
/// error text.
pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let header: Vec<&str> = std::iter::once(result.axis.name())
        .chain(SWEEP_COLUMNS)
        .chain(EXTRA_COLUMNS)
        .collect();
    let width = header.len();
    let rows = result.rows.iter().map(|row| {
        let mut cells = vec![format_float(row.axis_value)];
        match &row.outcome {
            Ok(p) => cells.extend(point_cells(p)),
            Err(msg) => {
                cells.resize(width - 2, String::new());
                cells.push("error".into());
                cells.push(msg.clone());
            }
        }
        cells
    });
    csv_bytes(&comment_line(&result.config_hash, result.version), &header, rows)
}

/// Final-basis populations of one point: `rho_tau^diag`, `rho_A`, the thermal
/// reference at `T_A`, and the friction accumulated up to each level.
pub struct PopulationTable<'a> {
    pub spec_f: &'a SpectralDecomposition,
    pub tau: &'a PopulationDistribution,
    pub adiabatic: &'a PopulationDistribution,
    pub thermal: &'a PopulationDistribution,
}

pub fn populations_csv(table: &PopulationTable<'_>, config_hash: &str, version: &str) -> Result<Vec<u8>> {
    let cumulative = cumulative_friction(table.tau, table.adiabatic, table.spec_f)?;
    let e0 = table.spec_f.ground_energy();
    let header = ["n", "E_f", "E_f_minus_E0", "p_tau_diag", "p_A", "p_TA", "W_fric_cumulative"];
    let rows = (0..table.spec_f.dim()).map(|k| {
        let e = table.spec_f.eigenvalues()[k];
        let mut cells = vec![k.to_string()];
        cells.extend(
            [
                e,
                e - e0,
                table.tau.as_slice()[k],
                table.adiabatic.as_slice()[k],
                table.thermal.as_slice()[k],
                cumulative[k],
            ]
            .map(format_float),
        );
        cells
    });
    csv_bytes(&comment_line(config_hash, version), &header, rows)
}

/// Per-mode table of the free-fermion solver.
pub fn modes_csv(report: &IntegrableReport, config_hash: &str, version: &str) -> Result<Vec<u8>> {
    let header = ["j", "theta", "omega_i", "omega_f", "TA_j", "W_fric_j", "dSd_j", "D_j", "excitation"];
    let rows = report.modes.iter().map(|m| {
        let mut cells = vec![m.index.to_string()];
        cells.extend(
            [m.theta, m.omega_i, m.omega_f, m.t_a_j, m.w_fric_j, m.delta_s_d_j, m.d_j, m.excitation].map(format_float),
        );
        cells
    });
    csv_bytes(&comment_line(config_hash, version), &header, rows)
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Line,
    Points,
    Bars,
    Scatter,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotAxis {
    pub column: String,
    pub label: String,
    pub scale: Scale,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub column: String,
    pub label: String,
    pub mark: Mark,
    /// CSV file for this series when it differs from the panel's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
    /// Column used to color scatter points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

/// A reference line at a fixed x (or y) value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Marker {
    pub axis: &'static str,
    pub value: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Panel {
    pub name: String,
    /// CSV file name relative to the plot file.
    pub data: String,
    pub x: PlotAxis,
    pub y_label: String,
    pub y_scale: Scale,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotSpec {
    pub format: &'static str,
    pub figure: String,
    pub title: String,
    pub units: &'static str,
    pub config_hash: String,
    pub version: String,
    pub panels: Vec<Panel>,
}

pub const PLOT_FORMAT: &str = "frictionwork-plot/1";

impl PlotSpec {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self).map_err(|e| Error::config(format!("plot serialization: {e}")))?;
        v.push(b'\n');
        Ok(v)
    }
}

pub fn series(column: &str, label: &str, mark: Mark) -> Series {
    Series {
        column: column.into(),
        label: label.into(),
        mark,
        data: None,
        style: None,
        color: None,
    }
}

pub fn styled(column: &str, label: &str, style: &str) -> Series {
    Series {
        style: Some(style.into()),
        ..series(column, label, Mark::Line)
    }
}

pub fn plot_axis(column: &str, label: &str, scale: Scale) -> PlotAxis {
    PlotAxis {
        column: column.into(),
        label: label.into(),
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{Axis, Solver, SweepRow};

    fn empty(rows: Vec<SweepRow>) -> SweepResult {
        SweepResult {
            axis: Axis::Tau,
            solver: Solver::Exact,
            rows,
            config_hash: "abc".into(),
            version: "0.0.0",
        }
    }

    #[test]
    fn float_tokens() {
        assert_eq!(format_float(1.0), "1.00000000000e0");
        assert_eq!(format_float(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let text = String::from_utf8(sweep_csv(&empty(vec![])).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# units: energy g"));
        assert!(lines[0].contains("config_hash=abc"));
        assert!(lines[1].starts_with("tau,W_tau,W_A,W_fric,TA,dSd,TA_dSd,D_tau_A,D_diag_A,delta,W_opt,"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn failed_row_keeps_shape() {
        let row = SweepRow {
            axis_value: 0.5,
            outcome: Err("numerical failure in x, y".into()),
        };
        let text = String::from_utf8(sweep_csv(&empty(vec![row])).unwrap()).unwrap();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("5.00000000000e-1,,"));
        assert!(last.ends_with(",error,\"numerical failure in x, y\""));
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header.split(',').count(), 1 + SWEEP_COLUMNS.len() + EXTRA_COLUMNS.len());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
