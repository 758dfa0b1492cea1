//! Recipes that regenerate the data behind each figure.
//!
//! A recipe is a list of sweeps, single points whose final-basis populations
//! are tabulated, and optionally one free-fermion mode table, plus a plot
//! description referring to the CSV files by name.

use serde::Serialize;

use crate::chain::ChainParams;
use crate::dynamics::{EvolutionConfig, RampProtocol};
use crate::error::Result;
use crate::fermion::integrable_friction;
use crate::report::{
    modes_csv, plot_axis, populations_csv, series, styled, sweep_csv, Mark, Marker, Panel, PlotSpec, PopulationTable,
    Scale, Series, PLOT_FORMAT, UNITS,
};
use crate::sweep::{content_hash, grid, Axis, Constraint, Engine, PointSpec, Solver, SweepSpec, VERSION};
use crate::observables::thermal_reference;
use crate::thermal::PopulationDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FigureId {
    #[serde(rename = "fig2a")]
    Fig2a,
    #[serde(rename = "fig2b")]
    Fig2b,
    #[serde(rename = "fig2c")]
    Fig2c,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig4a")]
    Fig4a,
    #[serde(rename = "fig4b")]
    Fig4b,
    #[serde(rename = "fig4c")]
    Fig4c,
    #[serde(rename = "fig5a")]
    Fig5a,
    #[serde(rename = "fig5b")]
    Fig5b,
}

impl FigureId {
    pub const ALL: [FigureId; 9] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig2c,
        FigureId::Fig3,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig4c,
        FigureId::Fig5a,
        FigureId::Fig5b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig2c => "fig2c",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig4c => "fig4c",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
        }
    }

    pub fn from_name(name: &str) -> Option<FigureId> {
        FigureId::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Grid resolution of the duration and temperature sweeps.
pub const SWEEP_POINTS: usize = 60;

/// Where `|W_fric - T_A dS_d| / W_fric` stays below 5% for all larger values.
pub const FIG2A_THRESHOLD_TAU: f64 = 0.68;
pub const FIG2B_THRESHOLD_T: f64 = 1.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedSweep {
    pub file: String,
    pub spec: SweepSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedPoint {
    pub file: String,
    pub point: PointSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureRecipe {
    pub id: FigureId,
    pub sweeps: Vec<NamedSweep>,
    pub populations: Vec<NamedPoint>,
    pub modes: Option<NamedPoint>,
    #[serde(skip)]
    pub plot: PlotTemplate,
}

/// Plot description without the provenance fields, filled in at run time.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlotTemplate {
    pub title: String,
    pub panels: Vec<Panel>,
}

pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct FigureOutput {
    pub files: Vec<OutputFile>,
    pub config_hash: String,
    /// Messages of sweep rows that failed; their rows are still written.
    pub failures: Vec<String>,
}

/// Point of the reference chain: N=8, g=1, h_i=1.5.
pub fn reference_point(longitudinal: f64, t_i: f64, delta_h: f64, tau: f64) -> PointSpec {
    PointSpec {
        params: ChainParams {
            n_sites: 8,
            coupling: 1.0,
            longitudinal,
        },
        protocol: RampProtocol::linear(1.5, delta_h, tau).expect("reference protocol is valid"),
        t_i,
        evolution: EvolutionConfig::default(),
    }
}

fn sweep(file: &str, base: PointSpec, axis: Axis, grid: Vec<f64>, solver: Solver) -> NamedSweep {
    NamedSweep {
        file: file.into(),
        spec: SweepSpec {
            base,
            axis,
            grid,
            solver,
            constraint: None,
        },
    }
}

fn log_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    grid(start, stop, points, true).expect("static grid")
}

fn lin_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    grid(start, stop, points, false).expect("static grid")
}

fn marker(value: f64, label: &str) -> Marker {
    Marker {
        axis: "x",
        value,
        label: label.into(),
    }
}

fn from(s: Series, data: &str) -> Series {
    Series {
        data: Some(data.into()),
        ..s
    }
}

fn friction_panel(name: &str, data: &str, x: &str, x_label: &str, scale: Scale, markers: Vec<Marker>) -> Panel {
    Panel {
        name: name.into(),
        data: data.into(),
        x: plot_axis(x, x_label, scale),
        y_label: "frictional work [g]".into(),
        y_scale: Scale::Linear,
        series: vec![
            styled("W_fric", "W_fric", "solid"),
            styled("TA_dSd", "T_A dS_d", "dashdot"),
            styled("TA_D_tau_A", "T_A D(rho_tau||rho_A)", "dashed"),
        ],
        markers,
    }
}

fn population_panels(label: &str, data: &str, with_tau: bool) -> Vec<Panel> {
    let mut pops = Vec::new();
    if with_tau {
        pops.push(series("p_tau_diag", "rho_tau^diag", Mark::Points));
    }
    pops.push(styled("p_A", "rho_A", if with_tau { "solid" } else { "dots" }));
    pops.push(styled("p_TA", "thermal at T_A", if with_tau { "dashed" } else { "solid" }));
    let mut panels = vec![Panel {
        name: format!("{label} populations"),
        data: data.into(),
        x: plot_axis("E_f_minus_E0", "E_n^f - E_0^f [g]", Scale::Linear),
        y_label: "p_n".into(),
        y_scale: Scale::Log,
        series: pops,
        markers: vec![],
    }];
    if with_tau {
        panels.push(Panel {
            name: format!("{label} cumulative friction"),
            data: data.into(),
            x: plot_axis("E_f_minus_E0", "E_n^f - E_0^f [g]", Scale::Linear),
            y_label: "cumulative frictional work [g]".into(),
            y_scale: Scale::Linear,
            series: vec![styled("W_fric_cumulative", "w_fric^n", "solid")],
            markers: vec![],
        });
    }
    panels
}

impl FigureRecipe {
    pub fn new(id: FigureId) -> FigureRecipe {
        let mut r = FigureRecipe {
            id,
            sweeps: vec![],
            populations: vec![],
            modes: None,
            plot: PlotTemplate::default(),
        };
        let taus = || log_grid(0.05, 5.0, SWEEP_POINTS);
        match id {
            FigureId::Fig2a => {
                r.sweeps.push(sweep("fig2a.csv", reference_point(1.0, 3.0, 2.0, 1.0), Axis::Tau, taus(), Solver::Exact));
                r.plot.title = "Frictional work vs duration, N=8, L=g, T_i=3g, dh=2g".into();
                r.plot.panels.push(friction_panel(
                    "a",
                    "fig2a.csv",
                    "tau",
                    "tau [1/g]",
                    Scale::Log,
                    vec![marker(FIG2A_THRESHOLD_TAU, "5% threshold"), marker(1.75, "(i)")],
                ));
            }
            FigureId::Fig2b => {
                let temps = log_grid(0.2, 5.0, SWEEP_POINTS);
                r.sweeps.push(sweep("fig2b.csv", reference_point(1.0, 3.0, 1.0, 1.0), Axis::InitialTemperature, temps, Solver::Exact));
                r.plot.title = "Frictional work vs initial temperature, N=8, L=g, tau=1/g, dh=g".into();
                let mut panel = friction_panel(
                    "b",
                    "fig2b.csv",
                    "T_i",
                    "T_i [g]",
                    Scale::Log,
                    vec![marker(FIG2B_THRESHOLD_T, "5% threshold"), marker(0.5, "(iii)")],
                );
                panel.series.push(series("W_fric_two_level", "ground + first excited level", Mark::Points));
                r.plot.panels.push(panel);
            }
            FigureId::Fig2c => {
                let steps = lin_grid(0.25, 4.0, 16);
                for (file, rate) in [("fig2c.csv", 2.0), ("fig2c_inset.csv", 10.0)] {
                    let mut s = sweep(file, reference_point(1.0, 3.0, 2.0, 1.0), Axis::DeltaH, steps.clone(), Solver::Exact);
                    s.spec.constraint = Some(Constraint::FixedDriveRate(rate));
                    r.sweeps.push(s);
                }
                r.plot.title = "Frictional work vs field step at fixed dh/(g^2 tau), N=8, L=g, T_i=3g".into();
                r.plot.panels.push(friction_panel("main, dh/(g^2 tau)=2", "fig2c.csv", "dh", "dh [g]", Scale::Linear, vec![]));
                r.plot.panels.push(friction_panel(
                    "inset, dh/(g^2 tau)=10",
                    "fig2c_inset.csv",
                    "dh",
                    "dh [g]",
                    Scale::Linear,
                    vec![],
                ));
            }
            FigureId::Fig3 => {
                r.plot.title = "Final-basis populations and cumulative friction, N=8, L=g".into();
                for (label, file, point) in [
                    ("(i)", "fig3_i.csv", reference_point(1.0, 3.0, 2.0, 1.75)),
                    ("(ii)", "fig3_ii.csv", reference_point(1.0, 3.0, 2.0, 0.0)),
                    ("(iii)", "fig3_iii.csv", reference_point(1.0, 0.5, 1.0, 1.0)),
                ] {
                    r.populations.push(NamedPoint {
                        file: file.into(),
                        point,
                    });
                    r.plot.panels.extend(population_panels(label, file, true));
                }
            }
            FigureId::Fig4a => {
                let base = reference_point(0.0, 3.0, 2.0, 1.0);
                r.sweeps.push(sweep("fig4a_exact.csv", base, Axis::Tau, taus(), Solver::Exact));
                r.sweeps.push(sweep("fig4a_free_fermion.csv", base, Axis::Tau, taus(), Solver::FreeFermion));
                r.plot.title = "Integrable chain (L=0, N=8), T_i=3g, dh=2g".into();
                r.plot.panels.push(Panel {
                    name: "a".into(),
                    data: "fig4a_exact.csv".into(),
                    x: plot_axis("tau", "tau [1/g]", Scale::Log),
                    y_label: "frictional work [g]".into(),
                    y_scale: Scale::Linear,
                    series: vec![
                        styled("W_fric", "W_fric", "solid"),
                        styled("TA_dSd", "T_A dS_d", "dashdot"),
                        from(styled("sum_TAj_dSdj", "sum_j T_A^j dS_d^j", "dotted"), "fig4a_free_fermion.csv"),
                    ],
                    markers: vec![],
                });
            }
            FigureId::Fig4b => {
                r.plot.title = "Adiabatic vs thermal populations, N=8, T_i=3g, dh=2g, tau=1/g".into();
                for (label, file, l) in [("(i) L=0", "fig4b_i.csv", 0.0), ("(ii) L=g", "fig4b_ii.csv", 1.0)] {
                    r.populations.push(NamedPoint {
                        file: file.into(),
                        point: reference_point(l, 3.0, 2.0, 1.0),
                    });
                    r.plot.panels.extend(population_panels(label, file, false));
                }
            }
            FigureId::Fig4c => {
                let mut point = reference_point(0.0, 3.0, 2.0, 1.0);
                point.params.n_sites = 5000;
                r.modes = Some(NamedPoint {
                    file: "fig4c.csv".into(),
                    point,
                });
                r.plot.title = "Per-mode effective temperature, N=5000, L=0".into();
                r.plot.panels.push(Panel {
                    name: "c".into(),
                    data: "fig4c.csv".into(),
                    x: plot_axis("omega_f", "omega_j^f [g]", Scale::Linear),
                    y_label: "T_A^j [g]".into(),
                    y_scale: Scale::Linear,
                    series: vec![Series {
                        color: Some("W_fric_j".into()),
                        ..series("TA_j", "T_A^j", Mark::Scatter)
                    }],
                    markers: vec![],
                });
            }
            FigureId::Fig5a => {
                r.plot.title = "Work vs duration, T_i=2g, h_i=1.5g, dh=2g".into();
                let mut panel = Panel {
                    name: "a".into(),
                    data: "fig5a_L0.csv".into(),
                    x: plot_axis("tau", "tau [1/g]", Scale::Log),
                    y_label: "work [g]".into(),
                    y_scale: Scale::Linear,
                    series: vec![],
                    markers: vec![],
                };
                for (file, l, label) in [("fig5a_L0.csv", 0.0, "L=0"), ("fig5a_L1.csv", 1.0, "L=g")] {
                    r.sweeps.push(sweep(file, reference_point(l, 2.0, 2.0, 1.0), Axis::Tau, taus(), Solver::Exact));
                    panel.series.push(from(styled("W_tau", &format!("W_tau {label}"), "solid"), file));
                    panel.series.push(from(styled("W_opt", &format!("W_opt {label}"), "dotted"), file));
                }
                r.plot.panels.push(panel);
            }
            FigureId::Fig5b => {
                r.plot.title = "Work vs longitudinal field, T_i=2g, h_i=1.5g, dh=2g".into();
                let fields = lin_grid(0.0, 2.0, 11);
                let mut panel = Panel {
                    name: "b".into(),
                    data: "fig5b_tau0.1.csv".into(),
                    x: plot_axis("L", "L [g]", Scale::Linear),
                    y_label: "work [g]".into(),
                    y_scale: Scale::Linear,
                    series: vec![],
                    markers: vec![],
                };
                for tau in [0.1, 1.0, 5.0] {
                    let file = format!("fig5b_tau{tau}.csv");
                    r.sweeps.push(sweep(&file, reference_point(0.0, 2.0, 2.0, tau), Axis::Longitudinal, fields.clone(), Solver::Exact));
                    panel.series.push(from(styled("W_tau", &format!("W_tau, tau={tau}/g"), "solid"), &file));
                }
                panel.series.push(from(styled("W_opt", "W_opt", "dotted"), "fig5b_tau0.1.csv"));
                r.plot.panels.push(panel);
            }
        }
        r
    }

    pub fn config_hash(&self) -> String {
        content_hash(self)
    }

    pub fn plot(&self) -> PlotSpec {
        PlotSpec {
            format: PLOT_FORMAT,
            figure: self.id.name().into(),
            title: self.plot.title.clone(),
            units: UNITS,
            config_hash: self.config_hash(),
            version: VERSION.into(),
            panels: self.plot.panels.clone(),
        }
    }

    /// Computes every table of the recipe in memory. Sweep rows that fail are
    /// kept in their tables and listed in `failures`; a failing population or
    /// mode point aborts the recipe.
    pub fn run(&self, engine: &Engine) -> Result<FigureOutput> {
        let mut files = Vec::new();
        let mut failures = Vec::new();
        for s in &self.sweeps {
            let result = engine.run(&s.spec)?;
            for row in &result.rows {
                if let Err(msg) = &row.outcome {
                    failures.push(format!("{} at {}={}: {msg}", s.file, s.spec.axis.name(), row.axis_value));
                }
            }
            files.push(OutputFile {
                name: s.file.clone(),
                bytes: sweep_csv(&result)?,
            });
        }
        for p in &self.populations {
            files.push(OutputFile {
                name: p.file.clone(),
                bytes: population_table(engine, &p.point)?,
            });
        }
        if let Some(m) = &self.modes {
            let report = integrable_friction(&m.point.params, &m.point.protocol, m.point.t_i, &m.point.evolution)?;
            files.push(OutputFile {
                name: m.file.clone(),
                bytes: modes_csv(&report, &content_hash(&m.point), VERSION)?,
            });
        }
        files.push(OutputFile {
            name: format!("{}.plot.json", self.id.name()),
            bytes: self.plot().to_json()?,
        });
        Ok(FigureOutput {
            files,
            config_hash: self.config_hash(),
            failures,
        })
    }
}

/// Final-basis populations of one exact point as CSV bytes.
pub fn population_table(engine: &Engine, point: &PointSpec) -> Result<Vec<u8>> {
    let s = engine.states(point)?;
    let report = engine.evaluate(point, Solver::Exact)?.report;
    let tau = PopulationDistribution::new(s.spec_f.populations_of(s.rho_tau.matrix()))?;
    let adiabatic = PopulationDistribution::new(s.spec_f.populations_of(s.adiabatic.state.matrix()))?;
    let reference = thermal_reference(&s.spec_f, report.t_a)?;
    let thermal = PopulationDistribution::new(s.spec_f.populations_of(reference.matrix()))?;
    populations_csv(
        &PopulationTable {
            spec_f: &s.spec_f,
            tau: &tau,
            adiabatic: &adiabatic,
            thermal: &thermal,
        },
        &content_hash(point),
        VERSION,
    )
}
