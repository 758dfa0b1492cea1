//! Parameter sweeps with shared decomposition caches.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{build_hamiltonian, diagonalize, ChainParams, SpectralDecomposition, DEFAULT_MAX_SITES};
use crate::dynamics::{
    adiabatic_propagator, adiabatic_state_from_map, evolve_propagator, evolve_state, AdiabaticMap, AdiabaticOutcome,
    EvolutionConfig, Propagator, RampProtocol,
};
use crate::error::{Error, Result};
use crate::fermion::{integrable_friction, IntegrableReport};
use crate::observables::{friction_report_with_identities, two_level_friction, FrictionReport, IdentityResiduals};
use crate::thermal::{gibbs_state, DensityMatrix, PopulationDistribution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Propagators are cached only up to this dimension (16 MiB each at 1024).
const PROPAGATOR_CACHE_MAX_DIM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "T_i")]
    InitialTemperature,
    #[serde(rename = "dh")]
    DeltaH,
    #[serde(rename = "h_i")]
    InitialField,
    #[serde(rename = "L")]
    Longitudinal,
    #[serde(rename = "n")]
    Sites,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Tau,
        Axis::InitialTemperature,
        Axis::DeltaH,
        Axis::InitialField,
        Axis::Longitudinal,
        Axis::Sites,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Tau => "tau",
            Axis::InitialTemperature => "T_i",
            Axis::DeltaH => "dh",
            Axis::InitialField => "h_i",
            Axis::Longitudinal => "L",
            Axis::Sites => "n",
        }
    }

    pub fn from_name(name: &str) -> Option<Axis> {
        Axis::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Exact,
    FreeFermion,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::FreeFermion => "free-fermion",
        }
    }
}

/// Coupling rule applied after the axis value is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Hold `dh / (g^2 tau)` at this value: `dh` follows `tau`, except on a
    /// `dh` axis where `tau` follows `dh`.
    FixedDriveRate(f64),
}

/// Everything that defines one parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointSpec {
    pub params: ChainParams,
    pub protocol: RampProtocol,
    pub t_i: f64,
    pub evolution: EvolutionConfig,
}

impl PointSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.protocol.validate()?;
        self.evolution.validate()?;
        if !(self.t_i > 0.0) {
            return Err(Error::domain(format!("T_i must be positive, got {}", self.t_i)));
        }
        Ok(())
    }

    pub fn with_axis(&self, axis: Axis, value: f64, constraint: Option<Constraint>) -> Result<PointSpec> {
        let mut p = *self;
        match axis {
            Axis::Tau => p.protocol.duration = value,
            Axis::InitialTemperature => p.t_i = value,
            Axis::DeltaH => p.protocol.delta_h = value,
            Axis::InitialField => p.protocol.h_initial = value,
            Axis::Longitudinal => p.params.longitudinal = value,
            Axis::Sites => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::config(format!("site count must be a positive integer, got {value}")));
                }
                p.params.n_sites = value as usize;
            }
        }
        if let Some(Constraint::FixedDriveRate(rate)) = constraint {
            let g2 = p.params.coupling * p.params.coupling;
            if axis == Axis::DeltaH {
                p.protocol.duration = p.protocol.delta_h / (rate * g2);
            } else {
                p.protocol.delta_h = rate * g2 * p.protocol.duration;
            }
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub base: PointSpec,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub solver: Solver,
    pub constraint: Option<Constraint>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("sweep grid is empty"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep grid has non-finite values"));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::config("sweep grid must be strictly monotone"));
        }
        if let Some(Constraint::FixedDriveRate(rate)) = self.constraint {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::config("drive-rate constraint must be positive"));
            }
        }
        for &v in &self.grid {
            let p = self.base.with_axis(self.axis, v, self.constraint)?;
            if self.solver == Solver::FreeFermion && p.params.longitudinal != 0.0 {
                return Err(Error::config("free-fermion solver needs L = 0"));
            }
            if self.solver == Solver::Exact {
                p.params.dense_dim(DEFAULT_MAX_SITES)?;
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the spec and the crate version.
    pub fn config_hash(&self) -> String {
        content_hash(self)
    }
}

/// Hex SHA-256 over the JSON form of `value` followed by a NUL and the crate
/// version.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("spec types serialize");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hasher.update(b"\0");
    hasher.update(VERSION.as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Numerical side information for one exact point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub unitarity_deviation: f64,
    pub step_dt: f64,
    pub adiabatic_min_weight: f64,
    pub transport_projection_tv: f64,
    pub projected_entropy_excess: f64,
    /// Friction carried by the ground and first excited levels alone.
    pub two_level_friction: f64,
    pub identities: IdentityResiduals,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointResult {
    pub point: PointSpec,
    pub report: FrictionReport,
    /// Exact solver only.
    pub diagnostics: Option<PointDiagnostics>,
    /// Free-fermion solver only: `sum_j T_A^j dS_d^j`.
    pub sum_mode_t_a_delta_s_d: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    /// Per-row failures are kept as their message instead of aborting the sweep.
    pub outcome: std::result::Result<PointResult, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub solver: Solver,
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
    pub version: &'static str,
}

/// All states of one exact point.
pub struct PointStates {
    pub spec_i: Arc<SpectralDecomposition>,
    pub spec_f: Arc<SpectralDecomposition>,
    pub rho_i: DensityMatrix,
    pub rho_tau: DensityMatrix,
    pub propagator: Arc<Propagator>,
    pub adiabatic: AdiabaticOutcome,
}

fn bits(x: f64) -> u64 {
    x.to_bits()
}

type SpecKey = (usize, u64, u64, u64);
type MapKey = (usize, u64, u64, u64, u64, u64, u64, u64);
type PropKey = (usize, u64, u64, u64, u64, u64, Option<u64>, u64, u32);

/// Sweep runner. Caches decompositions, adiabatic maps and small propagators;
/// every cached value is a pure function of its key, so results do not depend
/// on which worker filled the cache.
pub struct Engine {
    workers: usize,
    spectra: RwLock<HashMap<SpecKey, Arc<SpectralDecomposition>>>,
    maps: RwLock<HashMap<MapKey, Arc<AdiabaticMap>>>,
    propagators: RwLock<HashMap<PropKey, Arc<Propagator>>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(0)
    }
}

fn cached<K: std::hash::Hash + Eq + Copy, V>(
    cache: &RwLock<HashMap<K, Arc<V>>>,
    key: K,
    build: impl FnOnce() -> Result<V>,
) -> Result<Arc<V>> {
    if let Some(v) = cache.read().expect("cache lock").get(&key) {
        return Ok(Arc::clone(v));
    }
    let value = Arc::new(build()?);
    let mut w = cache.write().expect("cache lock");
    Ok(Arc::clone(w.entry(key).or_insert(value)))
}

impl Engine {
    /// `workers = 0` uses rayon's default pool size.
    pub fn new(workers: usize) -> Self {
        Engine {
            workers,
            spectra: RwLock::new(HashMap::new()),
            maps: RwLock::new(HashMap::new()),
            propagators: RwLock::new(HashMap::new()),
        }
    }

    pub fn spectrum(&self, params: &ChainParams, h: f64) -> Result<Arc<SpectralDecomposition>> {
        let key = (params.n_sites, bits(params.coupling), bits(params.longitudinal), bits(h));
        cached(&self.spectra, key, || diagonalize(&build_hamiltonian(params, h)?))
    }

    pub fn adiabatic_map(
        &self,
        params: &ChainParams,
        protocol: &RampProtocol,
        cfg: &EvolutionConfig,
    ) -> Result<Arc<AdiabaticMap>> {
        let key = (
            params.n_sites,
            bits(params.coupling),
            bits(params.longitudinal),
            bits(protocol.h_initial),
            bits(protocol.delta_h),
            bits(cfg.adiabatic_tau),
            bits(cfg.adiabatic_step),
            bits(cfg.unitarity_tol),
        );
        cached(&self.maps, key, || {
            let spec_i = self.spectrum(params, protocol.h_initial)?;
            let spec_f = self.spectrum(params, protocol.h_final())?;
            let u = adiabatic_propagator(params, protocol, cfg)?;
            AdiabaticMap::new(&spec_i, &spec_f, &u)
        })
    }

    pub fn propagator(&self, params: &ChainParams, protocol: &RampProtocol, cfg: &EvolutionConfig) -> Result<Arc<Propagator>> {
        let dim = params.dense_dim(DEFAULT_MAX_SITES)?;
        if dim > PROPAGATOR_CACHE_MAX_DIM {
            return Ok(Arc::new(evolve_propagator(params, protocol, cfg)?));
        }
        let key = (
            params.n_sites,
            bits(params.coupling),
            bits(params.longitudinal),
            bits(protocol.h_initial),
            bits(protocol.delta_h),
            bits(protocol.duration),
            cfg.step_dt.map(bits),
            bits(cfg.unitarity_tol),
            cfg.max_halvings,
        );
        cached(&self.propagators, key, || evolve_propagator(params, protocol, cfg))
    }

    pub fn states(&self, point: &PointSpec) -> Result<PointStates> {
        point.validate()?;
        let (params, protocol, cfg) = (&point.params, &point.protocol, &point.evolution);
        let spec_i = self.spectrum(params, protocol.h_initial)?;
        let spec_f = self.spectrum(params, protocol.h_final())?;
        let rho_i = gibbs_state(&spec_i, point.t_i)?;
        let propagator = self.propagator(params, protocol, cfg)?;
        let rho_tau = evolve_state(&rho_i, &propagator)?;
        let map = self.adiabatic_map(params, protocol, cfg)?;
        let adiabatic = adiabatic_state_from_map(&rho_i, &spec_i, &spec_f, &map, cfg.adiabatic_method)?;
        Ok(PointStates {
            spec_i,
            spec_f,
            rho_i,
            rho_tau,
            propagator,
            adiabatic,
        })
    }

    pub fn evaluate(&self, point: &PointSpec, solver: Solver) -> Result<PointResult> {
        match solver {
            Solver::Exact => {
                let s = self.states(point)?;
                let (report, identities) =
                    friction_report_with_identities(&s.rho_i, &s.spec_i, &s.rho_tau, &s.adiabatic.state, &s.spec_f)?;
                let pops = |rho: &DensityMatrix| PopulationDistribution::new(s.spec_f.populations_of(rho.matrix()));
                let two_level = two_level_friction(&pops(&s.rho_tau)?, &pops(&s.adiabatic.state)?, &s.spec_f)?;
                Ok(PointResult {
                    point: *point,
                    report,
                    diagnostics: Some(PointDiagnostics {
                        unitarity_deviation: s.propagator.unitarity_deviation(),
                        step_dt: s.propagator.step_dt(),
                        adiabatic_min_weight: s.adiabatic.min_assignment_weight,
                        transport_projection_tv: s.adiabatic.transport_projection_tv,
                        projected_entropy_excess: s.adiabatic.projected_entropy_excess,
                        two_level_friction: two_level,
                        identities,
                    }),
                    sum_mode_t_a_delta_s_d: None,
                })
            }
            Solver::FreeFermion => {
                point.validate()?;
                let IntegrableReport {
                    total,
                    sum_mode_t_a_delta_s_d,
                    ..
                } = integrable_friction(&point.params, &point.protocol, point.t_i, &point.evolution)?;
                Ok(PointResult {
                    point: *point,
                    report: total,
                    diagnostics: None,
                    sum_mode_t_a_delta_s_d: Some(sum_mode_t_a_delta_s_d),
                })
            }
        }
    }

    /// Runs every grid point; rows come back in grid order whatever the
    /// worker count.
    pub fn run(&self, spec: &SweepSpec) -> Result<SweepResult> {
        spec.validate()?;
        let eval = |&v: &f64| SweepRow {
            axis_value: v,
            outcome: spec
                .base
                .with_axis(spec.axis, v, spec.constraint)
                .and_then(|p| self.evaluate(&p, spec.solver))
                .map_err(|e| e.to_string()),
        };
        let rows: Vec<SweepRow> = if self.workers == 1 {
            spec.grid.iter().map(eval).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::config(format!("worker pool: {e}")))?;
            pool.install(|| spec.grid.par_iter().map(eval).collect())
        };
        Ok(SweepResult {
            axis: spec.axis,
            solver: spec.solver,
            rows,
            config_hash: spec.config_hash(),
            version: VERSION,
        })
    }
}

/// `points` values from `start` to `stop`, inclusive, evenly spaced in the
/// value or in its logarithm.
pub fn grid(start: f64, stop: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::config("grid needs at least one point"));
    }
    if log && !(start > 0.0 && stop > 0.0) {
        return Err(Error::config("log grid needs positive end points"));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = if log { (start.ln(), stop.ln()) } else { (start, stop) };
    Ok((0..points)
        .map(|k| {
            if k == 0 {
                return start;
            }
            if k == points - 1 {
                return stop;
            }
            let x = a + (b - a) * k as f64 / (points - 1) as f64;
            if log {
                x.exp()
            } else {
                x
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PointSpec {
        PointSpec {
            params: ChainParams::new(3, 1.0, 1.0).unwrap(),
            protocol: RampProtocol::linear(1.5, 2.0, 1.0).unwrap(),
            t_i: 2.0,
            evolution: EvolutionConfig {
                adiabatic_tau: 20.0,
                ..Default::default()
            },
        }
    }

    #[test]
    fn grid_end_points_exact() {
        let g = grid(0.05, 5.0, 7, true).unwrap();
        assert_eq!(g[0], 0.05);
        assert_eq!(g[6], 5.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(grid(1.0, 2.0, 3, false).unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(grid(0.0, 1.0, 3, true).is_err());
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let spec = SweepSpec {
            base: base(),
            axis: Axis::Tau,
            grid: vec![1.0, 0.5, 2.0],
            solver: Solver::Exact,
            constraint: None,
        };
        assert!(spec.validate().unwrap_err().is_config());
    }

    #[test]
    fn drive_rate_constraint() {
        let p = base()
            .with_axis(Axis::Tau, 4.0, Some(Constraint::FixedDriveRate(0.5)))
            .unwrap();
        assert_eq!(p.protocol.delta_h, 2.0);
        let q = base()
            .with_axis(Axis::DeltaH, 3.0, Some(Constraint::FixedDriveRate(0.5)))
            .unwrap();
        assert_eq!(q.protocol.duration, 6.0);
    }

    #[test]
    fn singleton_sweep_matches_direct_evaluation() {
        let spec = SweepSpec {
            base: base(),
            axis: Axis::Tau,
            grid: vec![1.0],
            solver: Solver::Exact,
            constraint: None,
        };
        let r = Engine::new(1).run(&spec).unwrap();
        let direct = Engine::new(1).evaluate(&base(), Solver::Exact).unwrap();
        assert_eq!(r.rows[0].outcome.as_ref().unwrap(), &direct);
    }

    #[test]
    fn worker_count_does_not_change_rows() {
        let spec = SweepSpec {
            base: base(),
            axis: Axis::InitialTemperature,
            grid: vec![0.5, 1.0, 2.0, 4.0],
            solver: Solver::Exact,
            constraint: None,
        };
        let a = Engine::new(1).run(&spec).unwrap();
        let b = Engine::new(3).run(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let mut spec = SweepSpec {
            base: base(),
            axis: Axis::Tau,
            grid: vec![1.0, 2.0],
            solver: Solver::Exact,
            constraint: None,
        };
        let h = spec.config_hash();
        assert_eq!(h, spec.clone().config_hash());
        assert_eq!(h.len(), 64);
        spec.grid[1] = 2.5;
        assert_ne!(h, spec.config_hash());
    }

    #[test]
    fn row_errors_are_captured() {
        let spec = SweepSpec {
            base: PointSpec {
                evolution: EvolutionConfig {
                    step_dt: Some(0.5),
                    max_halvings: 0,
                    adiabatic_tau: 20.0,
                    ..Default::default()
                },
                ..base()
            },
            axis: Axis::Tau,
            grid: vec![0.0, 3.0],
            solver: Solver::Exact,
            constraint: None,
        };
        let r = Engine::new(1).run(&spec).unwrap();
        assert!(r.rows[0].outcome.is_ok());
        assert!(r.rows[1].outcome.as_ref().unwrap_err().contains("unitarity"));
    }
}
