//! Unitary evolution under the ramped field `h(t)`.
//!
//! Finite-duration protocols are integrated with classical fourth-order
//! Runge-Kutta on the full propagator `dU/dt = -i H(t) U`. The adiabatic
//! reference uses the same ramp stretched to `adiabatic_tau`; because that run
//! is 100x longer it is propagated with a fourth-order commutator-free Magnus
//! scheme whose exponentials are Chebyshev expansions, which keeps it exactly
//! unitary at large steps.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::chain::{diagonalize, build_hamiltonian, ChainParams, IsingTerms, SpectralDecomposition, DEFAULT_MAX_SITES};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::thermal::{self, DensityMatrix, PopulationDistribution, StateRole};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub h_initial: f64,
    /// `h_f - h_i`.
    pub delta_h: f64,
    /// Duration; zero is a sudden quench.
    pub duration: f64,
    pub shape: RampShape,
}

impl RampProtocol {
    pub fn linear(h_initial: f64, delta_h: f64, duration: f64) -> Result<Self> {
        let p = RampProtocol {
            h_initial,
            delta_h,
            duration,
            shape: RampShape::Linear,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.h_initial.is_finite() || !self.delta_h.is_finite() {
            return Err(Error::domain("ramp fields must be finite"));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::domain(format!("ramp duration must be >= 0, got {}", self.duration)));
        }
        Ok(())
    }

    pub fn h_final(&self) -> f64 {
        self.h_initial + self.delta_h
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        RampProtocol { duration, ..*self }
    }

    /// `h(t)` without range checks; `t` is clamped into `[0, tau]`.
    pub(crate) fn field_at(&self, t: f64) -> f64 {
        if self.duration == 0.0 {
            return if t > 0.0 { self.h_final() } else { self.h_initial };
        }
        let s = (t / self.duration).clamp(0.0, 1.0);
        match self.shape {
            RampShape::Linear => {
                if s == 1.0 {
                    self.h_final()
                } else {
                    self.h_initial + s * self.delta_h
                }
            }
        }
    }
}

pub fn ramp_value(protocol: &RampProtocol, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= protocol.duration) {
        return Err(Error::domain(format!(
            "time {t} outside ramp interval [0, {}]",
            protocol.duration
        )));
    }
    Ok(protocol.field_at(t))
}

/// Which state stands in for the infinitely slow drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdiabaticMethod {
    /// Populations of `rho_i` moved level-to-level along the assignment that
    /// the long ramp realizes (maximum-weight matching of its transition
    /// probabilities). Entropy of `rho_i` is preserved exactly.
    Transport,
    /// The long-ramp state itself, dephased in the final eigenbasis.
    Projected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Runge-Kutta step; `None` selects `min(1e-3 / g, tau / 1000)`.
    pub step_dt: Option<f64>,
    /// Accepted `|U^dag U - I|_F / dim`.
    pub unitarity_tol: f64,
    pub adiabatic_tau: f64,
    /// Magnus step of the adiabatic reference run.
    pub adiabatic_step: f64,
    pub adiabatic_method: AdiabaticMethod,
    /// Step halvings tried before a unitarity failure is reported.
    pub max_halvings: u32,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            step_dt: None,
            unitarity_tol: 1e-9,
            adiabatic_tau: 100.0,
            adiabatic_step: 0.25,
            adiabatic_method: AdiabaticMethod::Transport,
            max_halvings: 4,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.step_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::domain(format!("step_dt must be positive, got {dt}")));
            }
        }
        if !(self.unitarity_tol >= 1e-12) {
            return Err(Error::domain("unitarity_tol must be at least 1e-12"));
        }
        if !(self.adiabatic_tau.is_finite() && self.adiabatic_tau > 0.0) {
            return Err(Error::domain("adiabatic_tau must be positive"));
        }
        if !(self.adiabatic_step.is_finite() && self.adiabatic_step > 0.0) {
            return Err(Error::domain("adiabatic_step must be positive"));
        }
        Ok(())
    }

    /// The Runge-Kutta step used for a ramp of `duration` at coupling `g`.
    pub fn rk_step(&self, duration: f64, coupling: f64) -> f64 {
        self.step_dt.unwrap_or_else(|| (1e-3 / coupling).min(duration / 1000.0))
    }
}

#[derive(Clone, Debug)]
pub struct Propagator {
    matrix: CMatrix,
    step_dt: f64,
    deviation: f64,
}

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Propagator {
            matrix: CMatrix::identity(dim, dim),
            step_dt: 0.0,
            deviation: 0.0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Step actually used (after any halvings); zero for the identity.
    pub fn step_dt(&self) -> f64 {
        self.step_dt
    }

    /// `|U^dag U - I|_F` of the integrator output, before the polar
    /// correction.
    pub fn unitarity_deviation(&self) -> f64 {
        self.deviation
    }
}

/// Row-major, interleaved re/im storage of a square complex matrix; rows are
/// contiguous so the bit-flip structure of `H` becomes row-wise axpys.
struct RowBuffer {
    dim: usize,
    data: Vec<f64>,
}

impl RowBuffer {
    fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; 2 * dim * dim];
        for r in 0..dim {
            data[r * 2 * dim + 2 * r] = 1.0;
        }
        RowBuffer { dim, data }
    }

    fn zeros(dim: usize) -> Self {
        RowBuffer {
            dim,
            data: vec![0.0; 2 * dim * dim],
        }
    }

    fn to_matrix(&self) -> CMatrix {
        let w = 2 * self.dim;
        CMatrix::from_fn(self.dim, self.dim, |r, c| {
            Complex64::new(self.data[r * w + 2 * c], self.data[r * w + 2 * c + 1])
        })
    }
}

/// `dst += a * (-i) * src` on interleaved storage.
fn axpy_minus_i(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
        d[0] += a * s[1];
        d[1] -= a * s[0];
    }
}

/// `dst = base + a * (-i) * src`.
fn set_plus_minus_i(dst: &mut [f64], base: &[f64], a: f64, src: &[f64]) {
    for ((d, b), s) in dst.chunks_exact_mut(2).zip(base.chunks_exact(2)).zip(src.chunks_exact(2)) {
        d[0] = b[0] + a * s[1];
        d[1] = b[1] - a * s[0];
    }
}

fn rk4_propagate(terms: &IsingTerms, protocol: &RampProtocol, n_steps: usize) -> CMatrix {
    let dim = terms.dim();
    let dt = protocol.duration / n_steps as f64;
    let mut y = RowBuffer::identity(dim);
    let mut acc = RowBuffer::zeros(dim);
    let mut stage = RowBuffer::zeros(dim);
    let mut hy = RowBuffer::zeros(dim);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let (h0, hm, h1) = (
            protocol.field_at(t),
            protocol.field_at(t + 0.5 * dt),
            protocol.field_at(t + dt),
        );
        acc.data.copy_from_slice(&y.data);

        terms.apply_rows(h0, &y.data, &mut hy.data);
        axpy_minus_i(&mut acc.data, dt / 6.0, &hy.data);
        set_plus_minus_i(&mut stage.data, &y.data, 0.5 * dt, &hy.data);

        terms.apply_rows(hm, &stage.data, &mut hy.data);
        axpy_minus_i(&mut acc.data, dt / 3.0, &hy.data);
        set_plus_minus_i(&mut stage.data, &y.data, 0.5 * dt, &hy.data);

        terms.apply_rows(hm, &stage.data, &mut hy.data);
        axpy_minus_i(&mut acc.data, dt / 3.0, &hy.data);
        set_plus_minus_i(&mut stage.data, &y.data, dt, &hy.data);

        terms.apply_rows(h1, &stage.data, &mut hy.data);
        axpy_minus_i(&mut acc.data, dt / 6.0, &hy.data);

        std::mem::swap(&mut y, &mut acc);
    }
    y.to_matrix()
}

/// Propagator of the ramp by fixed-step RK4, halving the step (up to
/// `cfg.max_halvings` times) while the unitarity check fails.
pub fn evolve_propagator(params: &ChainParams, protocol: &RampProtocol, cfg: &EvolutionConfig) -> Result<Propagator> {
    protocol.validate()?;
    cfg.validate()?;
    let terms = IsingTerms::new(params, DEFAULT_MAX_SITES)?;
    let dim = terms.dim();
    if protocol.duration == 0.0 {
        return Ok(Propagator::identity(dim));
    }
    let tol = cfg.unitarity_tol * dim as f64;
    let mut dt = cfg.rk_step(protocol.duration, params.coupling);
    let mut last = (f64::NAN, dt);
    for _ in 0..=cfg.max_halvings {
        let n_steps = ((protocol.duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let used = protocol.duration / n_steps as f64;
        let matrix = rk4_propagate(&terms, protocol, n_steps);
        let deviation = linalg::unitarity_deviation(&matrix);
        if deviation <= tol {
            return Ok(Propagator {
                matrix: nearest_unitary(&matrix)?,
                step_dt: used,
                deviation,
            });
        }
        last = (deviation, used);
        dt = 0.5 * used;
    }
    Err(Error::Unitarity {
        deviation: last.0,
        tolerance: tol,
        step_dt: last.1,
    })
}

/// Polar factor `U (U^dag U)^{-1/2}`. RK4 is slightly contractive on
/// oscillatory modes; the accepted propagator is mapped back onto the unitary
/// group so that `U rho U^dag` keeps the trace and spectrum of `rho`.
fn nearest_unitary(u: &CMatrix) -> Result<CMatrix> {
    let gram = u.adjoint() * u;
    let (values, vectors) = linalg::eigh_scaled(&gram, 1.0)?;
    let inv_sqrt: Vec<f64> = values.iter().map(|&v| 1.0 / v.sqrt()).collect();
    Ok(u * linalg::reconstruct(&vectors, &inv_sqrt))
}

/// `exp(-i s H(h)) Y` by Chebyshev expansion on the Gershgorin interval of `H`.
fn chebyshev_exp(terms: &IsingTerms, h: f64, s: f64, y: &mut RowBuffer, scratch: &mut [RowBuffer; 3]) {
    let off: f64 = terms.flips().iter().map(|(_, c)| c.abs()).sum();
    let (lo, hi) = terms
        .diagonal(h)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d), b.max(d)));
    let (lo, hi) = (lo - off, hi + off);
    let center = 0.5 * (lo + hi);
    let radius = (0.5 * (hi - lo)).max(1e-300);
    let x = s * radius;

    let mut coeffs: Vec<f64> = Vec::new();
    let mut k = 0;
    loop {
        let j = libm::jn(k as i32, x);
        coeffs.push(j);
        if k as f64 > x + 4.0 && j.abs() < 1e-17 {
            break;
        }
        k += 1;
        assert!(k < 10_000, "Chebyshev expansion did not terminate");
    }

    // (-i)^k J_k, times the phase of the spectral center, times 2 for k > 0
    let phase = Complex64::from_polar(1.0, -s * center);
    let weight = |k: usize| -> Complex64 {
        let ik = match k % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        let m = if k == 0 { 1.0 } else { 2.0 };
        phase * ik * (m * coeffs[k])
    };

    let [prev, cur, next] = scratch;
    let dim = y.dim;
    let scaled_apply = |src: &[f64], dst: &mut [f64]| {
        terms.apply_rows(h, src, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d - center * s) / radius;
        }
    };

    let mut out = vec![0.0; 2 * dim * dim];
    let add = |out: &mut [f64], w: Complex64, src: &[f64]| {
        for (o, s) in out.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
            o[0] += w.re * s[0] - w.im * s[1];
            o[1] += w.re * s[1] + w.im * s[0];
        }
    };
    prev.data.copy_from_slice(&y.data);
    add(&mut out, weight(0), &prev.data);
    if coeffs.len() > 1 {
        scaled_apply(&prev.data, &mut cur.data);
        add(&mut out, weight(1), &cur.data);
        for k in 2..coeffs.len() {
            scaled_apply(&cur.data, &mut next.data);
            for (n, p) in next.data.iter_mut().zip(&prev.data) {
                *n = 2.0 * *n - p;
            }
            add(&mut out, weight(k), &next.data);
            std::mem::swap(prev, cur);
            std::mem::swap(cur, next);
        }
    }
    y.data = out;
}

/// Fourth-order commutator-free Magnus propagation of the ramp; each step is
/// two exponentials at Gauss-node field combinations.
fn magnus_propagate(terms: &IsingTerms, protocol: &RampProtocol, n_steps: usize) -> CMatrix {
    let dim = terms.dim();
    let dt = protocol.duration / n_steps as f64;
    let r3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let (a1, a2) = (0.25 - r3 / 6.0, 0.25 + r3 / 6.0);
    let mut y = RowBuffer::identity(dim);
    let mut scratch = [RowBuffer::zeros(dim), RowBuffer::zeros(dim), RowBuffer::zeros(dim)];
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let (h1, h2) = (protocol.field_at(t + c1 * dt), protocol.field_at(t + c2 * dt));
        // a1 + a2 = 1/2, so each exponent is (dt/2) H at an effective field
        let first = 2.0 * (a2 * h1 + a1 * h2);
        let second = 2.0 * (a1 * h1 + a2 * h2);
        chebyshev_exp(terms, first, 0.5 * dt, &mut y, &mut scratch);
        chebyshev_exp(terms, second, 0.5 * dt, &mut y, &mut scratch);
    }
    y.to_matrix()
}

/// Propagator of `protocol` stretched to `cfg.adiabatic_tau`, by the Magnus
/// integrator with step `cfg.adiabatic_step`.
pub fn adiabatic_propagator(params: &ChainParams, protocol: &RampProtocol, cfg: &EvolutionConfig) -> Result<Propagator> {
    protocol.validate()?;
    cfg.validate()?;
    let terms = IsingTerms::new(params, DEFAULT_MAX_SITES)?;
    let long = protocol.with_duration(cfg.adiabatic_tau);
    magnus_propagator(&terms, &long, cfg.adiabatic_step, cfg.unitarity_tol)
}

pub(crate) fn magnus_propagator(terms: &IsingTerms, protocol: &RampProtocol, step: f64, unitarity_tol: f64) -> Result<Propagator> {
    let dim = terms.dim();
    if protocol.duration == 0.0 {
        return Ok(Propagator::identity(dim));
    }
    let n_steps = ((protocol.duration / step) - 1e-9).ceil().max(1.0) as usize;
    let matrix = magnus_propagate(terms, protocol, n_steps);
    let deviation = linalg::unitarity_deviation(&matrix);
    let tol = unitarity_tol * dim as f64;
    if deviation > tol {
        return Err(Error::Unitarity {
            deviation,
            tolerance: tol,
            step_dt: protocol.duration / n_steps as f64,
        });
    }
    Ok(Propagator {
        matrix: nearest_unitary(&matrix)?,
        step_dt: protocol.duration / n_steps as f64,
        deviation,
    })
}

/// `U rho U^dag`.
pub fn evolve_state(rho_i: &DensityMatrix, u: &Propagator) -> Result<DensityMatrix> {
    thermal::check_dim(u.dim(), rho_i.dim())?;
    let m = u.matrix() * rho_i.matrix() * u.matrix().adjoint();
    DensityMatrix::unchecked_hermitian(m, StateRole::Evolved)
}

/// Transition structure of the long ramp between the initial and final
/// eigenbases. Independent of the initial temperature, so sweeps reuse it.
#[derive(Clone, Debug)]
pub struct AdiabaticMap {
    /// `P[m, n] = |<m_f| U_A |n_i>|^2`.
    transition: DMatrix<f64>,
    /// Initial level `n` goes to final level `assignment[n]`.
    assignment: Vec<usize>,
    unitarity_deviation: f64,
}

impl AdiabaticMap {
    pub fn new(spec_i: &SpectralDecomposition, spec_f: &SpectralDecomposition, u: &Propagator) -> Result<Self> {
        let dim = spec_i.dim();
        thermal::check_dim(dim, spec_f.dim())?;
        thermal::check_dim(dim, u.dim())?;
        let w = spec_f.eigenvectors().adjoint() * u.matrix() * spec_i.eigenvectors();
        let transition = DMatrix::from_fn(dim, dim, |m, n| w[(m, n)].norm_sqr());

        // rows: initial levels, columns: final levels; integer weights for the
        // exact Hungarian solver
        let weights: Vec<i64> = (0..dim)
            .flat_map(|n| (0..dim).map(move |m| (n, m)))
            .map(|(n, m)| (transition[(m, n)] * 1e12).round() as i64)
            .collect();
        let weights = Matrix::from_vec(dim, dim, weights).expect("square weight matrix");
        let (_, assignment) = pathfinding::kuhn_munkres::kuhn_munkres(&weights);
        Ok(AdiabaticMap {
            transition,
            assignment,
            unitarity_deviation: u.unitarity_deviation(),
        })
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.unitarity_deviation
    }

    /// Smallest transition probability along the assignment; near one when
    /// the long ramp is adiabatic for every level.
    pub fn min_assignment_weight(&self) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(n, &m)| self.transition[(m, n)])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_assignment_weight(&self) -> f64 {
        let total: f64 = self.assignment.iter().enumerate().map(|(n, &m)| self.transition[(m, n)]).sum();
        total / self.assignment.len() as f64
    }

    pub fn transport(&self, initial: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; initial.len()];
        for (n, &m) in self.assignment.iter().enumerate() {
            out[m] = initial[n];
        }
        out
    }

    pub fn project(&self, initial: &[f64]) -> Vec<f64> {
        let p = nalgebra::DVector::from_column_slice(initial);
        (&self.transition * p).iter().copied().collect()
    }

    pub fn final_populations(&self, initial: &[f64], method: AdiabaticMethod) -> Vec<f64> {
        match method {
            AdiabaticMethod::Transport => self.transport(initial),
            AdiabaticMethod::Projected => self.project(initial),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdiabaticOutcome {
    pub state: DensityMatrix,
    /// Total-variation distance between transported and projected populations.
    pub transport_projection_tv: f64,
    /// `S_d` of the projected long-ramp state minus `S(rho_i)`.
    pub projected_entropy_excess: f64,
    pub min_assignment_weight: f64,
    pub unitarity_deviation: f64,
}

/// Adiabatic state from a precomputed map; `rho_i` populations are read in the
/// initial eigenbasis (pinched inside degenerate blocks).
pub fn adiabatic_state_from_map(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    spec_f: &SpectralDecomposition,
    map: &AdiabaticMap,
    method: AdiabaticMethod,
) -> Result<AdiabaticOutcome> {
    thermal::check_dim(rho_i.dim(), spec_i.dim())?;
    let (_, p_i) = thermal::pinched_populations(rho_i.matrix(), spec_i)?;
    let transported = map.transport(&p_i);
    let projected = map.project(&p_i);
    let tv = 0.5 * transported.iter().zip(&projected).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let s_i = thermal::spectrum_entropy(&p_i)?;
    let excess = linalg::shannon_entropy(&projected) - s_i;
    let chosen = match method {
        AdiabaticMethod::Transport => transported,
        AdiabaticMethod::Projected => projected,
    };
    let pops = PopulationDistribution::new(chosen.into_iter().map(|x| x.max(0.0)).collect())?;
    let state = DensityMatrix::from_spectral(spec_f.eigenvectors(), &pops, StateRole::Adiabatic);
    Ok(AdiabaticOutcome {
        state,
        transport_projection_tv: tv,
        projected_entropy_excess: excess,
        min_assignment_weight: map.min_assignment_weight(),
        unitarity_deviation: map.unitarity_deviation(),
    })
}

/// The adiabatic reference `rho_A`: the ramp run for `cfg.adiabatic_tau`,
/// reduced to a state diagonal in the final eigenbasis per
/// `cfg.adiabatic_method`.
pub fn adiabatic_state(
    rho_i: &DensityMatrix,
    params: &ChainParams,
    protocol: &RampProtocol,
    cfg: &EvolutionConfig,
) -> Result<DensityMatrix> {
    let spec_i = diagonalize(&build_hamiltonian(params, protocol.h_initial)?)?;
    let spec_f = diagonalize(&build_hamiltonian(params, protocol.h_final())?)?;
    let u = adiabatic_propagator(params, protocol, cfg)?;
    let map = AdiabaticMap::new(&spec_i, &spec_f, &u)?;
    Ok(adiabatic_state_from_map(rho_i, &spec_i, &spec_f, &map, cfg.adiabatic_method)?.state)
}

/// Cross-check construction: populations of `rho_i` carried index-by-index
/// across the two ascending eigenbases.
pub fn spectral_transport(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    spec_f: &SpectralDecomposition,
) -> Result<DensityMatrix> {
    thermal::check_dim(rho_i.dim(), spec_f.dim())?;
    let (_, p_i) = thermal::pinched_populations(rho_i.matrix(), spec_i)?;
    let pops = PopulationDistribution::new(p_i)?;
    Ok(DensityMatrix::from_spectral(spec_f.eigenvectors(), &pops, StateRole::Adiabatic))
}
