//! Free-fermion solution of the `L = 0` chain.
//!
//! Momenta `theta_j` and `2 pi - theta_j` form a pair; the pair's empty and
//! doubly occupied states span a two-level system driven by
//! `[[eps, Delta], [Delta, -eps]]` with `eps = 2(h - g cos theta)` and
//! `Delta = 2 g sin theta`, while the two singly occupied states are
//! stationary. A thermal pair sits in that two-level block with probability
//! `(1 + e^{-2 omega/T}) / (1 + e^{-omega/T})^2`; per-fermion quantities are
//! half of the pair's, so summing over all `j` reproduces the factorized
//! state of the whole chain.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::ChainParams;
use crate::dynamics::{EvolutionConfig, RampProtocol};
use crate::error::{Error, Result};
use crate::linalg::xlnx;
use crate::observables::FrictionReport;

type C2 = Matrix2<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeSpec {
    /// 1-based mode index.
    pub index: usize,
    pub theta: f64,
    pub omega_i: f64,
    pub omega_f: f64,
}

/// `2 sqrt(h^2 + g^2 - 2 g h cos theta)`.
pub fn dispersion(g: f64, h: f64, theta: f64) -> f64 {
    2.0 * (h * h + g * g - 2.0 * g * h * theta.cos()).max(0.0).sqrt()
}

pub fn mode_angle(index: usize, n_sites: usize) -> f64 {
    (2 * index - 1) as f64 * std::f64::consts::PI / n_sites as f64
}

fn require_integrable(params: &ChainParams) -> Result<()> {
    params.validate()?;
    if params.longitudinal != 0.0 {
        return Err(Error::domain(format!(
            "free-fermion solution needs L = 0, got L = {}",
            params.longitudinal
        )));
    }
    Ok(())
}

/// Modes at a single field `h` (`omega_i == omega_f`).
pub fn mode_spectrum(params: &ChainParams, h: f64) -> Result<Vec<ModeSpec>> {
    mode_pair_spectrum(params, h, h)
}

/// Modes with their energies at the two ends of a ramp.
pub fn mode_pair_spectrum(params: &ChainParams, h_i: f64, h_f: f64) -> Result<Vec<ModeSpec>> {
    require_integrable(params)?;
    let n = params.n_sites;
    let g = params.coupling;
    Ok((1..=n)
        .map(|index| {
            let theta = mode_angle(index, n);
            ModeSpec {
                index,
                theta,
                omega_i: dispersion(g, h_i, theta),
                omega_f: dispersion(g, h_f, theta),
            }
        })
        .collect())
}

/// `E_0 = -1/2 sum_j omega_j`, using the final-field energies.
pub fn ground_energy(modes: &[ModeSpec]) -> f64 {
    -0.5 * modes.iter().map(|m| m.omega_f).sum::<f64>()
}

/// Normalized state of a pair's two-level block, in the bare pair basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeState {
    matrix: C2,
}

impl ModeState {
    fn diagonal_in(basis: &C2, p_ground: f64) -> Self {
        let d = C2::new(
            Complex64::new(p_ground, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 - p_ground, 0.0),
        );
        ModeState {
            matrix: basis * d * basis.adjoint(),
        }
    }

    pub fn matrix(&self) -> &C2 {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.matrix;
        let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
        let b = m[(0, 1)].norm();
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }

    pub fn entropy(&self) -> f64 {
        let [a, b] = self.eigenvalues();
        -(xlnx(a.max(0.0)) + xlnx(b.max(0.0)))
    }

    /// Populations in the eigenbasis `basis` (columns ground, excited).
    pub fn populations_in(&self, basis: &C2) -> [f64; 2] {
        let m = basis.adjoint() * self.matrix * basis;
        [m[(0, 0)].re, m[(1, 1)].re]
    }
}

/// Block Hamiltonian of mode `theta` at field `h`.
fn block_hamiltonian(g: f64, h: f64, theta: f64) -> (f64, f64) {
    (2.0 * (h - g * theta.cos()), 2.0 * g * theta.sin())
}

/// Eigenvectors of `[[eps, delta], [delta, -eps]]`, ground state first.
fn block_eigenbasis(eps: f64, delta: f64) -> C2 {
    let phi = delta.atan2(eps);
    let (s, c) = (0.5 * phi).sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    // excited (+omega): (c, s); ground (-omega): (-s, c)
    C2::new(re(-s), re(c), re(c), re(s))
}

fn thermal_ground_fraction(omega: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.5;
    }
    1.0 / (1.0 + (-2.0 * omega / t).exp())
}

/// Probability that a thermal pair occupies its two-level block.
pub fn block_weight(omega: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.5;
    }
    let x = (-omega / t).exp();
    (1.0 + x * x) / ((1.0 + x) * (1.0 + x))
}

fn rk4_block(g: f64, theta: f64, protocol: &RampProtocol, n_steps: usize) -> C2 {
    let dt = protocol.duration / n_steps as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    let h_of = |h: f64| {
        let (eps, delta) = block_hamiltonian(g, h, theta);
        let re = |x: f64| Complex64::new(x, 0.0);
        C2::new(re(eps), re(delta), re(delta), re(-eps)) * minus_i
    };
    let mut u = C2::identity();
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let a0 = h_of(protocol.field_at(t));
        let am = h_of(protocol.field_at(t + 0.5 * dt));
        let a1 = h_of(protocol.field_at(t + dt));
        let dtc = Complex64::new(dt, 0.0);
        let half = Complex64::new(0.5 * dt, 0.0);
        let k1 = a0 * u;
        let k2 = am * (u + k1 * half);
        let k3 = am * (u + k2 * half);
        let k4 = a1 * (u + k3 * dtc);
        u += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (dtc / 6.0);
    }
    u
}

/// Two-by-two polar correction `U (U^dag U)^{-1/2}`.
fn nearest_unitary(u: C2) -> (C2, f64) {
    let gram = u.adjoint() * u;
    let deviation = (gram - C2::identity()).norm();
    let eig = gram.symmetric_eigen();
    let mut inv = C2::zeros();
    for k in 0..2 {
        let v = eig.eigenvectors.column(k);
        inv += v * v.adjoint() * Complex64::new(1.0 / eig.eigenvalues[k].sqrt(), 0.0);
    }
    (u * inv, deviation)
}

/// Finite-time and adiabatic block states of one mode.
pub fn mode_evolve(
    g: f64,
    spec: &ModeSpec,
    protocol: &RampProtocol,
    t_i: f64,
    cfg: &EvolutionConfig,
) -> Result<(ModeState, ModeState)> {
    protocol.validate()?;
    if !(t_i > 0.0) {
        return Err(Error::domain(format!("temperature must be positive, got {t_i}")));
    }
    let (eps_i, delta_i) = block_hamiltonian(g, protocol.h_initial, spec.theta);
    let (eps_f, delta_f) = block_hamiltonian(g, protocol.h_final(), spec.theta);
    let basis_i = block_eigenbasis(eps_i, delta_i);
    let basis_f = block_eigenbasis(eps_f, delta_f);
    let p0 = thermal_ground_fraction(spec.omega_i, t_i);
    let initial = ModeState::diagonal_in(&basis_i, p0);
    let adiabatic = ModeState::diagonal_in(&basis_f, p0);
    if protocol.duration == 0.0 {
        return Ok((initial, adiabatic));
    }
    let mut dt = cfg.rk_step(protocol.duration, g);
    for attempt in 0..=cfg.max_halvings {
        let n_steps = ((protocol.duration / dt) - 1e-9).ceil().max(1.0) as usize;
        let (u, deviation) = nearest_unitary(rk4_block(g, spec.theta, protocol, n_steps));
        if deviation <= 2.0 * cfg.unitarity_tol {
            let evolved = ModeState {
                matrix: u * initial.matrix * u.adjoint(),
            };
            return Ok((evolved, adiabatic));
        }
        if attempt == cfg.max_halvings {
            return Err(Error::Unitarity {
                deviation,
                tolerance: 2.0 * cfg.unitarity_tol,
                step_dt: protocol.duration / n_steps as f64,
            });
        }
        dt = 0.5 * protocol.duration / n_steps as f64;
    }
    unreachable!("loop returns on its last attempt")
}

/// `T_i omega_f / omega_i`; `NaN` for a gapless initial mode.
pub fn mode_temperature(spec: &ModeSpec, t_i: f64) -> f64 {
    if spec.omega_i == 0.0 {
        return f64::NAN;
    }
    t_i * spec.omega_f / spec.omega_i
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeReport {
    pub index: usize,
    pub theta: f64,
    pub omega_i: f64,
    pub omega_f: f64,
    pub t_a_j: f64,
    pub w_fric_j: f64,
    pub delta_s_d_j: f64,
    /// `D(rho_tau^j || rho_A^j)`.
    pub d_j: f64,
    /// Excited-state population of the finite-time block state, in the final
    /// eigenbasis.
    pub excitation: f64,
}

/// `D(rho || sigma)` for two-level `rho` against a state diagonal in `basis`
/// with ground population `a0`.
fn block_relative_entropy(rho: &ModeState, basis: &C2, a0: f64) -> f64 {
    let q = rho.populations_in(basis);
    let cross = |q: f64, a: f64| if q == 0.0 { 0.0 } else { q * a.ln() };
    -rho.entropy() - cross(q[0], a0) - cross(q[1], 1.0 - a0)
}

/// Per-mode ledger plus the chain totals.
#[derive(Clone, Debug, Serialize)]
pub struct IntegrableReport {
    /// Chain totals; `t_a` is the single temperature matching the entropy of
    /// the whole adiabatic state.
    pub total: FrictionReport,
    /// `sum_j T_A^j dS_d^j`.
    pub sum_mode_t_a_delta_s_d: f64,
    pub modes: Vec<ModeReport>,
}

/// Fermion binary entropy at occupation `1 / (1 + e^{x})`.
fn fermion_entropy(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let f = 1.0 / (1.0 + x.exp());
    -(xlnx(f) + xlnx(1.0 - f))
}

/// Thermal energy `sum_j -omega_j/2 tanh(omega_j / 2T)` of the fermion modes.
fn thermal_energy(omegas: &[f64], t: f64) -> f64 {
    if t == 0.0 {
        return -0.5 * omegas.iter().sum::<f64>();
    }
    omegas.iter().map(|&w| -0.5 * w * (0.5 * w / t).tanh()).sum()
}

fn thermal_entropy(omegas: &[f64], t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    omegas.iter().map(|&w| fermion_entropy(w / t)).sum()
}

fn invert_increasing(target: f64, tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e6f64.ln());
    if f(lo.exp()) > target || f(hi.exp()) < target {
        return Err(Error::Bracket {
            what: "fermion temperature",
            target,
            low: f(lo.exp()),
            high: f(hi.exp()),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (0.5 * (lo + hi)).exp();
    let miss = (f(t) - target).abs();
    if miss > tol {
        return Err(Error::Numerical {
            what: "fermion temperature inversion",
            residual: miss,
            tolerance: tol,
        });
    }
    Ok(t)
}

fn temperature_for_entropy(omegas: &[f64], entropy: f64) -> Result<f64> {
    let s_max = omegas.len() as f64 * std::f64::consts::LN_2;
    if entropy <= 1e-12 {
        return Ok(0.0);
    }
    if entropy >= s_max - 1e-12 {
        return Ok(f64::INFINITY);
    }
    invert_increasing(entropy, 1e-10 * omegas.len().max(1) as f64, |t| thermal_entropy(omegas, t))
}

fn temperature_for_energy(omegas: &[f64], energy: f64) -> Result<f64> {
    let e0 = thermal_energy(omegas, 0.0);
    let scale = e0.abs().max(1.0);
    if energy <= e0 + 1e-12 * scale {
        return Ok(0.0);
    }
    if energy >= -1e-12 * scale {
        return Ok(f64::INFINITY);
    }
    invert_increasing(energy, 1e-9 * scale, |t| thermal_energy(omegas, t))
}

/// Two-level block plus singly occupied weight: `D` between two pair states.
fn pair_relative_entropy(block_d: f64, w_rho: f64, w_sigma: f64) -> f64 {
    let mut d = w_rho * block_d;
    if w_rho > 0.0 {
        d += w_rho * (w_rho / w_sigma).ln();
    }
    if w_rho < 1.0 {
        d += (1.0 - w_rho) * ((1.0 - w_rho) / (1.0 - w_sigma)).ln();
    }
    d
}

/// Free-fermion friction ledger of the `L = 0` chain.
pub fn integrable_friction(
    params: &ChainParams,
    protocol: &RampProtocol,
    t_i: f64,
    cfg: &EvolutionConfig,
) -> Result<IntegrableReport> {
    let specs = mode_pair_spectrum(params, protocol.h_initial, protocol.h_final())?;
    let g = params.coupling;
    let n = params.n_sites;
    let omegas_i: Vec<f64> = specs.iter().map(|m| m.omega_i).collect();
    let omegas_f: Vec<f64> = specs.iter().map(|m| m.omega_f).collect();

    let e_i = thermal_energy(&omegas_i, t_i);
    let s_a = thermal_entropy(&omegas_i, t_i);
    let t_a = temperature_for_entropy(&omegas_f, s_a)?;
    let reference_energy = thermal_energy(&omegas_f, t_a);

    let mut modes = Vec::with_capacity(n);
    let (mut e_tau, mut e_a) = (0.0, 0.0);
    let (mut d_tau_a, mut d_diag_a, mut d_tau_t, mut d_a_t) = (0.0, 0.0, 0.0, 0.0);
    let (mut delta_s_d, mut sum_mode) = (0.0, 0.0);
    for spec in &specs {
        let partner = n + 1 - spec.index;
        let t_a_j = mode_temperature(spec, t_i);
        let f_i = 1.0 / (1.0 + (spec.omega_i / t_i).exp());
        if partner == spec.index {
            // theta = pi: a single decoupled mode, occupation frozen
            let energy = spec.omega_f * (f_i - 0.5);
            e_tau += energy;
            e_a += energy;
            if t_a.is_finite() && t_a > 0.0 {
                let f_t = 1.0 / (1.0 + (spec.omega_f / t_a).exp());
                let kl = |p: f64, q: f64| if p > 0.0 { p * (p / q).ln() } else { 0.0 };
                let d = kl(f_i, f_t) + kl(1.0 - f_i, 1.0 - f_t);
                d_tau_t += d;
                d_a_t += d;
            }
            modes.push(ModeReport {
                index: spec.index,
                theta: spec.theta,
                omega_i: spec.omega_i,
                omega_f: spec.omega_f,
                t_a_j,
                w_fric_j: 0.0,
                delta_s_d_j: 0.0,
                d_j: 0.0,
                excitation: 0.0,
            });
            continue;
        }
        let (tau_state, a_state) = mode_evolve(g, spec, protocol, t_i, cfg)?;
        let (eps_f, delta_f) = block_hamiltonian(g, protocol.h_final(), spec.theta);
        let basis_f = block_eigenbasis(eps_f, delta_f);
        let q = tau_state.populations_in(&basis_f);
        let a = a_state.populations_in(&basis_f);
        let a0 = thermal_ground_fraction(spec.omega_i, t_i);

        let d_block = block_relative_entropy(&tau_state, &basis_f, a0);
        let diag = ModeState::diagonal_in(&basis_f, q[0]);
        let d_diag_block = block_relative_entropy(&diag, &basis_f, a0);
        let ds_block = diag.entropy() - a_state.entropy();
        let w_block = spec.omega_f * ((q[1] - q[0]) - (a[1] - a[0]));

        let share = 0.5 * block_weight(spec.omega_i, t_i);
        let w_fric_j = share * w_block;
        let ds_j = share * ds_block;
        let d_j = share * d_block;
        e_tau += share * spec.omega_f * (q[1] - q[0]);
        e_a += share * spec.omega_f * (a[1] - a[0]);
        d_tau_a += d_j;
        d_diag_a += share * d_diag_block;
        delta_s_d += ds_j;
        sum_mode += t_a_j * ds_j;

        if t_a > 0.0 {
            let w = block_weight(spec.omega_i, t_i);
            let w_t = block_weight(spec.omega_f, t_a);
            let g0 = thermal_ground_fraction(spec.omega_f, t_a);
            let d_tau = pair_relative_entropy(block_relative_entropy(&tau_state, &basis_f, g0), w, w_t);
            let d_a = pair_relative_entropy(block_relative_entropy(&a_state, &basis_f, g0), w, w_t);
            d_tau_t += 0.5 * d_tau;
            d_a_t += 0.5 * d_a;
        }

        modes.push(ModeReport {
            index: spec.index,
            theta: spec.theta,
            omega_i: spec.omega_i,
            omega_f: spec.omega_f,
            t_a_j,
            w_fric_j,
            delta_s_d_j: ds_j,
            d_j,
            excitation: q[1],
        });
    }

    let s_d_tau = s_a + delta_s_d;
    let w_tau = e_tau - e_i;
    let w_a = e_a - e_i;
    let (delta, flagged) = if t_a > 0.0 {
        (d_tau_t - d_tau_a - d_a_t, false)
    } else {
        (f64::NAN, true)
    };
    let total = FrictionReport {
        w_tau,
        w_a,
        w_fric: w_tau - w_a,
        t_a,
        delta_s_d,
        t_a_delta_s_d: t_a * delta_s_d,
        d_tau_a,
        d_diag_a,
        delta,
        t_a_d_tau_a: t_a * d_tau_a,
        f_diag_ta: e_tau - t_a * s_d_tau,
        f_a_ta: e_a - t_a * s_a,
        w_opt: reference_energy - e_i,
        t_mean_energy: temperature_for_energy(&omegas_f, e_a)?,
        flagged,
    };
    Ok(IntegrableReport {
        total,
        sum_mode_t_a_delta_s_d: sum_mode,
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(n: usize) -> ChainParams {
        ChainParams::new(n, 1.0, 0.0).unwrap()
    }

    #[test]
    fn dispersion_value() {
        let m = mode_spectrum(&chain(4), 1.0).unwrap();
        assert_abs_diff_eq!(m[0].theta, std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(m[0].omega_f, 1.530733729460359, epsilon = 1e-12);
    }

    #[test]
    fn large_field_limit() {
        for m in mode_spectrum(&chain(16), 100.0).unwrap() {
            assert!((m.omega_f / 200.0 - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn reflection_symmetry() {
        let m = mode_spectrum(&chain(9), 1.3).unwrap();
        for j in 0..9 {
            assert_abs_diff_eq!(m[j].omega_f, m[8 - j].omega_f, epsilon = 1e-12);
        }
    }

    #[test]
    fn ground_energy_limits() {
        let one = mode_spectrum(&chain(1), 1.5).unwrap();
        assert_abs_diff_eq!(ground_energy(&one), -2.5, epsilon = 1e-12);
        let zero_field = mode_spectrum(&chain(6), 0.0).unwrap();
        assert_abs_diff_eq!(ground_energy(&zero_field), -6.0, epsilon = 1e-12);
    }

    #[test]
    fn longitudinal_field_rejected() {
        let p = ChainParams::new(4, 1.0, 0.5).unwrap();
        assert!(matches!(mode_spectrum(&p, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn block_eigenbasis_diagonalizes() {
        let (eps, delta) = block_hamiltonian(1.0, 1.5, 0.7);
        let b = block_eigenbasis(eps, delta);
        let re = |x: f64| Complex64::new(x, 0.0);
        let h = C2::new(re(eps), re(delta), re(delta), re(-eps));
        let d = b.adjoint() * h * b;
        let omega = dispersion(1.0, 1.5, 0.7);
        assert_abs_diff_eq!(d[(0, 0)].re, -omega, epsilon = 1e-12);
        assert_abs_diff_eq!(d[(1, 1)].re, omega, epsilon = 1e-12);
        assert!(d[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn sudden_quench_excitation_is_overlap() {
        let spec = mode_pair_spectrum(&chain(8), 1.5, 3.5).unwrap()[2];
        let protocol = RampProtocol::linear(1.5, 2.0, 0.0).unwrap();
        let (tau, _) = mode_evolve(1.0, &spec, &protocol, 1e-3, &EvolutionConfig::default()).unwrap();
        let (ei, di) = block_hamiltonian(1.0, 1.5, spec.theta);
        let (ef, df) = block_hamiltonian(1.0, 3.5, spec.theta);
        let (bi, bf) = (block_eigenbasis(ei, di), block_eigenbasis(ef, df));
        let overlap = (bf.column(1).adjoint() * bi.column(0))[(0, 0)].norm_sqr();
        assert_abs_diff_eq!(tau.populations_in(&bf)[1], overlap, epsilon = 1e-9);
    }

    #[test]
    fn slow_ramp_keeps_populations() {
        let spec = mode_pair_spectrum(&chain(8), 1.5, 3.5).unwrap()[1];
        let protocol = RampProtocol::linear(1.5, 2.0, 100.0).unwrap();
        let (tau, a) = mode_evolve(1.0, &spec, &protocol, 3.0, &EvolutionConfig::default()).unwrap();
        let (ef, df) = block_hamiltonian(1.0, 3.5, spec.theta);
        let bf = block_eigenbasis(ef, df);
        assert!((tau.populations_in(&bf)[1] - a.populations_in(&bf)[1]).abs() < 1e-4);
    }

    #[test]
    fn no_drive_no_change() {
        let spec = mode_pair_spectrum(&chain(8), 1.5, 1.5).unwrap()[0];
        let protocol = RampProtocol::linear(1.5, 0.0, 1.0).unwrap();
        let (tau, a) = mode_evolve(1.0, &spec, &protocol, 2.0, &EvolutionConfig::default()).unwrap();
        assert!((tau.matrix() - a.matrix()).norm() < 1e-9);
    }

    #[test]
    fn per_mode_friction_equals_temperature_times_divergence() {
        let protocol = RampProtocol::linear(1.5, 2.0, 1.0).unwrap();
        let r = integrable_friction(&chain(8), &protocol, 3.0, &EvolutionConfig::default()).unwrap();
        for m in &r.modes {
            assert_abs_diff_eq!(m.w_fric_j, m.t_a_j * m.d_j, epsilon = 1e-9);
            assert!(m.d_j >= -1e-12);
        }
        let sum: f64 = r.modes.iter().map(|m| m.w_fric_j).sum();
        assert_abs_diff_eq!(sum, r.total.w_fric, epsilon = 1e-9);
        assert!(r.total.w_fric > 0.0);
    }

    #[test]
    fn mode_temperature_scaling() {
        let s = ModeSpec {
            index: 1,
            theta: 0.3,
            omega_i: dispersion(1.0, 1.5, 0.3),
            omega_f: dispersion(2.0, 3.0, 0.3),
        };
        assert_abs_diff_eq!(mode_temperature(&s, 1.7), 3.4, epsilon = 1e-12);
    }
}
