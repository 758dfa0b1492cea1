//! Work, friction and entropy bookkeeping for one driven run.

use serde::Serialize;

use crate::chain::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::linalg;
use crate::thermal::{
    self, diagonal_entropy, effective_temperature, gibbs_state, mean_energy_temperature, project_diagonal,
    von_neumann_entropy, DensityMatrix, PopulationDistribution, StateRole,
};

/// Eigenvalues of a computed (not supplied) spectrum below this count as zero.
pub const LOG_CLAMP: f64 = 1e-14;
/// Weight on the null space of the reference state that makes `D` infinite.
pub const NULL_WEIGHT_TOL: f64 = 1e-8;
/// Off-diagonal mass tolerated in a state that should be diagonal in `H_f`.
pub const DIAGONAL_TOL: f64 = 1e-8;

/// Full ledger for one parameter point. Energies in units of `g`, entropies
/// in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrictionReport {
    pub w_tau: f64,
    pub w_a: f64,
    pub w_fric: f64,
    pub t_a: f64,
    pub delta_s_d: f64,
    pub t_a_delta_s_d: f64,
    /// `D(rho_tau || rho_A)`.
    pub d_tau_a: f64,
    /// `D(rho_tau^diag || rho_A)`.
    pub d_diag_a: f64,
    /// `D(rho_tau || rho_TA) - D(rho_tau || rho_A) - D(rho_A || rho_TA)`, signed.
    pub delta: f64,
    pub t_a_d_tau_a: f64,
    /// `F_TA(rho_tau^diag)`.
    pub f_diag_ta: f64,
    /// `F_TA(rho_A)`.
    pub f_a_ta: f64,
    pub w_opt: f64,
    /// Temperature of the Gibbs state with the mean energy of `rho_A`.
    pub t_mean_energy: f64,
    /// Set when a relative entropy hit the infinity sentinel.
    pub flagged: bool,
}

/// `Tr[rho_f H_f] - Tr[rho_i H_i]`.
pub fn work(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    rho_f: &DensityMatrix,
    spec_f: &SpectralDecomposition,
) -> Result<f64> {
    Ok(rho_f.energy(spec_f)? - rho_i.energy(spec_i)?)
}

/// `D(rho || sigma) = Tr[rho ln rho] - Tr[rho ln sigma]`, evaluated in the
/// eigenbasis of `sigma`.
///
/// Returns `f64::INFINITY` when `rho` puts more than [`NULL_WEIGHT_TOL`] on
/// the null space of `sigma`. Eigenvalues of `sigma` that came out of a solver
/// are clamped at [`LOG_CLAMP`]; supplied spectra are used as they are.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    thermal::check_dim(rho.dim(), sigma.dim())?;
    let s_rho = von_neumann_entropy(rho)?;
    let spec = sigma.spectrum()?;
    let weights = linalg::diagonal_in_basis(rho.matrix(), spec.eigenvectors());
    let exact = sigma.has_exact_spectrum();
    let mut cross = 0.0;
    let mut null_weight = 0.0;
    for (&q, &lambda) in weights.iter().zip(spec.eigenvalues()) {
        let is_null = if exact { lambda <= 0.0 } else { lambda < LOG_CLAMP };
        if is_null {
            null_weight += q.max(0.0);
            if !exact {
                cross += q * LOG_CLAMP.ln();
            }
        } else {
            cross += q * lambda.ln();
        }
    }
    if null_weight > NULL_WEIGHT_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(-s_rho - cross)
}

/// `F_T(rho) = Tr[rho H] - T S(rho)`.
pub fn free_energy(rho: &DensityMatrix, spec: &SpectralDecomposition, t: f64) -> Result<f64> {
    Ok(rho.energy(spec)? - t * von_neumann_entropy(rho)?)
}

/// Gibbs state of `spec` at `t`, extended to the `t = 0` limit (uniform over
/// the ground block).
pub fn thermal_reference(spec: &SpectralDecomposition, t: f64) -> Result<DensityMatrix> {
    if t > 0.0 {
        return gibbs_state(spec, t);
    }
    if t != 0.0 {
        return Err(Error::domain(format!("temperature must be non-negative, got {t}")));
    }
    let ground = spec
        .degenerate_blocks()
        .into_iter()
        .next()
        .ok_or_else(|| Error::domain("empty spectrum"))?;
    let mut p = vec![0.0; spec.dim()];
    for k in ground.clone() {
        p[k] = 1.0 / ground.len() as f64;
    }
    Ok(DensityMatrix::from_spectral(
        spec.eigenvectors(),
        &PopulationDistribution::new(p)?,
        StateRole::Thermal,
    ))
}

/// Mean energy of the (limit-extended) Gibbs state.
fn thermal_energy_at(spec: &SpectralDecomposition, t: f64) -> Result<f64> {
    thermal_reference(spec, t)?.energy(spec)
}

/// `Tr[rho_TA H_f] - Tr[rho_i H_i]`: the work of the lowest-energy state with
/// the entropy of `rho_A`.
pub fn optimal_work(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    spec_f: &SpectralDecomposition,
    t_a: f64,
) -> Result<f64> {
    Ok(thermal_energy_at(spec_f, t_a)? - rho_i.energy(spec_i)?)
}

/// `sum_{k <= n} [p_k(tau) - p_k(A)] E_k` for every `n`; the last entry is the
/// frictional work.
pub fn cumulative_friction(
    pops_tau: &PopulationDistribution,
    pops_a: &PopulationDistribution,
    spec_f: &SpectralDecomposition,
) -> Result<Vec<f64>> {
    thermal::check_dim(spec_f.dim(), pops_tau.len())?;
    thermal::check_dim(spec_f.dim(), pops_a.len())?;
    let mut acc = 0.0;
    Ok(pops_tau
        .as_slice()
        .iter()
        .zip(pops_a.as_slice())
        .zip(spec_f.eigenvalues())
        .map(|((pt, pa), e)| {
            acc += (pt - pa) * e;
            acc
        })
        .collect())
}

/// Frictional work of the effective two-level system formed by the ground
/// and first excited levels (degenerate levels lumped), with populations
/// renormalized to that pair. Equals the full `W_fric` when nothing else is
/// populated.
pub fn two_level_friction(
    pops_tau: &PopulationDistribution,
    pops_a: &PopulationDistribution,
    spec_f: &SpectralDecomposition,
) -> Result<f64> {
    thermal::check_dim(spec_f.dim(), pops_tau.len())?;
    thermal::check_dim(spec_f.dim(), pops_a.len())?;
    let blocks = spec_f.degenerate_blocks();
    if blocks.len() < 2 {
        return Ok(0.0);
    }
    let (ground, excited) = (blocks[0].clone(), blocks[1].clone());
    let gap = spec_f.eigenvalues()[excited.start] - spec_f.eigenvalues()[ground.start];
    let excited_share = |p: &[f64]| {
        let pg: f64 = p[ground.clone()].iter().sum();
        let px: f64 = p[excited.clone()].iter().sum();
        if pg + px > 0.0 {
            px / (pg + px)
        } else {
            0.0
        }
    };
    Ok((excited_share(pops_tau.as_slice()) - excited_share(pops_a.as_slice())) * gap)
}

/// Largest off-diagonal modulus of `rho` in the eigenbasis of `spec`, summed
/// in quadrature.
pub fn off_diagonal_mass(rho: &DensityMatrix, spec: &SpectralDecomposition) -> Result<f64> {
    thermal::check_dim(rho.dim(), spec.dim())?;
    let m = spec.to_eigenbasis(rho.matrix());
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    Ok(acc.sqrt())
}

/// Everything needed to fill a report and check the exact identities.
struct Ledger {
    report: FrictionReport,
    s_tau: f64,
    s_d_tau: f64,
    s_a: f64,
    e_tau: f64,
    e_a: f64,
}

fn ledger(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    rho_tau: &DensityMatrix,
    rho_a: &DensityMatrix,
    spec_f: &SpectralDecomposition,
) -> Result<Ledger> {
    thermal::check_dim(rho_i.dim(), spec_i.dim())?;
    thermal::check_dim(rho_tau.dim(), spec_f.dim())?;
    thermal::check_dim(rho_a.dim(), spec_f.dim())?;
    let off = off_diagonal_mass(rho_a, spec_f)?;
    if off > DIAGONAL_TOL {
        return Err(Error::Numerical {
            what: "adiabatic state diagonal in final eigenbasis",
            residual: off,
            tolerance: DIAGONAL_TOL,
        });
    }

    let e_i = rho_i.energy(spec_i)?;
    let e_tau = rho_tau.energy(spec_f)?;
    let e_a = rho_a.energy(spec_f)?;
    let w_tau = e_tau - e_i;
    let w_a = e_a - e_i;
    let w_fric = w_tau - w_a;

    let (tau_diag, _) = project_diagonal(rho_tau, spec_f)?;
    let s_tau = von_neumann_entropy(rho_tau)?;
    let s_d_tau = von_neumann_entropy(&tau_diag)?;
    let s_a = von_neumann_entropy(rho_a)?;
    let s_d_a = diagonal_entropy(rho_a, spec_f)?;
    let delta_s_d = s_d_tau - s_d_a;

    let t_a = effective_temperature(rho_a, spec_f)?;
    let d_tau_a = relative_entropy(rho_tau, rho_a)?;
    let d_diag_a = relative_entropy(&tau_diag, rho_a)?;
    let reference = thermal_reference(spec_f, t_a)?;
    let d_tau_t = relative_entropy(rho_tau, &reference)?;
    let d_a_t = relative_entropy(rho_a, &reference)?;
    let delta = d_tau_t - d_tau_a - d_a_t;

    let w_opt = reference.energy(spec_f)? - e_i;
    let t_mean_energy = mean_energy_temperature(rho_a, spec_f)?;
    let flagged = [d_tau_a, d_diag_a, d_tau_t, d_a_t].iter().any(|d| !d.is_finite());

    let report = FrictionReport {
        w_tau,
        w_a,
        w_fric,
        t_a,
        delta_s_d,
        t_a_delta_s_d: t_a * delta_s_d,
        d_tau_a,
        d_diag_a,
        delta,
        t_a_d_tau_a: t_a * d_tau_a,
        f_diag_ta: e_tau - t_a * s_d_tau,
        f_a_ta: e_a - t_a * s_a,
        w_opt,
        t_mean_energy,
        flagged,
    };
    Ok(Ledger {
        report,
        s_tau,
        s_d_tau,
        s_a,
        e_tau,
        e_a,
    })
}

/// The complete report for `rho_i -> rho_tau` against the reference `rho_A`
/// (which must be diagonal in the eigenbasis of `spec_f`).
pub fn friction_report(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    rho_tau: &DensityMatrix,
    rho_a: &DensityMatrix,
    spec_f: &SpectralDecomposition,
) -> Result<FrictionReport> {
    Ok(ledger(rho_i, spec_i, rho_tau, rho_a, spec_f)?.report)
}

/// Residuals of the identities that hold exactly for any drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `D(rho_tau||rho_A) - dS_d - D(rho_tau^diag||rho_A)`.
    pub coherence_split: f64,
    /// Temperatures at which the two temperature-dependent identities are
    /// evaluated: `T_A` and `2 T_A` (or 1 and 2 when `T_A` is not finite).
    pub temperatures: [f64; 2],
    /// `W_fric - T dS_d - F_T(rho_tau^diag) + F_T(rho_A)`.
    pub free_energy_split: [f64; 2],
    /// `W_fric - T [D(rho_tau||rho_T) - D(rho_A||rho_T)]`.
    pub thermal_reference_split: [f64; 2],
    /// `S(rho_tau) - S(rho_A)`; zero for an exactly entropy-preserving reference.
    pub entropy_mismatch: f64,
}

impl IdentityResiduals {
    pub fn max_abs(&self) -> f64 {
        std::iter::once(self.coherence_split)
            .chain(self.free_energy_split)
            .chain(self.thermal_reference_split)
            .map(f64::abs)
            .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
    }
}

/// Report plus the exact-identity residuals, sharing one set of
/// decompositions.
pub fn friction_report_with_identities(
    rho_i: &DensityMatrix,
    spec_i: &SpectralDecomposition,
    rho_tau: &DensityMatrix,
    rho_a: &DensityMatrix,
    spec_f: &SpectralDecomposition,
) -> Result<(FrictionReport, IdentityResiduals)> {
    let l = ledger(rho_i, spec_i, rho_tau, rho_a, spec_f)?;
    let r = l.report;
    let coherence_split = r.d_tau_a - r.delta_s_d - r.d_diag_a;
    let base = if r.t_a.is_finite() && r.t_a > 0.0 { r.t_a } else { 1.0 };
    let temperatures = [base, 2.0 * base];
    let mut free_energy_split = [0.0; 2];
    let mut thermal_reference_split = [0.0; 2];
    for (k, &t) in temperatures.iter().enumerate() {
        let f_diag = l.e_tau - t * l.s_d_tau;
        let f_a = l.e_a - t * l.s_a;
        free_energy_split[k] = r.w_fric - t * r.delta_s_d - (f_diag - f_a);
        let reference = gibbs_state(spec_f, t)?;
        let d_tau = relative_entropy(rho_tau, &reference)?;
        let d_a = relative_entropy(rho_a, &reference)?;
        thermal_reference_split[k] = r.w_fric - t * (d_tau - d_a);
    }
    Ok((
        r,
        IdentityResiduals {
            coherence_split,
            temperatures,
            free_energy_split,
            thermal_reference_split,
            entropy_mismatch: l.s_tau - l.s_a,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_hamiltonian, diagonalize, ChainParams};
    use crate::linalg::CMatrix;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn spec(n: usize, l: f64, h: f64) -> SpectralDecomposition {
        let p = ChainParams::new(n, 1.0, l).unwrap();
        diagonalize(&build_hamiltonian(&p, h).unwrap()).unwrap()
    }

    fn diag_state(p: &[f64]) -> DensityMatrix {
        let m = CMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0))));
        DensityMatrix::new(m, StateRole::Initial).unwrap()
    }

    #[test]
    fn relative_entropy_of_state_with_itself_vanishes() {
        let s = spec(4, 1.0, 1.5);
        let rho = gibbs_state(&s, 1.3).unwrap();
        assert_abs_diff_eq!(relative_entropy(&rho, &rho).unwrap(), 0.0, epsilon = 1e-10);
        let solved = DensityMatrix::new(rho.matrix().clone(), StateRole::Initial).unwrap();
        assert_abs_diff_eq!(relative_entropy(&solved, &solved).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn classical_kl_divergence() {
        let d = relative_entropy(&diag_state(&[0.9, 0.1]), &diag_state(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(d, 0.3680642071684971, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_against_gibbs() {
        // D(I/d || gibbs) = ln Z + <E>_inf / T - ln d, and <E>_inf = 0 for N >= 2
        let s = spec(4, 1.0, 1.5);
        let t = 2.0;
        let mixed = DensityMatrix::maximally_mixed(16, StateRole::Initial);
        let d = relative_entropy(&mixed, &gibbs_state(&s, t).unwrap()).unwrap();
        let ln_z = thermal::log_partition(s.eigenvalues(), t).unwrap();
        assert_abs_diff_eq!(d, ln_z - 16f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn support_violation_is_infinite() {
        let pure = diag_state(&[0.0, 1.0]);
        let d = relative_entropy(&diag_state(&[0.5, 0.5]), &pure).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn cumulative_friction_telescopes() {
        let s = spec(3, 1.0, 2.0);
        let a = PopulationDistribution::new(thermal::gibbs_populations(s.eigenvalues(), 1.0).unwrap()).unwrap();
        let b = PopulationDistribution::new(thermal::gibbs_populations(s.eigenvalues(), 2.0).unwrap()).unwrap();
        let c = cumulative_friction(&b, &a, &s).unwrap();
        let total = b.mean(s.eigenvalues()) - a.mean(s.eigenvalues());
        assert_abs_diff_eq!(*c.last().unwrap(), total, epsilon = 1e-12);
        assert!(cumulative_friction(&a, &a, &s).unwrap().iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn two_level_friction_on_a_single_spin_is_total() {
        let s = spec(1, 0.7, 2.0);
        let a = PopulationDistribution::new(vec![0.8, 0.2]).unwrap();
        let b = PopulationDistribution::new(vec![0.7, 0.3]).unwrap();
        let total = b.mean(s.eigenvalues()) - a.mean(s.eigenvalues());
        assert_abs_diff_eq!(two_level_friction(&b, &a, &s).unwrap(), total, epsilon = 1e-14);
    }

    #[test]
    fn two_level_friction_ignores_higher_levels() {
        let s = spec(3, 1.0, 2.0);
        let mut pt = vec![0.0; 8];
        let mut pa = vec![0.0; 8];
        let b = s.degenerate_blocks();
        pa[b[0].start] = 1.0;
        pt[b[0].start] = 0.5;
        pt[b[1].start] = 0.25;
        pt[7] = 0.25;
        let gap = s.eigenvalues()[b[1].start] - s.eigenvalues()[0];
        let pt = PopulationDistribution::new(pt).unwrap();
        let pa = PopulationDistribution::new(pa).unwrap();
        assert_abs_diff_eq!(two_level_friction(&pt, &pa, &s).unwrap(), gap / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn work_of_maximally_mixed_is_zero() {
        let si = spec(4, 1.0, 1.5);
        let sf = spec(4, 1.0, 3.5);
        let m = DensityMatrix::maximally_mixed(16, StateRole::Initial);
        assert_abs_diff_eq!(work(&m, &si, &m, &sf).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn adiabatic_endpoint_gives_zero_ledger() {
        let si = spec(3, 1.0, 1.5);
        let sf = spec(3, 1.0, 3.5);
        let rho_i = gibbs_state(&si, 2.0).unwrap();
        let pops = PopulationDistribution::new(thermal::gibbs_populations(si.eigenvalues(), 2.0).unwrap()).unwrap();
        let rho_a = DensityMatrix::from_spectral(sf.eigenvectors(), &pops, StateRole::Adiabatic);
        let (r, id) = friction_report_with_identities(&rho_i, &si, &rho_a, &rho_a, &sf).unwrap();
        assert_abs_diff_eq!(r.w_fric, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.delta_s_d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.d_tau_a, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.delta, 0.0, epsilon = 1e-10);
        assert!(id.max_abs() < 1e-10);
        assert!(r.w_a >= r.w_opt - 1e-10);
    }

    #[test]
    fn optimal_work_with_maximally_mixed_start() {
        let si = spec(4, 1.0, 1.5);
        let sf = spec(4, 1.0, 3.5);
        let m = DensityMatrix::maximally_mixed(16, StateRole::Initial);
        let t = effective_temperature(&m, &sf).unwrap();
        assert_eq!(t, f64::INFINITY);
        assert_abs_diff_eq!(optimal_work(&m, &si, &sf, t).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_diagonal_reference_rejected() {
        let si = spec(1, 0.0, 1.5);
        let plus = DensityMatrix::pure(&DVector::from_vec(vec![Complex64::new(1.0, 0.0); 2]), StateRole::Adiabatic).unwrap();
        let err = friction_report(&plus, &si, &plus, &plus, &si).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
