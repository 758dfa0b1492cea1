//! Density matrices, Gibbs states, entropies and temperature inversion.
//!
//! Temperatures are plain `f64` in units of `g`. `f64::INFINITY` stands for the
//! infinite-temperature state and `0.0` for the zero-temperature limit; the
//! latter is only ever returned by [`effective_temperature`], never accepted by
//! [`gibbs_state`].

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::chain::SpectralDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues below this are a hard positivity violation.
pub const PSD_ERROR_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateRole {
    Initial,
    Evolved,
    Adiabatic,
    Thermal,
    DiagonalProjected,
}

/// Hermitian, unit-trace, positive semidefinite matrix. The spectrum is
/// computed on first use, or seeded when the state was built from one.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
    role: StateRole,
    spectrum: OnceLock<Arc<SpectralDecomposition>>,
    /// The spectrum was supplied rather than computed, so its eigenvalues are
    /// exact populations (no solver noise on the small ones).
    exact_spectrum: bool,
}

impl DensityMatrix {
    /// Validating constructor: Hermiticity, trace and positivity are all checked.
    pub fn new(matrix: CMatrix, role: StateRole) -> Result<Self> {
        let rho = Self::unchecked_hermitian(matrix, role)?;
        let min = rho.spectrum()?.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::Numerical {
                what: "density matrix positivity",
                residual: -min,
                tolerance: 1e-10,
            });
        }
        Ok(rho)
    }

    /// Checks Hermiticity and trace; positivity is left to the caller's
    /// construction (unitary conjugation, projection).
    pub(crate) fn unchecked_hermitian(matrix: CMatrix, role: StateRole) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        let herm = linalg::hermiticity_residual(&matrix);
        if herm > 1e-10 {
            return Err(Error::Numerical {
                what: "density matrix hermiticity",
                residual: herm,
                tolerance: 1e-10,
            });
        }
        // exact Hermitian part, so downstream eigensolvers see a clean input
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Numerical {
                what: "density matrix trace",
                residual: (tr - 1.0).abs(),
                tolerance: TRACE_TOL,
            });
        }
        Ok(DensityMatrix {
            matrix,
            role,
            spectrum: OnceLock::new(),
            exact_spectrum: false,
        })
    }

    /// `V diag(p) V^dag` from a known spectral form. `populations` must be a
    /// valid distribution; the spectrum is seeded from it.
    pub(crate) fn from_spectral(vectors: &CMatrix, populations: &PopulationDistribution, role: StateRole) -> Self {
        let p = populations.as_slice();
        let matrix = linalg::reconstruct(vectors, p);
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
        let mut sorted_vectors = CMatrix::zeros(vectors.nrows(), vectors.ncols());
        for (dst, &src) in order.iter().enumerate() {
            sorted_vectors.set_column(dst, &vectors.column(src));
        }
        let sorted: Vec<f64> = order.iter().map(|&k| p[k]).collect();
        let spectrum = OnceLock::new();
        let _ = spectrum.set(Arc::new(SpectralDecomposition::from_parts(sorted, sorted_vectors)));
        DensityMatrix {
            matrix,
            role,
            spectrum,
            exact_spectrum: true,
        }
    }

    pub fn maximally_mixed(dim: usize, role: StateRole) -> Self {
        let matrix = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        let spectrum = OnceLock::new();
        let _ = spectrum.set(Arc::new(SpectralDecomposition::from_parts(
            vec![1.0 / dim as f64; dim],
            CMatrix::identity(dim, dim),
        )));
        DensityMatrix {
            matrix,
            role,
            spectrum,
            exact_spectrum: true,
        }
    }

    pub fn pure(state: &nalgebra::DVector<Complex64>, role: StateRole) -> Result<Self> {
        let norm = state.norm();
        if !(norm > 0.0) {
            return Err(Error::domain("pure state must have non-zero norm"));
        }
        let v = state.unscale(norm);
        let matrix = &v * v.adjoint();
        DensityMatrix::new(matrix, role)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn role(&self) -> StateRole {
        self.role
    }

    pub fn with_role(mut self, role: StateRole) -> Self {
        self.role = role;
        self
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn has_exact_spectrum(&self) -> bool {
        self.exact_spectrum
    }

    /// Eigen-decomposition of the state, ascending.
    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let (values, vectors) = linalg::eigh(&self.matrix)?;
        let _ = self
            .spectrum
            .set(Arc::new(SpectralDecomposition::from_parts(values, vectors)));
        Ok(self.spectrum.get().expect("just set"))
    }

    /// Energy expectation `Tr[rho H]` for `H` given by its decomposition.
    pub fn energy(&self, hamiltonian: &SpectralDecomposition) -> Result<f64> {
        check_dim(self.dim(), hamiltonian.dim())?;
        let pops = hamiltonian.populations_of(&self.matrix);
        Ok(pops.iter().zip(hamiltonian.eigenvalues()).map(|(p, e)| p * e).sum())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Populations against a basis in ascending-energy order.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationDistribution(Vec<f64>);

impl PopulationDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::domain("empty population distribution"));
        }
        if let Some(&bad) = p.iter().find(|&&x| !(x >= -1e-12)) {
            return Err(Error::Numerical {
                what: "population positivity",
                residual: -bad,
                tolerance: 1e-12,
            });
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::Numerical {
                what: "population normalization",
                residual: (total - 1.0).abs(),
                tolerance: TRACE_TOL,
            });
        }
        Ok(PopulationDistribution(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        linalg::shannon_entropy(&self.0)
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::domain(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// Boltzmann weights for ascending `energies`, shifted by the ground energy.
pub fn gibbs_populations(energies: &[f64], t: f64) -> Result<Vec<f64>> {
    check_temperature(t)?;
    let n = energies.len() as f64;
    if t.is_infinite() {
        return Ok(vec![1.0 / n; energies.len()]);
    }
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = energies.iter().map(|&e| (-(e - e0) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

pub fn gibbs_state(spec: &SpectralDecomposition, t: f64) -> Result<DensityMatrix> {
    check_temperature(t)?;
    if t.is_infinite() {
        return Ok(DensityMatrix::maximally_mixed(spec.dim(), StateRole::Thermal));
    }
    let p = PopulationDistribution::new(gibbs_populations(spec.eigenvalues(), t)?)?;
    Ok(DensityMatrix::from_spectral(spec.eigenvectors(), &p, StateRole::Thermal))
}

/// `ln Z` for the shifted spectrum plus the shift, i.e. the true `ln Tr e^{-H/T}`.
pub fn log_partition(energies: &[f64], t: f64) -> Result<f64> {
    check_temperature(t)?;
    if t.is_infinite() {
        return Ok((energies.len() as f64).ln());
    }
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = energies.iter().map(|&e| (-(e - e0) / t).exp()).sum();
    Ok(z.ln() - e0 / t)
}

/// Entropy of the Gibbs distribution at temperature `t`.
pub fn thermal_entropy(energies: &[f64], t: f64) -> Result<f64> {
    Ok(linalg::shannon_entropy(&gibbs_populations(energies, t)?))
}

pub fn thermal_energy(energies: &[f64], t: f64) -> Result<f64> {
    let p = gibbs_populations(energies, t)?;
    Ok(p.iter().zip(energies).map(|(p, e)| p * e).sum())
}

/// Entropy of an eigenvalue list with the clamping rule: values in
/// `[-1e-8, 0)` count as zero, anything lower is an error.
pub(crate) fn spectrum_entropy(values: &[f64]) -> Result<f64> {
    if let Some(&bad) = values.iter().find(|&&x| x < -PSD_ERROR_TOL) {
        return Err(Error::Numerical {
            what: "density matrix positivity",
            residual: -bad,
            tolerance: PSD_ERROR_TOL,
        });
    }
    Ok(-values.iter().map(|&x| linalg::xlnx(x.max(0.0))).sum::<f64>())
}

/// `S(rho) = -Tr[rho ln rho]` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    spectrum_entropy(rho.spectrum()?.eigenvalues())
}

/// Pinching of `rho` onto the eigenspaces of `basis`, with the populations of
/// the result. Inside degenerate blocks the block of `rho` is diagonalized, so
/// the populations do not depend on the arbitrary choice of eigenvectors there;
/// each block's populations are listed in descending order.
pub fn project_diagonal(
    rho: &DensityMatrix,
    basis: &SpectralDecomposition,
) -> Result<(DensityMatrix, PopulationDistribution)> {
    check_dim(rho.dim(), basis.dim())?;
    let (vectors, pops) = pinched_populations(rho.matrix(), basis)?;
    let pops = PopulationDistribution::new(pops)?;
    let projected = DensityMatrix::from_spectral(&vectors, &pops, StateRole::DiagonalProjected);
    Ok((projected, pops))
}

/// Populations of the pinched state and the (block-rotated) basis they refer to.
pub(crate) fn pinched_populations(rho: &CMatrix, basis: &SpectralDecomposition) -> Result<(CMatrix, Vec<f64>)> {
    let in_basis = basis.to_eigenbasis(rho);
    let mut vectors = basis.eigenvectors().clone();
    let mut pops: Vec<f64> = (0..basis.dim()).map(|k| in_basis[(k, k)].re).collect();
    for block in basis.degenerate_blocks().into_iter().filter(|b| b.len() > 1) {
        let w = block.len();
        let sub = in_basis.view((block.start, block.start), (w, w)).clone_owned();
        let (mut values, mut rot) = linalg::eigh_scaled(&sub, 1.0)?;
        values.reverse();
        let cols: Vec<usize> = (0..w).rev().collect();
        rot = CMatrix::from_fn(w, w, |i, j| rot[(i, cols[j])]);
        let old = basis.eigenvectors().columns(block.start, w).clone_owned();
        let new = old * rot;
        for j in 0..w {
            vectors.set_column(block.start + j, &new.column(j));
            pops[block.start + j] = values[j];
        }
    }
    for p in pops.iter_mut() {
        if *p < 0.0 && *p > -1e-12 {
            *p = 0.0;
        }
    }
    Ok((vectors, pops))
}

/// Diagonal entropy `S(rho^diag)` with respect to `basis`.
pub fn diagonal_entropy(rho: &DensityMatrix, basis: &SpectralDecomposition) -> Result<f64> {
    check_dim(rho.dim(), basis.dim())?;
    let (_, pops) = pinched_populations(rho.matrix(), basis)?;
    spectrum_entropy(&pops)
}

const BRACKET_START: (f64, f64) = (1e-3, 1e3);
const BRACKET_LIMIT: (f64, f64) = (1e-6, 1e6);

/// Bisection in `ln T` for a quantity increasing in `T`.
fn invert_monotone(what: &'static str, target: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = BRACKET_START;
    while f(lo)? > target {
        if lo <= BRACKET_LIMIT.0 {
            return Err(Error::Bracket {
                what,
                target,
                low: f(lo)?,
                high: f(hi)?,
            });
        }
        lo = (lo / 10.0).max(BRACKET_LIMIT.0);
    }
    while f(hi)? < target {
        if hi >= BRACKET_LIMIT.1 {
            return Err(Error::Bracket {
                what,
                target,
                low: f(lo)?,
                high: f(hi)?,
            });
        }
        hi = (hi * 10.0).min(BRACKET_LIMIT.1);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if f(mid.exp())? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = (0.5 * (a + b)).exp();
    let miss = (f(t)? - target).abs();
    if miss > tol {
        return Err(Error::Numerical {
            what,
            residual: miss,
            tolerance: tol,
        });
    }
    Ok(t)
}

/// Temperature of the Gibbs state of `spec_f` whose entropy equals `S(target)`.
pub fn effective_temperature(target: &DensityMatrix, spec_f: &SpectralDecomposition) -> Result<f64> {
    check_dim(target.dim(), spec_f.dim())?;
    temperature_for_entropy(von_neumann_entropy(target)?, spec_f.eigenvalues())
}

/// Inverse of [`thermal_entropy`]; `0.0` and `INFINITY` at the two ends.
pub fn temperature_for_entropy(entropy: f64, energies: &[f64]) -> Result<f64> {
    let s_max = (energies.len() as f64).ln();
    if entropy <= 1e-12 {
        return Ok(0.0);
    }
    if entropy >= s_max - 1e-12 {
        return Ok(f64::INFINITY);
    }
    invert_monotone("effective temperature", entropy, 1e-10, |t| thermal_entropy(energies, t))
}

/// Temperature of the Gibbs state of `spec_f` with the same mean energy as
/// `target`. Diagnostic only.
pub fn mean_energy_temperature(target: &DensityMatrix, spec_f: &SpectralDecomposition) -> Result<f64> {
    check_dim(target.dim(), spec_f.dim())?;
    temperature_for_energy(target.energy(spec_f)?, spec_f.eigenvalues())
}

pub fn temperature_for_energy(energy: f64, energies: &[f64]) -> Result<f64> {
    let e_inf = energies.iter().sum::<f64>() / energies.len() as f64;
    let scale = energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    if energy <= energies[0] + 1e-12 * scale {
        return Ok(0.0);
    }
    if energy >= e_inf - 1e-12 * scale {
        return Ok(f64::INFINITY);
    }
    invert_monotone("mean-energy temperature", energy, 1e-9 * scale, |t| thermal_energy(energies, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::chain::{build_hamiltonian, diagonalize, ChainParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn identity_like(dim: usize) -> CMatrix {
        CMatrix::from_diagonal_element(dim, dim, ONE)
    }

    fn spec(n: usize, l: f64, h: f64) -> SpectralDecomposition {
        let p = ChainParams::new(n, 1.0, l).unwrap();
        diagonalize(&build_hamiltonian(&p, h).unwrap()).unwrap()
    }

    fn z_basis() -> SpectralDecomposition {
        // H = -Z: ascending order puts |0> first
        SpectralDecomposition::from_parts(vec![-1.0, 1.0], identity_like(2))
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let s = spec(3, 0.5, 1.5);
        let rho = gibbs_state(&s, f64::INFINITY).unwrap();
        let expected = identity_like(8) * Complex64::new(0.125, 0.0);
        assert!(linalg::frobenius(&(rho.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn two_level_boltzmann_ratio() {
        let s = spec(1, 0.0, 1.5);
        let rho = gibbs_state(&s, 3.0).unwrap();
        let p = s.populations_of(rho.matrix());
        assert_abs_diff_eq!(p[0], 0.7310585786300049, epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 0.5822031088882179, epsilon = 1e-12);
    }

    #[test]
    fn gibbs_entropy_increases_with_temperature() {
        let s = spec(4, 1.0, 1.5);
        let grid: Vec<f64> = (0..40).map(|k| 0.05 * 1.2f64.powi(k)).collect();
        let entropies: Vec<f64> = grid.iter().map(|&t| von_neumann_entropy(&gibbs_state(&s, t).unwrap()).unwrap()).collect();
        assert!(entropies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let p = ChainParams::new(5, 1.0, 0.8).unwrap();
        let h = build_hamiltonian(&p, 1.5).unwrap();
        let s = diagonalize(&h).unwrap();
        let rho = gibbs_state(&s, 0.7).unwrap();
        let c = linalg::commutator(rho.matrix(), h.matrix());
        assert!(linalg::frobenius(&c) <= 1e-10 * linalg::frobenius(h.matrix()));
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        let s = spec(2, 0.0, 1.5);
        assert!(matches!(gibbs_state(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(gibbs_state(&s, -1.0), Err(Error::Domain(_))));
        assert!(gibbs_state(&s, f64::NAN).is_err());
    }

    #[test]
    fn entropy_extremes() {
        let mixed = DensityMatrix::maximally_mixed(256, StateRole::Thermal);
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 5.545177444479562, epsilon = 1e-12);
        let psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let pure = DensityMatrix::pure(&psi, StateRole::Initial).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_eigenvalue_is_an_error() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.1, 0.0), Complex64::new(-0.1, 0.0)]));
        assert!(DensityMatrix::new(m.clone(), StateRole::Initial).is_err());
        let rho = DensityMatrix::unchecked_hermitian(m, StateRole::Initial).unwrap();
        assert!(von_neumann_entropy(&rho).is_err());
    }

    #[test]
    fn plus_state_projects_to_half_half() {
        let s = 0.5f64.sqrt();
        let plus = DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
        let rho = DensityMatrix::pure(&plus, StateRole::Evolved).unwrap();
        let (proj, pops) = project_diagonal(&rho, &z_basis()).unwrap();
        assert_abs_diff_eq!(pops.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pops.as_slice()[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(diagonal_entropy(&rho, &z_basis()).unwrap(), 2f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(von_neumann_entropy(&proj).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn projection_of_diagonal_state_is_identity() {
        let s = spec(4, 1.0, 1.5);
        let rho = gibbs_state(&s, 2.0).unwrap();
        let (proj, _) = project_diagonal(&rho, &s).unwrap();
        assert!(linalg::frobenius(&(proj.matrix() - rho.matrix())) < 1e-12);
        assert_abs_diff_eq!(
            diagonal_entropy(&rho, &s).unwrap(),
            von_neumann_entropy(&rho).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn projection_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(4, StateRole::Initial);
        assert!(matches!(
            project_diagonal(&rho, &z_basis()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn effective_temperature_round_trip() {
        let s = spec(6, 1.0, 1.5);
        for &t in &[0.3, 1.0, 3.0, 17.0] {
            let rho = gibbs_state(&s, t).unwrap();
            let ta = effective_temperature(&rho, &s).unwrap();
            assert!((ta - t).abs() < 1e-8 * t.max(1.0), "T={t} -> {ta}");
        }
        let mixed = DensityMatrix::maximally_mixed(64, StateRole::Adiabatic);
        assert_eq!(effective_temperature(&mixed, &s).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_entropy_gives_zero_temperature() {
        let psi = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let rho = DensityMatrix::pure(&psi, StateRole::Adiabatic).unwrap();
        assert_eq!(effective_temperature(&rho, &z_basis()).unwrap(), 0.0);
    }

    #[test]
    fn mean_energy_temperature_of_gibbs_state() {
        let s = spec(5, 1.0, 1.5);
        let rho = gibbs_state(&s, 2.5).unwrap();
        let t = mean_energy_temperature(&rho, &s).unwrap();
        assert!((t - 2.5).abs() < 1e-6);
    }
}
