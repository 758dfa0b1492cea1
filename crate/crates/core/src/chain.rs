//! Transverse-field Ising chain with a longitudinal field, periodic boundaries.
//!
//! `H(h) = -g sum_j X_j X_{j+1} - h sum_j Z_j + L sum_j X_j`, with `X_{N+1} = X_1`.
//!
//! Basis convention: site 1 is the leftmost factor of every tensor product and
//! therefore the most significant bit of a computational-basis index. Bit value
//! 0 is the `Z = +1` state.

use std::collections::BTreeMap;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Largest chain built densely unless a caller raises the limit explicitly.
pub const DEFAULT_MAX_SITES: usize = 12;

/// Relative tolerance under which two eigenvalues are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_sites: usize,
    /// Ising coupling `g`; sets the energy unit.
    pub coupling: f64,
    /// Longitudinal field `L`; zero is the integrable point.
    pub longitudinal: f64,
}

impl ChainParams {
    pub fn new(n_sites: usize, coupling: f64, longitudinal: f64) -> Result<Self> {
        let p = ChainParams {
            n_sites,
            coupling,
            longitudinal,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::domain("chain needs at least one site"));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::domain(format!("coupling must be positive, got {}", self.coupling)));
        }
        if !(self.longitudinal.is_finite() && self.longitudinal >= 0.0) {
            return Err(Error::domain(format!(
                "longitudinal field must be non-negative, got {}",
                self.longitudinal
            )));
        }
        Ok(())
    }

    /// Hilbert-space dimension `2^N`, refusing sizes above `max_sites`.
    pub fn dense_dim(&self, max_sites: usize) -> Result<usize> {
        self.validate()?;
        if self.n_sites > max_sites || self.n_sites >= usize::BITS as usize - 1 {
            return Err(Error::Capacity {
                n_sites: self.n_sites,
                max_sites,
            });
        }
        Ok(1usize << self.n_sites)
    }

    pub fn is_integrable(&self) -> bool {
        self.longitudinal == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if !dim.is_power_of_two() {
            return Err(Error::domain(format!("operator dimension {dim} is not a power of two")));
        }
        let scale = linalg::max_abs(&matrix);
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            for i in 0..=j {
                worst = worst.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if worst > 1e-12 * scale {
            return Err(Error::Numerical {
                what: "hermiticity",
                residual: worst,
                tolerance: 1e-12 * scale,
            });
        }
        Ok(HermitianOperator { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Assemble from parts the caller guarantees are sorted and orthonormal.
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        debug_assert_eq!(eigenvalues.len(), eigenvectors.ncols());
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()))
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V diag(E) V^dag`.
    pub fn reconstruct(&self) -> CMatrix {
        linalg::reconstruct(&self.eigenvectors, &self.eigenvalues)
    }

    /// Index ranges of (near-)degenerate eigenvalue blocks, in ascending order.
    pub fn degenerate_blocks(&self) -> Vec<Range<usize>> {
        degenerate_blocks(&self.eigenvalues, DEGENERACY_TOL * self.spectral_radius())
    }

    /// Populations `<n|rho|n>` in this basis.
    pub fn populations_of(&self, rho: &CMatrix) -> Vec<f64> {
        linalg::diagonal_in_basis(rho, &self.eigenvectors)
    }

    /// `V^dag A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }
}

pub(crate) fn degenerate_blocks(sorted: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] > tol {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        let m = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -i, i, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &m)
    }
}

/// Dense Pauli string by iterated tensor products. `ops` pairs a 1-based site
/// with its Pauli; unlisted sites carry the identity.
pub fn pauli_string(n_sites: usize, ops: &[(usize, Pauli)]) -> CMatrix {
    let mut out = CMatrix::from_element(1, 1, ONE);
    for site in 1..=n_sites {
        let mut factor = Pauli::I.matrix();
        for &(_, p) in ops.iter().filter(|(s, _)| *s == site) {
            factor = factor * p.matrix();
        }
        out = linalg::kron(&out, &factor);
    }
    out
}

/// The Hamiltonian in structured form: a diagonal `Z`-sum plus real bit-flip
/// terms. Used both for dense assembly and for matrix-free application inside
/// the propagators.
#[derive(Clone, Debug)]
pub struct IsingTerms {
    n_sites: usize,
    /// `sum_j Z_j` on each basis state.
    z_sum: Vec<f64>,
    /// Constant diagonal shift (the `N = 1` periodic bond gives `-g I`).
    constant: f64,
    /// `(flip mask, coefficient)` pairs, merged and sorted by mask.
    flips: Vec<(usize, f64)>,
}

impl IsingTerms {
    pub fn new(params: &ChainParams, max_sites: usize) -> Result<Self> {
        let dim = params.dense_dim(max_sites)?;
        let n = params.n_sites;
        let bit = |site: usize| 1usize << (n - site);

        let z_sum = (0..dim)
            .map(|r| {
                let ones = (r as u64).count_ones() as f64;
                n as f64 - 2.0 * ones
            })
            .collect();

        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = 0.0;
        for j in 1..=n {
            let next = if j == n { 1 } else { j + 1 };
            let mask = bit(j) ^ bit(next);
            if mask == 0 {
                constant -= params.coupling;
            } else {
                *merged.entry(mask).or_insert(0.0) -= params.coupling;
            }
        }
        if params.longitudinal != 0.0 {
            for j in 1..=n {
                *merged.entry(bit(j)).or_insert(0.0) += params.longitudinal;
            }
        }
        let flips = merged.into_iter().filter(|&(_, c)| c != 0.0).collect();
        Ok(IsingTerms {
            n_sites: n,
            z_sum,
            constant,
            flips,
        })
    }

    pub fn dim(&self) -> usize {
        self.z_sum.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn diagonal(&self, h: f64) -> impl Iterator<Item = f64> + '_ {
        self.z_sum.iter().map(move |&z| self.constant - h * z)
    }

    pub fn flips(&self) -> &[(usize, f64)] {
        &self.flips
    }

    /// Crude but rigorous bound on the spectral radius of `H(h)` (row-sum norm).
    pub fn norm_bound(&self, h: f64) -> f64 {
        let off: f64 = self.flips.iter().map(|(_, c)| c.abs()).sum();
        self.constant.abs() + h.abs() * self.n_sites as f64 + off
    }

    pub fn dense(&self, h: f64) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (r, d) in self.diagonal(h).enumerate() {
            m[(r, r)] = Complex64::new(d, 0.0);
        }
        for &(mask, c) in &self.flips {
            for r in 0..dim {
                m[(r, r ^ mask)] += Complex64::new(c, 0.0);
            }
        }
        m
    }

    /// `dst = H(h) src` on row-major interleaved complex storage (`2 * dim`
    /// doubles per row). `H` is real, so the product acts on re/im alike.
    pub(crate) fn apply_rows(&self, h: f64, src: &[f64], dst: &mut [f64]) {
        let dim = self.dim();
        let width = src.len() / dim;
        let diag: Vec<f64> = self.diagonal(h).collect();
        // column panels keep the rows touched by the flips cache-resident
        const PANEL: usize = 128;
        let mut start = 0;
        while start < width {
            let end = (start + PANEL).min(width);
            for (r, &d) in diag.iter().enumerate() {
                let base = r * width;
                let out = &mut dst[base + start..base + end];
                let own = &src[base + start..base + end];
                for (o, &s) in out.iter_mut().zip(own) {
                    *o = d * s;
                }
                for &(mask, c) in &self.flips {
                    let q = (r ^ mask) * width;
                    let other = &src[q + start..q + end];
                    for (o, &s) in out.iter_mut().zip(other) {
                        *o += c * s;
                    }
                }
            }
            start = end;
        }
    }
}

pub fn build_hamiltonian(params: &ChainParams, h: f64) -> Result<HermitianOperator> {
    build_hamiltonian_with_limit(params, h, DEFAULT_MAX_SITES)
}

pub fn build_hamiltonian_with_limit(params: &ChainParams, h: f64, max_sites: usize) -> Result<HermitianOperator> {
    if !h.is_finite() {
        return Err(Error::domain(format!("transverse field must be finite, got {h}")));
    }
    let terms = IsingTerms::new(params, max_sites)?;
    HermitianOperator::from_matrix(terms.dense(h))
}

/// One-site translation `T |s_1 .. s_N> = |s_N s_1 .. s_{N-1}>` as a permutation matrix.
pub fn translation_operator(n_sites: usize) -> CMatrix {
    let dim = 1usize << n_sites;
    let mut t = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        // site k sits at bit n-k; shifting every site by one is a right rotation
        let low = r & 1;
        let image = (r >> 1) | (low << (n_sites - 1));
        t[(image, r)] = ONE;
    }
    t
}

/// Spectral decomposition with deterministic eigenvectors inside degenerate
/// blocks (see [`canonicalize_block`]).
pub fn diagonalize(op: &HermitianOperator) -> Result<SpectralDecomposition> {
    let (eigenvalues, mut eigenvectors) = linalg::eigh(op.matrix())?;
    let radius = eigenvalues.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()));
    for block in degenerate_blocks(&eigenvalues, DEGENERACY_TOL * radius) {
        canonicalize_block(&mut eigenvectors, block);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Replace the columns in `block` by a basis of the same subspace that depends
/// only on the subspace: successive projections of the standard basis vectors,
/// Gram-Schmidt orthonormalized, ordered by pivot index. Each vector's pivot
/// component comes out real and positive.
fn canonicalize_block(vectors: &mut CMatrix, block: Range<usize>) {
    let dim = vectors.nrows();
    let width = block.len();
    let span: Vec<_> = block.clone().map(|k| vectors.column(k).clone_owned()).collect();
    let mut chosen: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(width);
    for pivot in 0..dim {
        if chosen.len() == width {
            break;
        }
        let mut v = nalgebra::DVector::<Complex64>::zeros(dim);
        for u in &span {
            v.axpy(u[pivot].conj(), u, ONE);
        }
        for _ in 0..2 {
            for c in &chosen {
                let overlap = c.dotc(&v);
                v.axpy(-overlap, c, ONE);
            }
        }
        let norm = v.norm();
        if norm > 1e-4 {
            v.unscale_mut(norm);
            let phase = v[pivot];
            if phase.norm() > 0.0 {
                v *= phase.conj() / phase.norm();
            }
            chosen.push(v);
        }
    }
    debug_assert_eq!(chosen.len(), width, "degenerate block lost rank");
    for (k, v) in block.zip(chosen) {
        vectors.set_column(k, &v);
    }
}
