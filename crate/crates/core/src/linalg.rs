//! Dense complex matrix helpers shared by the physics modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm of `m - m^dag`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Kronecker product with `a` acting on the more significant index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `|U^dag U - I|_F`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let mut g = u.adjoint() * u;
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    frobenius(&g)
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Real symmetric input takes the cheaper real path; the returned vectors are
/// then real as well.
pub(crate) fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    eigh_scaled(m, max_abs(m))
}

/// As [`eigh`], with the residual judged against `scale` instead of the
/// matrix's own magnitude (for sub-blocks of a larger operator).
pub(crate) fn eigh_scaled(m: &CMatrix, scale: f64) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let (values, vectors) = if is_real(m) {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::try_new(re, f64::EPSILON, 0).ok_or(Error::Numerical {
            what: "real symmetric eigensolver convergence",
            residual: f64::NAN,
            tolerance: f64::EPSILON,
        })?;
        (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::Numerical {
            what: "hermitian eigensolver convergence",
            residual: f64::NAN,
            tolerance: f64::EPSILON,
        })?;
        (eig.eigenvalues, eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted_values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted_vectors.set_column(dst, &vectors.column(src));
    }

    // Residual report: |A V - V E|_F relative to the operator scale.
    let mut av = m * &sorted_vectors;
    for (j, &e) in sorted_values.iter().enumerate() {
        let col = sorted_vectors.column(j) * Complex64::new(e, 0.0);
        let mut dst = av.column_mut(j);
        dst -= col;
    }
    let residual = frobenius(&av) / (scale * n as f64);
    if !residual.is_finite() || residual > 1e-10 {
        return Err(Error::Numerical {
            what: "eigen-decomposition residual",
            residual,
            tolerance: 1e-10,
        });
    }
    Ok((sorted_values, sorted_vectors))
}

/// `x ln x` with the `0 ln 0 = 0` convention.
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats of a (possibly slightly negative-clamped) distribution.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}

/// `V diag(d) V^dag`.
pub(crate) fn reconstruct(vectors: &CMatrix, diag: &[f64]) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &d) in diag.iter().enumerate() {
        scaled.column_mut(j).scale_mut(d);
    }
    let out = &scaled * vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    out
}

/// Diagonal of `V^dag A V` without forming the full product.
pub(crate) fn diagonal_in_basis(a: &CMatrix, vectors: &CMatrix) -> Vec<f64> {
    let av = a * vectors;
    (0..vectors.ncols())
        .map(|j| vectors.column(j).dotc(&av.column(j)).re)
        .collect()
}
