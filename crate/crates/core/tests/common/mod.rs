#![allow(dead_code)]

use frictionwork::chain::{build_hamiltonian, ChainParams};
use frictionwork::fermion::mode_spectrum;
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues of the chain restricted to states with `prod_j Z_j = +1`,
/// ascending.
pub fn even_parity_ed_spectrum(n: usize, g: f64, h: f64) -> Vec<f64> {
    let params = ChainParams::new(n, g, 0.0).unwrap();
    let m = build_hamiltonian(&params, h).unwrap().into_matrix();
    let even: Vec<usize> = (0..m.nrows()).filter(|s| s.count_ones() % 2 == 0).collect();
    let block = DMatrix::from_fn(even.len(), even.len(), |i, j| {
        let z = m[(even[i], even[j])];
        assert!(z.im.abs() < 1e-14);
        z.re
    });
    let mut e: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Many-body energies `sum_k omega_k (n_k - 1/2)` over every even-occupation
/// configuration of the antiperiodic modes, ascending.
pub fn even_parity_mode_spectrum(n: usize, g: f64, h: f64) -> Vec<f64> {
    let params = ChainParams::new(n, g, 0.0).unwrap();
    let omegas: Vec<f64> = mode_spectrum(&params, h).unwrap().iter().map(|m| m.omega_f).collect();
    let e0 = -0.5 * omegas.iter().sum::<f64>();
    let mut e: Vec<f64> = (0u32..1 << n)
        .filter(|occ| occ.count_ones() % 2 == 0)
        .map(|occ| e0 + (0..n).filter(|k| occ >> k & 1 == 1).map(|k| omegas[k]).sum::<f64>())
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
