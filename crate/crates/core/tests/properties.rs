mod common;

use common::{even_parity_ed_spectrum, even_parity_mode_spectrum, max_abs_diff};
use frictionwork::chain::{build_hamiltonian, diagonalize, ChainParams};
use frictionwork::dynamics::{EvolutionConfig, RampProtocol};
use frictionwork::observables::free_energy;
use frictionwork::sweep::{Engine, PointSpec, Solver};
use frictionwork::thermal::{gibbs_populations, log_partition, DensityMatrix, StateRole};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn point(n: usize, l: f64, t_i: f64, dh: f64, tau: f64) -> PointSpec {
    PointSpec {
        params: ChainParams::new(n, 1.0, l).unwrap(),
        protocol: RampProtocol::linear(1.5, dh, tau).unwrap(),
        t_i,
        evolution: EvolutionConfig::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ledger_identities_hold_on_small_chains(
        n in 2usize..=4,
        l in 0.0f64..1.5,
        t_i in 0.3f64..5.0,
        dh in 0.5f64..3.0,
        tau in 0.05f64..3.0,
    ) {
        let r = Engine::new(1).evaluate(&point(n, l, t_i, dh, tau), Solver::Exact).unwrap();
        let rep = r.report;
        let id = r.diagnostics.unwrap().identities;
        prop_assert!(id.max_abs() < 1e-8, "{id:?}");
        prop_assert!((rep.w_fric - (rep.w_tau - rep.w_a)).abs() < 1e-10);
        prop_assert!(rep.w_fric >= -1e-8, "W_fric {}", rep.w_fric);
        prop_assert!(rep.delta_s_d >= -1e-9);
        prop_assert!(rep.d_tau_a >= -1e-10 && rep.d_diag_a >= -1e-10);
        prop_assert!((rep.t_a_delta_s_d - rep.t_a * rep.delta_s_d).abs() < 1e-12);
    }

    #[test]
    fn gibbs_state_minimizes_free_energy(
        n in 1usize..=3,
        h in -2.0f64..2.0,
        l in 0.0f64..1.0,
        t in 0.2f64..4.0,
        seed in prop::collection::vec(-1.0f64..1.0, 128),
    ) {
        let params = ChainParams::new(n, 1.0, l).unwrap();
        let spec = diagonalize(&build_hamiltonian(&params, h).unwrap()).unwrap();
        let d = spec.dim();
        let a = DMatrix::from_fn(d, d, |i, j| Complex64::new(seed[(i * d + j) % 128], seed[(i * d + j + 64) % 128]));
        let m = &a * a.adjoint();
        let rho = DensityMatrix::new(&m / m.trace(), StateRole::Evolved).unwrap();
        let f_min = -t * log_partition(spec.eigenvalues(), t).unwrap();
        let f = free_energy(&rho, &spec, t).unwrap();
        prop_assert!(f >= f_min - 1e-10, "F(rho) {f} below -T ln Z {f_min}");
    }

    #[test]
    fn gibbs_populations_are_normalized_and_ordered(
        energies in prop::collection::vec(-5.0f64..5.0, 1..20),
        t in 0.05f64..10.0,
    ) {
        let p = gibbs_populations(&energies, t).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..energies.len() {
            for j in 0..energies.len() {
                if energies[i] < energies[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn even_parity_block_matches_mode_spectrum(
        n in prop::sample::select(vec![4usize, 6, 8]),
        g in 0.3f64..2.0,
        h in 0.05f64..3.0,
    ) {
        let ed = even_parity_ed_spectrum(n, g, h);
        let ff = even_parity_mode_spectrum(n, g, h);
        prop_assert!(max_abs_diff(&ed, &ff) < 1e-9 * (g + h) * n as f64);
    }

    #[test]
    fn ground_energy_matches_modes(
        n in prop::sample::select(vec![4usize, 6]),
        g in 0.3f64..2.0,
        h in 0.05f64..3.0,
    ) {
        let params = ChainParams::new(n, g, 0.0).unwrap();
        let spec = diagonalize(&build_hamiltonian(&params, h).unwrap()).unwrap();
        let e0 = even_parity_mode_spectrum(n, g, h)[0];
        prop_assert!((spec.ground_energy() - e0).abs() < 1e-9 * (g + h) * n as f64);
    }
}
