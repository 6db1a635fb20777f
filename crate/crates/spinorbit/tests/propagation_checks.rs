//! Cross-checks between independent propagation routes: polynomial
//! expansion against dense exponentials, stepped spin propagators against
//! closed rotations, and the factorized fast path against the generic one.

use proptest::prelude::*;

use spinorbit::coherent::SpinCoherentState;
use spinorbit::fock::{build_orbital_operators, coherent_parameter, coherent_state_fock};
use spinorbit::hamiltonian::{assemble_hamiltonian, HamiltonianTerm};
use spinorbit::linalg::{expm_minus_i_hermitian, hermitian_eig, max_abs_diff};
use spinorbit::propagate::{
    expmv_chebyshev, gershgorin_bounds, propagate_exact, propagate_factorized,
    spin_propagator_magnus, PropagationOptions,
};
use spinorbit::{
    CMat, CVec, Error, FockTruncation, HybridState, SphereDirection, SpinQuantumNumber,
    SpinRepresentation, C64,
};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rep(twice_s: u32) -> SpinRepresentation {
    SpinRepresentation::new(SpinQuantumNumber::new(twice_s).unwrap()).unwrap()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let raw = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&raw + raw.adjoint()) * C64::new(0.5, 0.0)
}

#[test]
fn chebyshev_expansion_matches_the_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(n, tau) in &[(8usize, 0.7), (24, -2.3), (40, 12.0), (64, -35.0)] {
        let h = random_hermitian(n, &mut rng);
        let v = CVec::from_fn(n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .normalize();
        let (e_min, e_max) = gershgorin_bounds(&h);
        let poly = expmv_chebyshev(&h, tau, &v, e_min, e_max).unwrap();
        let dense = expm_minus_i_hermitian(&h, tau) * &v;
        let d = (poly - dense).norm();
        assert!(d < 1e-11, "n = {n}, tau = {tau}: gap {d:.3e}");
    }
}

#[test]
fn chebyshev_bounds_are_safe_even_when_loose() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = random_hermitian(20, &mut rng);
    let v = CVec::from_fn(20, |_, _| C64::new(rng.random_range(-1.0..1.0), 0.0)).normalize();
    let (w, _) = hermitian_eig(&h);
    let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tight = expmv_chebyshev(&h, 3.0, &v, lo, hi).unwrap();
    let loose = expmv_chebyshev(&h, 3.0, &v, lo - 5.0, hi + 5.0).unwrap();
    assert!((tight - loose).norm() < 1e-11);
}

#[test]
fn stepped_spin_propagator_converges_at_second_order() {
    // Midpoint stepping has global error O(dt^2); quadrupling the substeps
    // divides the defect against a fine reference by about 16.
    let r = rep(7);
    let field = |t: f64| [0.8 * (1.3 * t).cos(), 0.8 * (1.3 * t).sin(), 0.4];
    let fine = spin_propagator_magnus(&r, &field, 0.0, 1.5, 4096);
    let coarse = spin_propagator_magnus(&r, &field, 0.0, 1.5, 32);
    let medium = spin_propagator_magnus(&r, &field, 0.0, 1.5, 128);
    let e_coarse = max_abs_diff(&coarse, &fine);
    let e_medium = max_abs_diff(&medium, &fine);
    let order = (e_coarse / e_medium).log2() / 2.0;
    assert!(
        (order - 2.0).abs() < 0.25,
        "order {order:.2} (errors {e_coarse:.3e}, {e_medium:.3e})"
    );
}

#[test]
fn constant_field_spin_propagator_is_exact_in_one_step() {
    let r = rep(9);
    let g = [0.4, -1.1, 0.8];
    let stepped = spin_propagator_magnus(&r, &|_| g, 0.0, 2.0, 1);
    let closed = expm_minus_i_hermitian(&r.component(g), 2.0);
    assert!(max_abs_diff(&stepped, &closed) < 1e-12);
}

#[test]
fn factorized_fast_path_matches_the_generic_propagator() {
    let hbar = 0.1;
    let fock = FockTruncation::new(16, hbar, 1.0).unwrap();
    let ops = build_orbital_operators(&fock);
    let r = rep(4);
    let h = assemble_hamiltonian(
        &ops,
        &r,
        vec![
            HamiltonianTerm::Oscillator { omega: 1.0 },
            HamiltonianTerm::SpinDriven {
                weight: [0.7, 0.0, 0.0],
                envelope: Box::new(|t: f64| (0.9 * t).cos()),
            },
            HamiltonianTerm::SpinConstant {
                weight: [0.0, 0.0, 0.5],
            },
        ],
    )
    .unwrap();
    let orb = coherent_state_fock(&fock, coherent_parameter(0.3, -0.1, hbar)).unwrap();
    let chi = SpinCoherentState::new(&r, SphereDirection::from_polar(0.9, 0.3)).unwrap();
    let psi0 = HybridState::from_product(&orb, chi.vec()).unwrap();
    let t_grid = vec![0.0, 0.5, 1.0];
    // The driven path refines by halving until the endpoint settles below the
    // self-check tolerance; start it near the converged resolution.
    let opts = PropagationOptions {
        substeps: 2048,
        ..Default::default()
    };
    let generic = propagate_exact(&h, &psi0, &t_grid, &opts).unwrap();
    let field = |t: f64| [0.7 * (0.9 * t).cos(), 0.0, 0.5];
    let h_orb = ops.oscillator_hamiltonian(1.0);
    let fast = propagate_factorized(&h_orb, &r, &field, hbar, &psi0, &t_grid, 2048).unwrap();
    for k in 0..t_grid.len() {
        let d = generic.states[k].distance(&fast.states[k]);
        assert!(d < 1e-6, "node {k}: {d:.3e}");
    }
}

#[test]
fn truncation_guard_reports_the_required_dimension() {
    let hbar = 0.05;
    let fock = FockTruncation::new(16, hbar, 1.0).unwrap();
    // |zeta|^2 = (q^2 + p^2) / (2 hbar) = 40, far beyond M / 4 = 3.
    let err = coherent_state_fock(&fock, coherent_parameter(2.0, 0.0, hbar)).unwrap_err();
    match err {
        Error::Truncation { required_m, .. } => {
            assert!(required_m > 12, "required_m = {required_m}");
        }
        other => panic!("expected a truncation error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn polynomial_route_agrees_on_random_spectra(
        seed in 0u64..1000,
        tau in -20.0f64..20.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(16, &mut rng);
        let v = CVec::from_fn(16, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }).normalize();
        let (e_min, e_max) = gershgorin_bounds(&h);
        let poly = expmv_chebyshev(&h, tau, &v, e_min, e_max).unwrap();
        let dense = expm_minus_i_hermitian(&h, tau) * &v;
        prop_assert!((&poly - dense).norm() < 1e-10);
        // The expansion is unitary to rounding: norms are preserved.
        prop_assert!((poly.norm() - 1.0).abs() < 1e-11);
    }
}
