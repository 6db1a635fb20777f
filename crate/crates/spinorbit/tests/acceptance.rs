//! End-to-end acceptance gate.
//!
//! Runs nine numbered release checks spanning the whole crate, from the
//! su(2) matrix layer up to the large-spin decoherence experiment, and
//! prints one PASS/FAIL line per check. The process exits non-zero if any
//! check fails, so `cargo test` treats the gate as a single test target
//! while the per-check lines stay visible in the log.

use std::time::Instant;

use spinorbit::ansatz::{ansatz_error_scan, compare_ansatz_to_exact};
use spinorbit::classical::{
    integrate_trajectory, perturbation_divergence, split_coupled_flow, PhasePoint,
    TrajectoryOptions,
};
use spinorbit::coherent::{
    adjoint_action, apply_spin_to_coherent, coherent_closed_form, covariant_symbol,
    overlap_magnitude, rotation_matrix, SpinCoherentState,
};
use spinorbit::dicke::{
    closed_kernel_purity, closed_kernel_purity_at_order, fit_purity_envelope, kick_unitary,
    DickeModel, KickFactorization,
};
use spinorbit::field::{CouplingField, OrbitalHamiltonian};
use spinorbit::fock::{build_orbital_operators, coherent_parameter, coherent_state_fock};
use spinorbit::hamiltonian::{
    assemble_hamiltonian, collective_coupling_rate, interaction_picture_coupling, HamiltonianTerm,
};
use spinorbit::linalg::{commutator, hermitian_eig, max_abs_diff, op_norm};
use spinorbit::propagate::{
    propagate_axis_coupled, propagate_exact, propagate_factorized, PropagationOptions,
};
use spinorbit::reduced::{
    bloch_vector, orbital_expectation, purity_and_entropy, reduced_spin_density,
};
use spinorbit::{
    CMat, FockTruncation, HybridState, SimulationScales, SphereDirection, SpinQuantumNumber,
    SpinRepresentation, C64,
};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let checks: &[(&str, fn() -> Result<String, String>)] = &[
        ("1 algebra suite", criterion_1),
        ("2 overlap law", criterion_2),
        ("3 time-only exactness", criterion_3),
        ("4 error scaling", criterion_4),
        ("5 coupling obstruction", criterion_5),
        ("6 trajectory separation", criterion_6),
        ("7 kick factorization", criterion_7),
        ("8 decoherence curve", criterion_8),
        ("9 numerical hygiene", criterion_9),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({detail}; {secs:.1}s)"),
            Err(detail) => {
                failures += 1;
                println!("criterion {name}: FAIL ({detail}; {secs:.1}s)");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} of 9 criteria FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria PASS");
}

fn rep(twice_s: u32) -> SpinRepresentation {
    SpinRepresentation::new(SpinQuantumNumber::new(twice_s).unwrap()).unwrap()
}

fn scales(hbar: f64, twice_s: u32) -> SimulationScales {
    SimulationScales::new(hbar, SpinQuantumNumber::new(twice_s).unwrap()).unwrap()
}

fn direction(theta: f64, phi: f64) -> SphereDirection {
    SphereDirection::from_polar(theta, phi)
}


/// su(2) commutators, ladder actions, rotated-frame closed forms and the
/// two-term coherent-state decomposition at seven spins.
fn criterion_1() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for twice_s in [1u32, 2, 3, 4, 10, 20, 50] {
        let r = rep(twice_s);
        let n_dim = r.spin().dimension() as f64;
        let tol = 1e-10 * n_dim;
        let s = r.spin().s();

        // Commutators [S1, S2] = i S3 and cyclic.
        let pairs = [
            (r.s1(), r.s2(), r.s3()),
            (r.s2(), r.s3(), r.s1()),
            (r.s3(), r.s1(), r.s2()),
        ];
        for (a, b, c) in pairs {
            let lhs = commutator(a, b);
            let rhs = c * C64::new(0.0, 1.0);
            let d = max_abs_diff(&lhs, &rhs);
            if d > tol {
                return Err(format!("commutator defect {d:.3e} at 2s = {twice_s}"));
            }
            worst = worst.max(d / n_dim);
        }

        // Ladder actions: integer products under the square root.
        let s_plus = r.s_plus();
        for k in 0..twice_s as usize {
            let expect = ((f64::from(twice_s) - k as f64) * (k as f64 + 1.0)).sqrt();
            let d = (s_plus[(k + 1, k)].re - expect).abs();
            if d > tol {
                return Err(format!("ladder entry defect {d:.3e} at 2s = {twice_s}"));
            }
            worst = worst.max(d / n_dim);
        }

        // Casimir S^2 = s (s + 1) I.
        let casimir = r.s1() * r.s1() + r.s2() * r.s2() + r.s3() * r.s3();
        let eye = CMat::identity(r.spin().dimension(), r.spin().dimension());
        let d = max_abs_diff(&casimir, &(eye * C64::new(s * (s + 1.0), 0.0)));
        if d > tol {
            return Err(format!("Casimir defect {d:.3e} at 2s = {twice_s}"));
        }

        for &(theta, phi) in &[(0.7, 0.3), (1.9, -1.2), (2.6, 2.8)] {
            let n = direction(theta, phi);

            // Rotated-frame closed forms against brute-force conjugation.
            let closed = adjoint_action(&r, &n).map_err(|e| e.to_string())?;
            let d_mat = rotation_matrix(&r, &n).map_err(|e| e.to_string())?;
            let ops = [r.s1(), r.s2(), r.s3()];
            for k in 0..3 {
                let brute = d_mat.adjoint() * ops[k] * &d_mat;
                let d = max_abs_diff(&closed[k], &brute);
                if d > tol {
                    return Err(format!(
                        "rotated-frame defect {d:.3e} at 2s = {twice_s}, component {}",
                        k + 1
                    ));
                }
                worst = worst.max(d / n_dim);
            }

            // Two-term decomposition self-check (errors on residual > 1e-10 s).
            apply_spin_to_coherent(&r, &n).map_err(|e| e.to_string())?;

            // Closed-form coherent coefficients against the rotation column.
            let closed_vec = coherent_closed_form(r.spin(), &n);
            let column = d_mat.column(0).into_owned();
            let d = (&closed_vec - &column).norm();
            if d > tol {
                return Err(format!("coherent closed form defect {d:.3e}"));
            }

            // Covariant symbol against the matrix element.
            let chi = SpinCoherentState::new(&r, n).map_err(|e| e.to_string())?;
            let field = [0.4, -0.9, 1.1];
            let g_dot_s = r.s1() * C64::new(field[0], 0.0)
                + r.s2() * C64::new(field[1], 0.0)
                + r.s3() * C64::new(field[2], 0.0);
            let matrix_side = chi.vec().dotc(&(&g_dot_s * chi.vec())).re;
            let symbol = covariant_symbol(field, n.chart().map_err(|e| e.to_string())?);
            let d = (matrix_side + s * symbol).abs();
            if d > tol {
                return Err(format!("covariant symbol defect {d:.3e} at 2s = {twice_s}"));
            }
        }
    }
    Ok(format!(
        "spins 1/2..25, worst scaled defect {worst:.2e} < 1e-10"
    ))
}

/// Overlap magnitude law at s = 10 on random direction pairs, plus the
/// orthogonal-direction special value 2^{-s}.
fn criterion_2() -> Result<String, String> {
    let r = rep(20);
    let spin = r.spin();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = direction(rng.random_range(0.05..3.05), rng.random_range(-3.1..3.1));
        let m = direction(rng.random_range(0.05..3.05), rng.random_range(-3.1..3.1));
        let a = SpinCoherentState::new(&r, n).map_err(|e| e.to_string())?;
        let b = SpinCoherentState::new(&r, m).map_err(|e| e.to_string())?;
        let matrix_side = a.vec().dotc(b.vec()).norm();
        let law = overlap_magnitude(spin, &n, &m);
        let d = (matrix_side - law).abs();
        worst = worst.max(d);
        if d > 1e-10 {
            return Err(format!("overlap defect {d:.3e}"));
        }
    }
    // Orthogonal directions: |n - m|^2 = 2, so the law gives exactly 2^{-s}.
    let north = SphereDirection::north();
    let east = SphereDirection::from_vector([1.0, 0.0, 0.0]).unwrap();
    let a = SpinCoherentState::new(&r, north).map_err(|e| e.to_string())?;
    let b = SpinCoherentState::new(&r, east).map_err(|e| e.to_string())?;
    let matrix_side = a.vec().dotc(b.vec()).norm();
    let expect = 0.5f64.powf(spin.s());
    let d = (matrix_side - expect).abs();
    if d > 1e-12 {
        return Err(format!("orthogonal overlap defect {d:.3e}"));
    }
    Ok(format!(
        "100 random pairs worst {worst:.2e} < 1e-10, orthogonal defect {d:.2e} < 1e-12"
    ))
}

/// Classical trajectory plus the matching product start state.
fn prepared_case(
    field: &CouplingField,
    sc: &SimulationScales,
    z0: (f64, f64),
    n0: &SphereDirection,
    t_grid: &[f64],
    substeps: usize,
    fock_dim: usize,
) -> Result<
    (
        spinorbit::classical::SemiclassicalTrajectory,
        HybridState,
        FockTruncation,
        SpinRepresentation,
    ),
    String,
> {
    let traj = integrate_trajectory(
        field,
        sc,
        &PhasePoint::new(vec![z0.0], vec![z0.1]).unwrap(),
        n0,
        t_grid,
        &TrajectoryOptions {
            substeps,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let fock = FockTruncation::new(fock_dim, sc.hbar(), 1.0).map_err(|e| e.to_string())?;
    let r = rep(sc.spin().twice_s());
    let orb = coherent_state_fock(&fock, coherent_parameter(z0.0, z0.1, sc.hbar()))
        .map_err(|e| e.to_string())?;
    let chi = SpinCoherentState::new(&r, *n0).map_err(|e| e.to_string())?;
    let psi0 = HybridState::from_product(&orb, chi.vec()).map_err(|e| e.to_string())?;
    Ok((traj, psi0, fock, r))
}

/// Time-only fields: the dressed product state reproduces the exact
/// evolution including its global phase.
fn criterion_3() -> Result<String, String> {
    let sc = scales(0.05, 16);
    let z0 = (0.3, 0.0);
    let n0 = direction(1.0, 0.5);
    let t_grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();

    // Case A: constant field along e3, generic dense propagation.
    let field_a =
        CouplingField::constant([0.0, 0.0, 1.3]).with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
    let (traj_a, psi0, fock, r) = prepared_case(&field_a, &sc, z0, &n0, &t_grid, 40, 32)?;
    let ops = build_orbital_operators(&fock);
    let h_a = assemble_hamiltonian(
        &ops,
        &r,
        vec![
            HamiltonianTerm::Oscillator { omega: 1.0 },
            HamiltonianTerm::SpinConstant {
                weight: [0.0, 0.0, 1.3],
            },
        ],
    )
    .map_err(|e| e.to_string())?;
    let run_a = propagate_exact(&h_a, &psi0, &t_grid, &PropagationOptions::default())
        .map_err(|e| e.to_string())?;
    let cmp_a =
        compare_ansatz_to_exact(&traj_a, &run_a.states, &fock, &r).map_err(|e| e.to_string())?;
    if cmp_a.max_distance > 1e-6 {
        return Err(format!(
            "constant-field distance {:.3e} exceeds 1e-6",
            cmp_a.max_distance
        ));
    }

    // Case B: rotating field, factorized orbital x spin propagation.
    let field_b =
        CouplingField::rotating(0.8, 1.1, 0.5).with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
    let (traj_b, psi0_b, fock_b, r_b) = prepared_case(&field_b, &sc, z0, &n0, &t_grid, 40, 32)?;
    let ops_b = build_orbital_operators(&fock_b);
    let h_orb = ops_b.oscillator_hamiltonian(1.0);
    let g = |t: f64| [0.8 * (1.1 * t).cos(), 0.8 * (1.1 * t).sin(), 0.5];
    let run_b = propagate_factorized(&h_orb, &r_b, &g, sc.hbar(), &psi0_b, &t_grid, 512)
        .map_err(|e| e.to_string())?;
    let cmp_b = compare_ansatz_to_exact(&traj_b, &run_b.states, &fock_b, &r_b)
        .map_err(|e| e.to_string())?;
    if cmp_b.max_distance > 1e-6 {
        return Err(format!(
            "rotating-field distance {:.3e} exceeds 1e-6",
            cmp_b.max_distance
        ));
    }
    Ok(format!(
        "max |ansatz - exact| constant {:.2e}, rotating {:.2e}, both < 1e-6 on t in [0,2]",
        cmp_a.max_distance, cmp_b.max_distance
    ))
}

/// Phase-free ansatz error 1 - |<ansatz, exact>| at t = 1 for a
/// position-dependent coupling. This overlap deficit scales linearly in
/// kappa = hbar s, hence like hbar^{1-delta} on a delta-ladder.
fn coupled_case_error(hbar: f64, twice_s: u32, fock_dim: usize, slope: f64) -> Result<f64, String> {
    let sc = scales(hbar, twice_s);
    let field = CouplingField::linear_in_q([slope, 0.0, 0.0], [0.0, 0.0, 1.0])
        .with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
    let t_grid = [0.0, 1.0];
    let n0 = direction(1.0, 0.5);
    let (traj, psi0, fock, r) =
        prepared_case(&field, &sc, (0.2, 0.0), &n0, &t_grid, 1000, fock_dim)?;
    let ops = build_orbital_operators(&fock);
    let h = assemble_hamiltonian(
        &ops,
        &r,
        vec![
            HamiltonianTerm::Oscillator { omega: 1.0 },
            HamiltonianTerm::PositionSpin {
                weight: [slope, 0.0, 0.0],
            },
            HamiltonianTerm::SpinConstant {
                weight: [0.0, 0.0, 1.0],
            },
        ],
    )
    .map_err(|e| e.to_string())?;
    let run = propagate_exact(
        &h,
        &psi0,
        &t_grid,
        &PropagationOptions {
            // Polynomial marching beats a dense eigensolve at these sizes.
            dense_eig_threshold: 0,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let cmp = compare_ansatz_to_exact(&traj, &run.states, &fock, &r).map_err(|e| e.to_string())?;
    Ok(*cmp.infidelity.last().unwrap())
}

/// Log-log error slopes across the two (hbar, s) ladders.
fn criterion_4() -> Result<String, String> {
    // s = floor(hbar^{-1/2}): target slope 1/2.
    let ladder_half: Vec<(f64, u32)> = vec![(0.05, 8), (0.02, 14), (0.01, 20), (0.005, 28)];
    let scan_half = ansatz_error_scan(&ladder_half, &|hbar, twice_s| {
        coupled_case_error(hbar, twice_s, 64, 1.0).map_err(spinorbit::Error::Validation)
    })
    .map_err(|e| e.to_string())?;
    let slope_half = scan_half.slope();
    if !(0.35..=0.65).contains(&slope_half) {
        return Err(format!(
            "slope {slope_half:.3} outside [0.35, 0.65] (errors {:?})",
            scan_half.errors
        ));
    }

    // s = floor(hbar^{-0.8}): target slope 1 - 0.8 = 0.2 within 0.15.
    // hbar stays at or above 0.02 so the spin dimension keeps N <= 61.
    let ladder_point8: Vec<(f64, u32)> = vec![(0.05, 20), (0.035, 28), (0.025, 38), (0.02, 44)];
    let scan_point8 = ansatz_error_scan(&ladder_point8, &|hbar, twice_s| {
        coupled_case_error(hbar, twice_s, 64, 1.0).map_err(spinorbit::Error::Validation)
    })
    .map_err(|e| e.to_string())?;
    let slope_point8 = scan_point8.slope();
    if (slope_point8 - 0.2).abs() > 0.15 {
        return Err(format!(
            "slope {slope_point8:.3} not within 0.2 +- 0.15 (errors {:?})",
            scan_point8.errors
        ));
    }
    Ok(format!(
        "slope at delta=1/2: {slope_half:.3} in [0.35,0.65]; at delta=0.8: {slope_point8:.3} in 0.2+-0.15"
    ))
}

/// Fixed kappa with a position-dependent coupling: the product ansatz stops
/// converging, while a time-only control stays exact.
fn criterion_5() -> Result<String, String> {
    let ladder: Vec<(f64, u32, usize)> = vec![
        (1.0 / 20.0, 20, 128),
        (1.0 / 40.0, 40, 192),
        (1.0 / 60.0, 60, 256),
        (1.0 / 80.0, 80, 256),
    ];
    let t_grid = [0.0, 1.0];
    let mut plateau = Vec::new();
    for &(hbar, twice_s, fock_dim) in &ladder {
        let sc = scales(hbar, twice_s);
        if (sc.kappa() - 0.5).abs() > 1e-12 {
            return Err(format!(
                "ladder point has kappa {} instead of 1/2",
                sc.kappa()
            ));
        }
        let field = CouplingField::linear_in_q([1.5, 0.0, 0.0], [0.0, 0.0, 0.0])
            .with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
        let n0 = SphereDirection::north();
        let (traj, psi0, fock, r) =
            prepared_case(&field, &sc, (0.2, 0.0), &n0, &t_grid, 1000, fock_dim)?;
        let ops = build_orbital_operators(&fock);
        let run = propagate_axis_coupled(&ops, &r, 1.0, [1.5, 0.0, 0.0], [0.0; 3], &psi0, &t_grid)
            .map_err(|e| e.to_string())?;
        let cmp =
            compare_ansatz_to_exact(&traj, &run.states, &fock, &r).map_err(|e| e.to_string())?;
        let err = *cmp.infidelity.last().unwrap();
        if err <= 0.05 {
            return Err(format!(
                "error {err:.3} at hbar {hbar:.4} fell below the 0.05 obstruction floor"
            ));
        }
        plateau.push(err);
    }

    // Control: a time-only field on the same (hbar, s) ladder stays exact.
    let mut control_worst: f64 = 0.0;
    for &(hbar, twice_s, _) in &ladder {
        let sc = scales(hbar, twice_s);
        let field = CouplingField::constant([0.0, 0.0, 1.3])
            .with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
        let n0 = direction(1.0, 0.5);
        let (traj, psi0, fock, r) =
            prepared_case(&field, &sc, (0.2, 0.0), &n0, &t_grid, 1000, 128)?;
        let ops = build_orbital_operators(&fock);
        let h_orb = ops.oscillator_hamiltonian(1.0);
        let g = |_t: f64| [0.0, 0.0, 1.3];
        let run = propagate_factorized(&h_orb, &r, &g, hbar, &psi0, &t_grid, 64)
            .map_err(|e| e.to_string())?;
        let cmp =
            compare_ansatz_to_exact(&traj, &run.states, &fock, &r).map_err(|e| e.to_string())?;
        control_worst = control_worst.max(*cmp.infidelity.last().unwrap());
    }
    if control_worst > 1e-7 {
        return Err(format!(
            "time-only control error {control_worst:.3e} exceeds 1e-7"
        ));
    }
    Ok(format!(
        "obstruction errors {:?} all > 0.05 at kappa = 1/2; control worst {control_worst:.2e} < 1e-7",
        plateau
            .iter()
            .map(|e| (e * 1e3).round() / 1e3)
            .collect::<Vec<_>>()
    ))
}

/// Coupled-minus-uncoupled trajectory separation: linear growth at rate
/// kappa ||G(0, X0)|| at short times, with a positive fitted constant across
/// the hbar ladder.
fn criterion_6() -> Result<String, String> {
    let field = CouplingField::linear_in_q([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        .with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
    let mut x0 = vec![0.4, 0.1];
    x0.extend_from_slice(&direction(1.0, 0.5).components());
    let t_grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.005).collect();

    // Short-time law at one representative scale.
    let sc = scales(0.02, 20);
    let (f, g) = split_coupled_flow(&field, &sc);
    let report = perturbation_divergence(&f, &g, sc.kappa(), &x0, &t_grid, 0.1)
        .map_err(|e| e.to_string())?;
    let ratio = report.fitted_slope / report.expected_slope;
    if !(0.9..=1.1).contains(&ratio) {
        return Err(format!(
            "separation slope ratio {ratio:.3} outside [0.9, 1.1]"
        ));
    }

    // Lower-bound form across the ladder at s = floor(hbar^{-0.7}):
    // separation(t*) = c t* hbar^{0.3} with one common positive c.
    let ladder: Vec<(f64, u32)> = vec![(0.05, 16), (0.02, 30), (0.01, 50), (0.005, 80)];
    let t_star = 0.1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(hbar, twice_s) in &ladder {
        let sc = scales(hbar, twice_s);
        let (f, g) = split_coupled_flow(&field, &sc);
        let report = perturbation_divergence(&f, &g, sc.kappa(), &x0, &t_grid, t_star)
            .map_err(|e| e.to_string())?;
        let sep = *report.separation.last().unwrap();
        if !(sep.is_finite() && sep > 0.0) {
            return Err(format!("degenerate separation {sep} at hbar {hbar}"));
        }
        xs.push(t_star * hbar.powf(0.3));
        ys.push(sep);
    }
    let c = spinorbit::fit::fit_through_origin(&xs, &ys);
    if !(c.is_finite() && c > 0.0) {
        return Err(format!("fitted separation constant {c} is not positive"));
    }
    Ok(format!(
        "short-time slope ratio {ratio:.3} in [0.9,1.1]; ladder constant c = {c:.3} > 0"
    ))
}

/// Both closed factorizations of the kicked propagator match direct
/// integration of the Schroedinger equation on the faithful subspace.
fn criterion_7() -> Result<String, String> {
    let hbar = 0.1;
    let twice_s = 3;
    let fock = FockTruncation::new(24, hbar, 1.0).map_err(|e| e.to_string())?;
    let ops = build_orbital_operators(&fock);
    let r = rep(twice_s);
    let sc = scales(hbar, twice_s);
    let n_spin = r.spin().dimension();
    let total = 24 * n_spin;
    // Truncating the commutator [x, p] leaves a defect in the top Fock
    // level, so the closed forms and the integrated propagator can only be
    // compared on columns that never reach it: the lower half of the basis.
    let low_cols = 12 * n_spin;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let g: f64 = rng.random_range(0.1..0.6);
        let omega: f64 = rng.random_range(0.7..1.5);
        let dt = 8e-3;
        let duration: f64 = rng.random_range(0.3..1.2);
        let steps = (duration / dt).round() as usize;
        let t_end = steps as f64 * dt;
        let lambda = g * (f64::from(twice_s) * hbar).sqrt() / 2.0;
        let model = DickeModel::new(sc, lambda, 0.0, omega).map_err(|e| e.to_string())?;
        if (model.coupling_rate() - g).abs() > 1e-12 {
            return Err("ensemble coupling rate failed to round-trip".into());
        }

        let h = interaction_picture_coupling(&ops, &r, g, omega).map_err(|e| e.to_string())?;
        // Direct route: classic fourth-order integration of V' = -i H(t) V
        // / hbar, restricted to the faithful columns from the start.
        let mut v = CMat::zeros(total, low_cols);
        for j in 0..low_cols {
            v[(j, j)] = C64::new(1.0, 0.0);
        }
        for k in 0..steps {
            let t = k as f64 * dt;
            let rhs = |t: f64, m: &CMat| -> CMat { h.at(t) * m * C64::new(0.0, -1.0 / hbar) };
            let k1 = rhs(t, &v);
            let k2 = rhs(t + 0.5 * dt, &(&v + &k1 * C64::new(0.5 * dt, 0.0)));
            let k3 = rhs(t + 0.5 * dt, &(&v + &k2 * C64::new(0.5 * dt, 0.0)));
            let k4 = rhs(t + dt, &(&v + &k3 * C64::new(dt, 0.0)));
            v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(dt / 6.0, 0.0);
        }

        let factors = model.kick_factors(t_end);
        for variant in [KickFactorization::Sequential, KickFactorization::Combined] {
            let u_closed = kick_unitary(&ops, &r, &factors, variant);
            let diff = u_closed.columns(0, low_cols) - &v;
            let d = op_norm(&diff);
            worst = worst.max(d);
            if d > 1e-8 {
                return Err(format!(
                    "trial {trial} ({variant:?}): restricted operator defect {d:.3e}"
                ));
            }
        }
    }
    Ok(format!(
        "10 random kick protocols, worst restricted operator defect {worst:.2e} < 1e-8"
    ))
}

/// Large-spin decoherence: measured purity starts pure, decays, follows the
/// inverse-square-root envelope, and matches the closed kernel.
fn criterion_8() -> Result<String, String> {
    let hbar = 0.01;
    let twice_s = 100;
    let fock_dim = 256;
    let lambda = 1.0;
    let omega_c = 1.0;
    let sc = scales(hbar, twice_s);
    if (sc.kappa() - 0.5).abs() > 1e-12 {
        return Err("kappa is not 1/2".into());
    }
    let g = collective_coupling_rate(lambda, hbar, twice_s);
    if (g - 2.0).abs() > 1e-12 {
        return Err(format!("collective coupling rate {g} is not 2"));
    }
    let model = DickeModel::new(sc, lambda, 0.0, omega_c).map_err(|e| e.to_string())?;

    // Initial direction at angle pi/4 from the kick axis e1.
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let n0 = SphereDirection::from_vector([half, 0.0, half]).unwrap();

    let fock = FockTruncation::new(fock_dim, hbar, omega_c).map_err(|e| e.to_string())?;
    let ops = build_orbital_operators(&fock);
    let r = rep(twice_s);
    let orb = coherent_state_fock(&fock, C64::new(0.0, 0.0)).map_err(|e| e.to_string())?;
    let chi = SpinCoherentState::new(&r, n0).map_err(|e| e.to_string())?;
    let psi0 = HybridState::from_product(&orb, chi.vec()).map_err(|e| e.to_string())?;
    let t_grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let run = propagate_axis_coupled(&ops, &r, omega_c, [g, 0.0, 0.0], [0.0; 3], &psi0, &t_grid)
        .map_err(|e| e.to_string())?;

    let mut p_exact = Vec::with_capacity(t_grid.len());
    for (k, state) in run.states.iter().enumerate() {
        let rho = reduced_spin_density(state);
        let summary = purity_and_entropy(&rho).map_err(|e| e.to_string())?;
        p_exact.push(summary.purity);
        if t_grid[k] >= 0.3 {
            let (w, _) = hermitian_eig(&rho);
            let big = w.iter().filter(|&&x| x > 1e-3).count();
            if big < 2 {
                return Err(format!(
                    "reduced spin density has {big} eigenvalue(s) above 1e-3 at t = {}",
                    t_grid[k]
                ));
            }
        }
    }

    if (p_exact[0] - 1.0).abs() > 1e-9 {
        return Err(format!("initial purity {:.12} is not 1 +- 1e-9", p_exact[0]));
    }
    for (k, &t) in t_grid.iter().enumerate() {
        if t > 0.1 && p_exact[k] >= 1.0 - 1e-9 {
            return Err(format!("purity failed to decay at t = {t}"));
        }
    }

    // Envelope fit P ~ (1 + c0 kappa t^2)^{-1/2} with a positive constant
    // and a small linearized residual.
    let fitted = fit_purity_envelope(&t_grid, &p_exact).map_err(|e| e.to_string())?;
    let c0 = fitted / sc.kappa();
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(format!("fitted envelope constant {c0} is not positive"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &p) in t_grid.iter().zip(&p_exact) {
        let y = 1.0 / (p * p) - 1.0;
        let res = y - fitted * t * t;
        num += res * res;
        den += y * y;
    }
    let rel_residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    if rel_residual > 0.10 {
        return Err(format!(
            "envelope fit relative residual {rel_residual:.3} exceeds 10%"
        ));
    }

    // Closed kernel against the measured partial-trace purity.
    let mut worst: f64 = 0.0;
    for (k, &t) in t_grid.iter().enumerate() {
        let rate = model.kick_factors(t).kick_rate;
        let p_closed = closed_kernel_purity(&sc, &n0, rate).map_err(|e| e.to_string())?;
        worst = worst.max((p_closed - p_exact[k]).abs());
    }
    if worst > 1e-3 {
        return Err(format!("closed kernel deviates by {worst:.3e} > 1e-3"));
    }
    Ok(format!(
        "P(0) = 1, decay confirmed, c0 = {c0:.3} (residual {rel_residual:.3}), kernel gap {worst:.2e} < 1e-3"
    ))
}

/// Numerical hygiene: truncation doubling, integrator order, quadrature
/// order doubling.
fn criterion_9() -> Result<String, String> {
    // Truncation doubling on a small resonant run: every reported number
    // moves by less than 1e-6.
    let hbar = 0.05;
    let twice_s = 8;
    let sc = scales(hbar, twice_s);
    let g = collective_coupling_rate(0.5, hbar, twice_s);
    let n0 = direction(1.1, 0.4);
    let t_grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let mut reported = Vec::new();
    for fock_dim in [64usize, 128] {
        let fock = FockTruncation::new(fock_dim, hbar, 1.0).map_err(|e| e.to_string())?;
        let ops = build_orbital_operators(&fock);
        let r = rep(twice_s);
        let orb = coherent_state_fock(&fock, coherent_parameter(0.2, 0.0, hbar))
            .map_err(|e| e.to_string())?;
        let chi = SpinCoherentState::new(&r, n0).map_err(|e| e.to_string())?;
        let psi0 = HybridState::from_product(&orb, chi.vec()).map_err(|e| e.to_string())?;
        let run = propagate_axis_coupled(&ops, &r, 1.0, [g, 0.0, 0.0], [0.0; 3], &psi0, &t_grid)
            .map_err(|e| e.to_string())?;
        let last = run.states.last().unwrap();
        let rho = reduced_spin_density(last);
        let summary = purity_and_entropy(&rho).map_err(|e| e.to_string())?;
        let bloch = bloch_vector(last, &r);
        let x_mean = orbital_expectation(last, ops.x()).re;
        reported.push(vec![
            summary.purity,
            summary.von_neumann_entropy,
            bloch[0],
            bloch[1],
            bloch[2],
            x_mean,
        ]);
    }
    let trunc_shift = reported[0]
        .iter()
        .zip(&reported[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if trunc_shift > 1e-6 {
        return Err(format!(
            "truncation doubling moved a reported number by {trunc_shift:.3e}"
        ));
    }

    // Integrator order on the coupled flow: halving the step divides the
    // endpoint error by about 2^4.
    let field = CouplingField::linear_in_q([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
        .with_h0(OrbitalHamiltonian::harmonic(1, 1.0));
    let t_grid = [0.0, 0.5];
    let endpoint = |substeps: usize| -> Result<Vec<f64>, String> {
        let traj = integrate_trajectory(
            &field,
            &sc,
            &PhasePoint::new(vec![0.3], vec![0.1]).unwrap(),
            &n0,
            &t_grid,
            &TrajectoryOptions {
                substeps,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        let node = traj.endpoint();
        let n = node.n.components();
        Ok(vec![
            node.z.q[0],
            node.z.p[0],
            n[0],
            n[1],
            n[2],
            node.action_s,
            node.alpha,
        ])
    };
    let reference = endpoint(256)?;
    let err_of = |v: &[f64]| -> f64 {
        v.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let e1 = err_of(&endpoint(4)?);
    let e2 = err_of(&endpoint(8)?);
    let order = (e1 / e2).log2();
    if (order - 4.0).abs() > 0.3 {
        return Err(format!("integrator order {order:.2} not within 4 +- 0.3"));
    }

    // Quadrature doubling at the large-spin decoherence parameters.
    let sc8 = scales(0.01, 100);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let n08 = SphereDirection::from_vector([half, 0.0, half]).unwrap();
    let rate = 4.0 * (0.5f64).sin().abs();
    let p256 = closed_kernel_purity_at_order(&sc8, &n08, rate, 256).map_err(|e| e.to_string())?;
    let p512 = closed_kernel_purity_at_order(&sc8, &n08, rate, 512).map_err(|e| e.to_string())?;
    let quad_shift = (p256 - p512).abs();
    if quad_shift > 1e-8 {
        return Err(format!(
            "quadrature order doubling moved purity by {quad_shift:.3e}"
        ));
    }
    Ok(format!(
        "truncation shift {trunc_shift:.2e} < 1e-6, integrator order {order:.2}, quadrature shift {quad_shift:.2e} < 1e-8"
    ))
}
