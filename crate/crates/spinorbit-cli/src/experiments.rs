//! The six experiment runners behind `spinorbit run`.
//!
//! Each runner produces a CSV table plus a JSON provenance sidecar (config
//! hash, versions, results, per-check outcomes), written atomically to the
//! output directory, and returns one PASS/FAIL line per contract check.
//! CSV bodies are deterministic: shortest round-trip floats, fixed column
//! order, scan rows assembled in config order even when computed in
//! parallel. Wall-clock timings go to the JSON sidecar only, so identical
//! configs produce byte-identical CSVs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use spinorbit::ansatz::{ansatz_residual, assemble_ansatz, compare_ansatz_to_exact};
use spinorbit::classical::{
    integrate_trajectory, perturbation_divergence, split_coupled_flow, PhasePoint,
    TrajectoryOptions,
};
use spinorbit::coherent::{
    adjoint_action, apply_spin_to_coherent, coherent_closed_form, covariant_symbol,
    overlap_magnitude, rotation_matrix, SpinCoherentState,
};
use spinorbit::dicke::{envelope_value, fit_purity_envelope, purity_curve, DickeModel};
use spinorbit::field::CouplingField;
use spinorbit::fock::{build_orbital_operators, coherent_parameter, coherent_state_fock};
use spinorbit::hamiltonian::assemble_hamiltonian;
use spinorbit::io::{sha256_hex, trajectory_metadata, trajectory_table, write_json, CsvTable};
use spinorbit::linalg::{commutator, max_abs_diff};
use spinorbit::propagate::{propagate_axis_coupled, propagate_exact, PropagationOptions};
use spinorbit::reduced::{purity_and_entropy, reduced_spin_density};
use spinorbit::{
    CMat, FockTruncation, HybridState, SimulationScales, SphereDirection, SpinQuantumNumber,
    SpinRepresentation, C64,
};

use crate::config::{
    numerical, ClassicalCfg, CliFailure, ConvergenceCfg, DickePurityCfg, Experiment,
    PerturbationCfg, ResidualCfg, SpinCheckCfg, SCHEMA_VERSION,
};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn bounded(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            pass: value <= bound,
            detail: format!("{value:.3e} vs bound {bound:.1e}"),
        }
    }

    fn windowed(name: &'static str, value: f64, window: [f64; 2]) -> Self {
        Check {
            name,
            pass: (window[0]..=window[1]).contains(&value),
            detail: format!("{value:.4} vs window [{}, {}]", window[0], window[1]),
        }
    }
}

pub struct RunReport {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

pub struct RunContext<'a> {
    pub out_dir: &'a Path,
    pub config_sha256: String,
    pub threads: usize,
    pub seed: Option<u64>,
}

fn scales(hbar: f64, twice_s: u32) -> Result<SimulationScales, CliFailure> {
    let spin = SpinQuantumNumber::new(twice_s)
        .map_err(|e| CliFailure::Schema(format!("invalid twice_s: {e}")))?;
    SimulationScales::new(hbar, spin).map_err(|e| CliFailure::Schema(format!("invalid scales: {e}")))
}

fn direction(cfg: crate::config::DirectionCfg) -> SphereDirection {
    SphereDirection::from_polar(cfg.theta, cfg.phi)
}

/// Shared sidecar skeleton; `results` carries the kind-specific numbers.
#[allow(clippy::too_many_arguments)]
fn sidecar(
    exp: &Experiment,
    ctx: &RunContext,
    csv_body: &str,
    parameters: Value,
    results: Value,
    checks: &[Check],
    runtime: f64,
) -> Value {
    json!({
        "tool": "spinorbit",
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "kind": exp.kind(),
        "config_sha256": ctx.config_sha256,
        "csv_sha256": sha256_hex(csv_body.as_bytes()),
        "threads": ctx.threads,
        "seed": ctx.seed,
        "runtime_seconds": runtime,
        "parameters": parameters,
        "results": results,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "pass": c.pass,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
    })
}

fn write_pair(
    ctx: &RunContext,
    stem: &str,
    table: &CsvTable,
    meta: &Value,
) -> Result<Vec<PathBuf>, CliFailure> {
    std::fs::create_dir_all(ctx.out_dir)
        .map_err(|e| CliFailure::Io(format!("cannot create {}: {e}", ctx.out_dir.display())))?;
    let csv_path = ctx.out_dir.join(format!("{stem}.csv"));
    let json_path = ctx.out_dir.join(format!("{stem}.json"));
    table
        .write(&csv_path)
        .map_err(|e| CliFailure::Io(format!("cannot write {}: {e}", csv_path.display())))?;
    write_json(&json_path, meta)
        .map_err(|e| CliFailure::Io(format!("cannot write {}: {e}", json_path.display())))?;
    Ok(vec![csv_path, json_path])
}

pub fn run_experiment(exp: &Experiment, ctx: &RunContext) -> Result<RunReport, CliFailure> {
    // Feasibility first, so config-level mistakes exit as schema problems
    // even under `run`.
    validate_experiment(exp)?;
    match exp {
        Experiment::SpinCheck(cfg) => run_spin_check(exp, cfg, ctx),
        Experiment::Classical(cfg) => run_classical(exp, cfg, ctx),
        Experiment::Convergence(cfg) => run_convergence(exp, cfg, ctx),
        Experiment::Residual(cfg) => run_residual(exp, cfg, ctx),
        Experiment::DickePurity(cfg) => run_dicke(exp, cfg, ctx),
        Experiment::Perturbation(cfg) => run_perturbation(exp, cfg, ctx),
    }
}

/// Dry-run schema/feasibility checks; returns human-readable "ok" details.
pub fn validate_experiment(exp: &Experiment) -> Result<Vec<String>, CliFailure> {
    let mut notes = Vec::new();
    let positive = |name: &str, v: f64| -> Result<(), CliFailure> {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliFailure::Schema(format!("`{name}` must be positive, got {v}")));
        }
        Ok(())
    };
    match exp {
        Experiment::SpinCheck(c) => {
            scales(1.0, c.twice_s)?;
            positive("tolerance_scale", c.tolerance_scale)?;
            if c.directions.is_empty() {
                return Err(CliFailure::Schema("`directions` must not be empty".into()));
            }
            notes.push(format!(
                "spin 2s = {} (dimension {})",
                c.twice_s,
                c.twice_s + 1
            ));
        }
        Experiment::Classical(c) => {
            scales(c.hbar, c.twice_s)?;
            c.grid.build()?;
            positive("max_sphere_defect", c.max_sphere_defect)?;
            positive("max_energy_drift", c.max_energy_drift)?;
            positive("oscillator_omega", c.oscillator_omega)?;
            if c.substeps == 0 {
                return Err(CliFailure::Schema("`substeps` must be >= 1".into()));
            }
            notes.push(format!("grid with {} nodes, {} substeps", c.grid.nodes, c.substeps));
        }
        Experiment::Convergence(c) => {
            if c.cases.len() < 2 {
                return Err(CliFailure::Schema(
                    "`cases` needs at least two (hbar, twice_s) entries for a slope fit".into(),
                ));
            }
            positive("t_final", c.t_final)?;
            if c.slope_window[0] > c.slope_window[1] {
                return Err(CliFailure::Schema(format!(
                    "`slope_window` is inverted: [{}, {}]",
                    c.slope_window[0], c.slope_window[1]
                )));
            }
            for case in &c.cases {
                scales(case.hbar, case.twice_s)?;
                feasibility_truncation(c.fock_levels, case.hbar, 1.0, c.z0)?;
            }
            notes.push(format!(
                "{} scan cases, M = {} holds the initial packet at every hbar",
                c.cases.len(),
                c.fock_levels
            ));
        }
        Experiment::Residual(c) => {
            scales(c.hbar, c.twice_s)?;
            let grid = c.grid.build()?;
            positive("fd_step", c.fd_step)?;
            positive("max_residual", c.max_residual)?;
            if grid[0] < 2.0 * c.fd_step {
                return Err(CliFailure::Schema(format!(
                    "probe times must start at or above 2 * fd_step = {}, got {}",
                    2.0 * c.fd_step,
                    grid[0]
                )));
            }
            feasibility_truncation(c.fock_levels, c.hbar, c.oscillator_omega, c.z0)?;
            notes.push(format!(
                "{} probe times in [{}, {}], M = {} holds the packet",
                c.grid.nodes, c.grid.t_min, c.grid.t_max, c.fock_levels
            ));
        }
        Experiment::DickePurity(c) => {
            let sc = scales(c.hbar, c.twice_s)?;
            c.grid.build()?;
            positive("lambda", c.lambda)?;
            positive("omega_c", c.omega_c)?;
            positive("initial_purity_tol", c.initial_purity_tol)?;
            positive("kernel_gap_tol", c.kernel_gap_tol)?;
            positive("envelope_residual_tol", c.envelope_residual_tol)?;
            let model = DickeModel::new(sc, c.lambda, 0.0, c.omega_c)
                .map_err(|e| CliFailure::Schema(format!("dicke model rejected: {e}")))?;
            // The orbital register starts in the cavity vacuum.
            feasibility_truncation(
                c.fock_levels,
                c.hbar,
                c.omega_c,
                crate::config::PhasePointCfg { q: 0.0, p: 0.0 },
            )?;
            notes.push(format!(
                "kappa = {:.6}, collective rate g = {:.6}",
                sc.kappa(),
                model.coupling_rate()
            ));
        }
        Experiment::Perturbation(c) => {
            scales(c.hbar, c.twice_s)?;
            let grid = c.grid.build()?;
            if grid[0] != 0.0 {
                return Err(CliFailure::Schema(
                    "perturbation grids must start at t = 0 (the fit runs through the origin)"
                        .into(),
                ));
            }
            if let Some(w) = c.fit_window {
                positive("fit_window", w)?;
            }
            if c.ratio_window[0] > c.ratio_window[1] {
                return Err(CliFailure::Schema(format!(
                    "`ratio_window` is inverted: [{}, {}]",
                    c.ratio_window[0], c.ratio_window[1]
                )));
            }
            notes.push(format!("{} nodes up to t = {}", c.grid.nodes, c.grid.t_max));
        }
    }
    Ok(notes)
}

/// Truncation-guard feasibility: M must hold the initial coherent packet.
fn feasibility_truncation(
    fock_levels: usize,
    hbar: f64,
    omega: f64,
    z0: crate::config::PhasePointCfg,
) -> Result<(), CliFailure> {
    let fock = FockTruncation::new(fock_levels, hbar, omega)
        .map_err(|e| CliFailure::Schema(format!("fock truncation rejected: {e}")))?;
    coherent_state_fock(&fock, coherent_parameter(z0.q, z0.p, hbar)).map_err(|e| {
        CliFailure::Numerical(format!("feasibility (truncation guard): {e}"))
    })?;
    Ok(())
}

fn rep_for(twice_s: u32) -> Result<SpinRepresentation, CliFailure> {
    let spin = SpinQuantumNumber::new(twice_s)
        .map_err(|e| CliFailure::Schema(format!("invalid twice_s: {e}")))?;
    SpinRepresentation::new(spin).map_err(numerical)
}

// ---------------------------------------------------------------------------
// spin-check

fn run_spin_check(
    exp: &Experiment,
    cfg: &SpinCheckCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    let r = rep_for(cfg.twice_s)?;
    let spin = r.spin();
    let s = spin.s();
    let dim = spin.dimension();
    let bound = cfg.tolerance_scale * dim as f64;

    // Algebra layer: commutators, ladder entries, Casimir.
    let mut commutator_worst: f64 = 0.0;
    let pairs = [
        (r.s1(), r.s2(), r.s3()),
        (r.s2(), r.s3(), r.s1()),
        (r.s3(), r.s1(), r.s2()),
    ];
    for (a, b, c) in pairs {
        let lhs = commutator(a, b);
        let rhs = c * C64::new(0.0, 1.0);
        commutator_worst = commutator_worst.max(max_abs_diff(&lhs, &rhs));
    }
    let mut ladder_worst: f64 = 0.0;
    let s_plus = r.s_plus();
    for k in 0..cfg.twice_s as usize {
        let expect = ((f64::from(cfg.twice_s) - k as f64) * (k as f64 + 1.0)).sqrt();
        ladder_worst = ladder_worst.max((s_plus[(k + 1, k)].re - expect).abs());
    }
    let casimir = r.s1() * r.s1() + r.s2() * r.s2() + r.s3() * r.s3();
    let eye = CMat::identity(dim, dim);
    let casimir_defect = max_abs_diff(&casimir, &(eye * C64::new(s * (s + 1.0), 0.0)));

    // Coherent layer, one CSV row per probe direction.
    let mut table = CsvTable::new(vec![
        "theta",
        "phi",
        "lowest_weight_defect",
        "closed_form_defect",
        "overlap_law_defect",
        "symbol_defect",
    ]);
    let mut rotated_worst: f64 = 0.0;
    let mut lowest_worst: f64 = 0.0;
    let mut closed_worst: f64 = 0.0;
    let mut overlap_worst: f64 = 0.0;
    let mut symbol_worst: f64 = 0.0;
    let g_dot_s = r.component(cfg.probe_field);
    for (i, &[theta, phi]) in cfg.directions.iter().enumerate() {
        let n = SphereDirection::from_polar(theta, phi);
        let d_mat = rotation_matrix(&r, &n).map_err(numerical)?;

        // Rotated frames against brute-force conjugation.
        let closed_frames = adjoint_action(&r, &n).map_err(numerical)?;
        let ops = [r.s1(), r.s2(), r.s3()];
        for k in 0..3 {
            let brute = d_mat.adjoint() * ops[k] * &d_mat;
            rotated_worst = rotated_worst.max(max_abs_diff(&closed_frames[k], &brute));
        }

        // Lowest weight: (n . S) chi = -s chi.
        let chi = SpinCoherentState::new(&r, n).map_err(numerical)?;
        let n_dot_s = r.component(n.components());
        let lw = (&n_dot_s * chi.vec() + chi.vec() * C64::new(s, 0.0)).norm();
        lowest_worst = lowest_worst.max(lw);

        // Two-term split self-check (library-enforced residual bound).
        apply_spin_to_coherent(&r, &n).map_err(numerical)?;

        // Closed-form amplitudes against the rotation column.
        let closed_vec = coherent_closed_form(spin, &n);
        let cf = (&closed_vec - d_mat.column(0).into_owned()).norm();
        closed_worst = closed_worst.max(cf);

        // Overlap law on the consecutive direction pair.
        let next = cfg.directions[(i + 1) % cfg.directions.len()];
        let m = SphereDirection::from_polar(next[0], next[1]);
        let other = SpinCoherentState::new(&r, m).map_err(numerical)?;
        let ov = (chi.vec().dotc(other.vec()).norm() - overlap_magnitude(spin, &n, &m)).abs();
        overlap_worst = overlap_worst.max(ov);

        // Covariant symbol: <chi, (G . S) chi> = -s H_c(G, eta).
        let matrix_side = chi.vec().dotc(&(&g_dot_s * chi.vec())).re;
        let symbol = covariant_symbol(cfg.probe_field, n.chart().map_err(numerical)?);
        let sy = (matrix_side + s * symbol).abs();
        symbol_worst = symbol_worst.max(sy);

        table.push_row(vec![theta, phi, lw, cf, ov, sy]).map_err(numerical)?;
    }

    let algebra_worst = commutator_worst.max(ladder_worst).max(casimir_defect);
    let checks = vec![
        Check::bounded("su2-algebra", algebra_worst, bound),
        Check::bounded("rotated-frames", rotated_worst, bound),
        Check::bounded("coherent-states", lowest_worst.max(closed_worst), bound),
        Check::bounded("overlap-law", overlap_worst, bound),
        Check::bounded("covariant-symbol", symbol_worst, bound),
    ];

    let results = json!({
        "dimension": dim,
        "bound": bound,
        "max_commutator_residual": commutator_worst,
        "ladder_defect": ladder_worst,
        "casimir_defect": casimir_defect,
        "rotated_frame_defect": rotated_worst,
        "lowest_weight_defect": lowest_worst,
        "closed_form_defect": closed_worst,
        "overlap_law_defect": overlap_worst,
        "covariant_symbol_defect": symbol_worst,
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}

// ---------------------------------------------------------------------------
// classical

/// Conserved coupled energy h0 - kappa n . G (lowest-weight coupling sign).
fn coupled_energy(
    field: &CouplingField,
    sc: &SimulationScales,
    z: &PhasePoint,
    n: [f64; 3],
    t: f64,
) -> f64 {
    let g = field.evaluate(t, z);
    field.h0().value(t, z) - sc.kappa() * (g[0] * n[0] + g[1] * n[1] + g[2] * n[2])
}

fn run_classical(
    exp: &Experiment,
    cfg: &ClassicalCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    let sc = scales(cfg.hbar, cfg.twice_s)?;
    let field = cfg.field.build(cfg.oscillator_omega);
    let t_grid = cfg.grid.build()?;
    let z0 = PhasePoint::new(vec![cfg.z0.q], vec![cfg.z0.p]).map_err(numerical)?;
    let n0 = direction(cfg.n0);
    let traj = integrate_trajectory(
        &field,
        &sc,
        &z0,
        &n0,
        &t_grid,
        &TrajectoryOptions {
            substeps: cfg.substeps,
            ..Default::default()
        },
    )
    .map_err(numerical)?;
    traj.validate().map_err(numerical)?;

    let mut checks = vec![Check::bounded(
        "sphere-confinement",
        traj.max_norm_defect(),
        cfg.max_sphere_defect,
    )];
    if cfg.field.is_autonomous() {
        let e0 = coupled_energy(&field, &sc, &z0, n0.components(), t_grid[0]);
        let drift = traj
            .nodes()
            .iter()
            .map(|nd| (coupled_energy(&field, &sc, &nd.z, nd.n.components(), nd.t) - e0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::bounded(
            "energy-conservation",
            drift,
            cfg.max_energy_drift,
        ));
    }

    let table = trajectory_table(&traj).map_err(numerical)?;
    let results = json!({
        "endpoint_t": traj.endpoint().t,
        "max_norm_defect": traj.max_norm_defect(),
        "trajectory": trajectory_metadata(&traj, cfg.field.describe()),
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}

// ---------------------------------------------------------------------------
// convergence

struct ScanRow {
    hbar: f64,
    twice_s: u32,
    kappa: f64,
    infidelity: f64,
    distance: f64,
    runtime_s: f64,
}

fn convergence_case(cfg: &ConvergenceCfg, hbar: f64, twice_s: u32) -> Result<ScanRow, CliFailure> {
    let case_started = Instant::now();
    let sc = scales(hbar, twice_s)?;
    let field = CouplingField::linear_in_q([cfg.coupling, 0.0, 0.0], [0.0, 0.0, cfg.spin_shift])
        .with_h0(spinorbit::field::OrbitalHamiltonian::harmonic(1, 1.0));
    let t_grid = [0.0, cfg.t_final];
    let n0 = direction(cfg.n0);
    let z0 = PhasePoint::new(vec![cfg.z0.q], vec![cfg.z0.p]).map_err(numerical)?;
    let traj = integrate_trajectory(
        &field,
        &sc,
        &z0,
        &n0,
        &t_grid,
        &TrajectoryOptions {
            substeps: cfg.substeps,
            ..Default::default()
        },
    )
    .map_err(numerical)?;

    let fock = FockTruncation::new(cfg.fock_levels, hbar, 1.0).map_err(numerical)?;
    let r = rep_for(twice_s)?;
    let orb =
        coherent_state_fock(&fock, coherent_parameter(cfg.z0.q, cfg.z0.p, hbar)).map_err(numerical)?;
    let chi = SpinCoherentState::new(&r, n0).map_err(numerical)?;
    let psi0 = HybridState::from_product(&orb, chi.vec()).map_err(numerical)?;
    let ops = build_orbital_operators(&fock);
    let h = assemble_hamiltonian(&ops, &r, cfg.field_terms()).map_err(numerical)?;
    let run = propagate_exact(
        &h,
        &psi0,
        &t_grid,
        &PropagationOptions {
            // Polynomial marching beats a dense eigensolve at scan sizes.
            dense_eig_threshold: 0,
            ..Default::default()
        },
    )
    .map_err(numerical)?;
    let cmp = compare_ansatz_to_exact(&traj, &run.states, &fock, &r).map_err(numerical)?;
    Ok(ScanRow {
        hbar,
        twice_s,
        kappa: sc.kappa(),
        infidelity: *cmp.infidelity.last().expect("grid is non-empty"),
        distance: *cmp.distance.last().expect("grid is non-empty"),
        runtime_s: case_started.elapsed().as_secs_f64(),
    })
}

impl ConvergenceCfg {
    fn field_terms(&self) -> Vec<spinorbit::hamiltonian::HamiltonianTerm> {
        use spinorbit::hamiltonian::HamiltonianTerm;
        vec![
            HamiltonianTerm::Oscillator { omega: 1.0 },
            HamiltonianTerm::PositionSpin {
                weight: [self.coupling, 0.0, 0.0],
            },
            HamiltonianTerm::SpinConstant {
                weight: [0.0, 0.0, self.spin_shift],
            },
        ]
    }
}

fn run_convergence(
    exp: &Experiment,
    cfg: &ConvergenceCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    // Rows computed in parallel but assembled in config order.
    let rows: Vec<ScanRow> = cfg
        .cases
        .par_iter()
        .map(|case| convergence_case(cfg, case.hbar, case.twice_s))
        .collect::<Result<Vec<_>, _>>()?;

    for row in &rows {
        if !(row.infidelity.is_finite() && row.infidelity > 0.0) {
            return Err(CliFailure::Numerical(format!(
                "infidelity {} at hbar = {} cannot enter a log-log fit",
                row.infidelity, row.hbar
            )));
        }
    }
    let hbars: Vec<f64> = rows.iter().map(|r| r.hbar).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.infidelity).collect();
    let fit = spinorbit::fit::loglog_slope(&hbars, &errs);

    let mut table = CsvTable::new(vec![
        "hbar",
        "twice_s",
        "kappa",
        "fock_levels",
        "infidelity",
        "distance",
    ]);
    for row in &rows {
        table
            .push_row(vec![
                row.hbar,
                f64::from(row.twice_s),
                row.kappa,
                cfg.fock_levels as f64,
                row.infidelity,
                row.distance,
            ])
            .map_err(numerical)?;
    }

    let checks = vec![Check::windowed("slope-window", fit.slope, cfg.slope_window)];
    let results = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "slope_window": cfg.slope_window,
        "case_runtimes_seconds": rows.iter().map(|r| r.runtime_s).collect::<Vec<_>>(),
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}

// ---------------------------------------------------------------------------
// residual

fn run_residual(
    exp: &Experiment,
    cfg: &ResidualCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    let sc = scales(cfg.hbar, cfg.twice_s)?;
    let field = cfg.field.build(cfg.oscillator_omega);
    let probes = cfg.grid.build()?;
    let z0 = PhasePoint::new(vec![cfg.z0.q], vec![cfg.z0.p]).map_err(numerical)?;
    let n0 = direction(cfg.n0);
    let fock = FockTruncation::new(cfg.fock_levels, cfg.hbar, cfg.oscillator_omega)
        .map_err(numerical)?;
    let r = rep_for(cfg.twice_s)?;
    let ops = build_orbital_operators(&fock);
    let h = assemble_hamiltonian(&ops, &r, cfg.field.terms(cfg.oscillator_omega))
        .map_err(numerical)?;

    // Dressed state at an arbitrary time, rebuilt from a fresh integration so
    // the finite-difference derivative sees a smooth family.
    let assemble_at = |t: f64| -> spinorbit::Result<HybridState> {
        let traj = integrate_trajectory(
            &field,
            &sc,
            &z0,
            &n0,
            &[0.0, t],
            &TrajectoryOptions {
                substeps: cfg.substeps,
                ..Default::default()
            },
        )?;
        assemble_ansatz(traj.endpoint(), &sc, &fock, &r)
    };

    let mut table = CsvTable::new(vec!["t", "residual", "fd_spread"]);
    let mut worst: f64 = 0.0;
    for &t in &probes {
        let est = ansatz_residual(&assemble_at, &h, t, cfg.fd_step).map_err(numerical)?;
        worst = worst.max(est.residual);
        table
            .push_row(vec![t, est.residual, est.fd_spread])
            .map_err(numerical)?;
    }

    let checks = vec![Check::bounded("residual-bound", worst, cfg.max_residual)];
    let results = json!({
        "worst_residual": worst,
        "kappa": sc.kappa(),
        "probe_count": probes.len(),
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}

// ---------------------------------------------------------------------------
// dicke-purity

fn run_dicke(
    exp: &Experiment,
    cfg: &DickePurityCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    let sc = scales(cfg.hbar, cfg.twice_s)?;
    let model = DickeModel::new(sc, cfg.lambda, 0.0, cfg.omega_c).map_err(numerical)?;
    let g = model.coupling_rate();
    let n0 = SphereDirection::from_polar(cfg.theta0, cfg.phi0);
    let t_grid = cfg.grid.build()?;

    // Closed-kernel route.
    let closed = purity_curve(&model, &n0, &t_grid).map_err(numerical)?;

    // Partial-trace route through the exact hybrid propagation.
    let fock = FockTruncation::new(cfg.fock_levels, cfg.hbar, cfg.omega_c).map_err(numerical)?;
    let ops = build_orbital_operators(&fock);
    let r = rep_for(cfg.twice_s)?;
    let orb = coherent_state_fock(&fock, C64::new(0.0, 0.0)).map_err(numerical)?;
    let chi = SpinCoherentState::new(&r, n0).map_err(numerical)?;
    let psi0 = HybridState::from_product(&orb, chi.vec()).map_err(numerical)?;
    let run = propagate_axis_coupled(&ops, &r, cfg.omega_c, [g, 0.0, 0.0], [0.0; 3], &psi0, &t_grid)
        .map_err(numerical)?;
    let mut p_exact = Vec::with_capacity(t_grid.len());
    for state in &run.states {
        let rho = reduced_spin_density(state);
        p_exact.push(purity_and_entropy(&rho).map_err(numerical)?.purity);
    }

    // Envelope fit P ~ (1 + c0 kappa t^2)^{-1/2} on the measured curve.
    let fitted = fit_purity_envelope(&t_grid, &p_exact).map_err(numerical)?;
    let c0 = fitted / sc.kappa();
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &p) in t_grid.iter().zip(&p_exact) {
        let y = 1.0 / (p * p) - 1.0;
        num += (y - fitted * t * t).powi(2);
        den += y * y;
    }
    let rel_residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };

    let kernel_gap = closed
        .purity
        .iter()
        .zip(&p_exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let decay_ok = t_grid
        .iter()
        .zip(&p_exact)
        .all(|(&t, &p)| t <= cfg.decay_after || p < 1.0 - cfg.initial_purity_tol);

    let mut table = CsvTable::new(vec![
        "t",
        "p_closed",
        "p_exact",
        "bound_envelope",
        "fitted_c0",
    ]);
    for (k, &t) in t_grid.iter().enumerate() {
        table
            .push_row(vec![
                t,
                closed.purity[k],
                p_exact[k],
                envelope_value(fitted, t),
                c0,
            ])
            .map_err(numerical)?;
    }

    let checks = vec![
        Check::bounded(
            "initial-purity",
            (p_exact[0] - 1.0).abs(),
            cfg.initial_purity_tol,
        ),
        Check {
            name: "purity-decay",
            pass: decay_ok,
            detail: format!("strict decay after t = {}", cfg.decay_after),
        },
        Check::bounded("closed-kernel-gap", kernel_gap, cfg.kernel_gap_tol),
        Check {
            name: "envelope-fit",
            pass: c0 > 0.0 && rel_residual <= cfg.envelope_residual_tol,
            detail: format!(
                "c0 = {c0:.4} > 0, relative residual {rel_residual:.3} vs {}",
                cfg.envelope_residual_tol
            ),
        },
    ];

    let closed_bytes = closed
        .purity
        .iter()
        .map(|p| spinorbit::io::format_float(*p))
        .collect::<Vec<_>>()
        .join("\n");
    let results = json!({
        "kappa": sc.kappa(),
        "collective_rate": g,
        "fitted_c0": c0,
        "envelope_relative_residual": rel_residual,
        "kernel_gap": kernel_gap,
        "grid_nodes": t_grid.len(),
        "fock_levels": cfg.fock_levels,
        "oracle_checksums": {
            "closed_kernel_sha256": sha256_hex(closed_bytes.as_bytes()),
        },
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}

// ---------------------------------------------------------------------------
// perturbation

fn run_perturbation(
    exp: &Experiment,
    cfg: &PerturbationCfg,
    ctx: &RunContext,
) -> Result<RunReport, CliFailure> {
    let started = Instant::now();
    let sc = scales(cfg.hbar, cfg.twice_s)?;
    let field = cfg.field.build(cfg.oscillator_omega);
    let t_grid = cfg.grid.build()?;
    let n0 = direction(cfg.n0);
    let mut x0 = vec![cfg.z0.q, cfg.z0.p];
    x0.extend_from_slice(&n0.components());
    let window = cfg.fit_window.unwrap_or(cfg.grid.t_max);

    let (f, g) = split_coupled_flow(&field, &sc);
    let report =
        perturbation_divergence(&f, &g, sc.kappa(), &x0, &t_grid, window).map_err(numerical)?;
    let ratio = report.fitted_slope / report.expected_slope;

    let mut table = CsvTable::new(vec!["t", "separation", "predicted"]);
    for (k, &t) in t_grid.iter().enumerate() {
        table
            .push_row(vec![t, report.separation[k], report.expected_slope * t])
            .map_err(numerical)?;
    }

    let checks = vec![Check::windowed("separation-law", ratio, cfg.ratio_window)];
    let results = json!({
        "fitted_slope": report.fitted_slope,
        "expected_slope": report.expected_slope,
        "slope_ratio": ratio,
        "g_norm_at_start": report.g_norm_at_start,
        "kappa": sc.kappa(),
        "fit_window": window,
    });
    let meta = sidecar(
        exp,
        ctx,
        &table.to_csv_string(),
        serde_json::to_value(cfg).expect("config serializes"),
        results,
        &checks,
        started.elapsed().as_secs_f64(),
    );
    let artifacts = write_pair(ctx, &exp.output_stem(), &table, &meta)?;
    Ok(RunReport { checks, artifacts })
}
