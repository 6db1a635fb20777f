//! The semiclassical product ansatz and its error diagnostics.
//!
//! A trajectory node (z, n, S, alpha, Gamma, ln pref) is turned into the
//! hybrid state
//!
//!   Psi# = exp((i/hbar) S + i s alpha + ln pref) phi_z (x) psi_n,
//!
//! where phi_z is the coherent state at z and psi_n the spin coherent state
//! at n. Assembly in the Fock basis is only supported for the standard width
//! Gamma = i I, where phi_z is D(zeta)|0> with zeta = (q + ip)/sqrt(2 hbar);
//! that restriction is checked, not assumed.
//!
//! For fields without orbital dependence the ansatz reproduces the exact
//! evolution including its phase; with orbit back-reaction it degrades at a
//! rate governed by how s scales against 1/hbar. The scan helper fits that
//! rate on a log-log grid, and the residual helper measures
//! || i hbar d/dt Psi# - H Psi# || with a Richardson-checked derivative.

use crate::classical::{SemiclassicalTrajectory, TrajectoryNode};
use crate::coherent::SpinCoherentState;
use crate::error::{Error, Result};
use crate::fit::{loglog_slope, LineFit};
use crate::fock::{coherent_parameter, coherent_state_fock, FockTruncation, HybridState};
use crate::hamiltonian::HybridHamiltonian;
use crate::linalg::{CMat, C64};
use crate::scales::SimulationScales;
use crate::spin::SpinRepresentation;
use rayon::prelude::*;

/// Assemble the hybrid ansatz state at one trajectory node.
pub fn assemble_ansatz(
    node: &TrajectoryNode,
    scales: &SimulationScales,
    fock: &FockTruncation,
    rep: &SpinRepresentation,
) -> Result<HybridState> {
    if node.z.dim() != 1 {
        return Err(Error::Capability(
            "Fock-basis assembly supports one orbital degree of freedom".into(),
        ));
    }
    if (fock.hbar() - scales.hbar()).abs() > 1e-15 * scales.hbar() {
        return Err(Error::Validation(format!(
            "truncation hbar {} does not match the scale hbar {}",
            fock.hbar(),
            scales.hbar()
        )));
    }
    if rep.spin() != scales.spin() {
        return Err(Error::Validation(
            "spin representation does not match the simulation scales".into(),
        ));
    }
    let d = node.gamma.nrows();
    let mut width_defect = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j {
                C64::new(0.0, 1.0)
            } else {
                C64::new(0.0, 0.0)
            };
            width_defect = width_defect.max((node.gamma[(i, j)] - expect).norm());
        }
    }
    if width_defect > 1e-9 {
        return Err(Error::Capability(format!(
            "only the standard width Gamma = i I is assembled in the Fock basis \
             (defect {width_defect:.3e})"
        )));
    }
    let zeta = coherent_parameter(node.z.q[0], node.z.p[0], scales.hbar());
    let orb = coherent_state_fock(fock, zeta)?;
    let spin = SpinCoherentState::new(rep, node.n)?;
    let amp = (C64::new(0.0, node.action_s / scales.hbar() + scales.s() * node.alpha)
        + node.ln_prefactor)
        .exp();
    let chi = spin.vec();
    HybridState::new(CMat::from_fn(orb.len(), chi.len(), |i, j| {
        amp * orb[i] * chi[j]
    }))
}

/// Node-by-node comparison of the ansatz against exactly propagated states.
#[derive(Debug, Clone)]
pub struct AnsatzComparison {
    /// 1 - |<Psi#, Psi>| / (|Psi#| |Psi|) per node; phase-insensitive.
    pub infidelity: Vec<f64>,
    /// |Psi# - Psi| per node; includes the phase and amplitude.
    pub distance: Vec<f64>,
    pub max_infidelity: f64,
    pub max_distance: f64,
}

pub fn compare_ansatz_to_exact(
    traj: &SemiclassicalTrajectory,
    exact: &[HybridState],
    fock: &FockTruncation,
    rep: &SpinRepresentation,
) -> Result<AnsatzComparison> {
    if traj.len() != exact.len() {
        return Err(Error::Validation(format!(
            "trajectory has {} nodes but {} exact states were supplied",
            traj.len(),
            exact.len()
        )));
    }
    let scales = traj.scales();
    let mut infidelity = Vec::with_capacity(exact.len());
    let mut distance = Vec::with_capacity(exact.len());
    for (node, psi) in traj.nodes().iter().zip(exact) {
        let sharp = assemble_ansatz(node, &scales, fock, rep)?;
        let overlap = sharp.overlap(psi).norm();
        let denom = sharp.norm() * psi.norm();
        infidelity.push(1.0 - overlap / denom);
        distance.push(sharp.distance(psi));
    }
    let max_infidelity = infidelity.iter().cloned().fold(0.0, f64::max);
    let max_distance = distance.iter().cloned().fold(0.0, f64::max);
    Ok(AnsatzComparison {
        infidelity,
        distance,
        max_infidelity,
        max_distance,
    })
}

/// Result of an error scan across the semiclassical parameter grid.
#[derive(Debug, Clone)]
pub struct ErrorScan {
    pub hbars: Vec<f64>,
    pub twice_s: Vec<u32>,
    pub errors: Vec<f64>,
    /// log(error) against log(hbar) fit.
    pub fit: LineFit,
}

impl ErrorScan {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Run one ansatz-error case per (hbar, 2s) pair, in parallel, and fit the
/// log-log decay of the error against hbar.
pub fn ansatz_error_scan(
    cases: &[(f64, u32)],
    run_case: &(dyn Fn(f64, u32) -> Result<f64> + Sync),
) -> Result<ErrorScan> {
    if cases.len() < 2 {
        return Err(Error::Validation("an error scan needs at least two cases".into()));
    }
    let errors: Vec<f64> = cases
        .par_iter()
        .map(|&(hbar, twice_s)| run_case(hbar, twice_s))
        .collect::<Result<Vec<_>>>()?;
    let hbars: Vec<f64> = cases.iter().map(|c| c.0).collect();
    if errors.iter().any(|e| *e <= 0.0 || !e.is_finite()) {
        return Err(Error::Validation(
            "error scan produced non-positive values; cannot fit a log-log slope".into(),
        ));
    }
    let fit = loglog_slope(&hbars, &errors);
    Ok(ErrorScan {
        hbars,
        twice_s: cases.iter().map(|c| c.1).collect(),
        errors,
        fit,
    })
}

/// Schroedinger residual of a time-indexed family of states.
#[derive(Debug, Clone, Copy)]
pub struct ResidualEstimate {
    /// || i hbar dPsi/dt - H Psi || with a Richardson-extrapolated derivative.
    pub residual: f64,
    /// Relative movement of the derivative between the two step sizes.
    pub fd_spread: f64,
}

/// Central finite difference of the assembled family at t, step dt.
fn central_difference(
    assemble_at: &dyn Fn(f64) -> Result<HybridState>,
    t: f64,
    dt: f64,
) -> Result<CMat> {
    let plus = assemble_at(t + dt)?;
    let minus = assemble_at(t - dt)?;
    Ok((plus.coeffs() - minus.coeffs()) / C64::new(2.0 * dt, 0.0))
}

/// Measure || i hbar d/dt Psi(t) - H(t) Psi(t) ||.
///
/// The derivative uses central differences at dt_fd and dt_fd/2 combined by
/// Richardson extrapolation; `fd_spread` reports how far apart the two raw
/// estimates were, as a consistency check on the step size.
pub fn ansatz_residual(
    assemble_at: &dyn Fn(f64) -> Result<HybridState>,
    h: &HybridHamiltonian,
    t: f64,
    dt_fd: f64,
) -> Result<ResidualEstimate> {
    if !(dt_fd.is_finite() && dt_fd > 0.0) {
        return Err(Error::Validation("finite-difference step must be positive".into()));
    }
    let psi = assemble_at(t)?;
    let coarse = central_difference(assemble_at, t, dt_fd)?;
    let fine = central_difference(assemble_at, t, 0.5 * dt_fd)?;
    let deriv = (&fine * C64::new(4.0, 0.0) - &coarse) / C64::new(3.0, 0.0);
    let fine_norm: f64 = fine.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let spread_abs: f64 = (&fine - &coarse)
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let fd_spread = spread_abs / fine_norm.max(1e-300);
    let hpsi = h.at(t) * psi.to_vector();
    let dvec = HybridState::new(deriv)?.to_vector();
    let res_vec = dvec * C64::new(0.0, h.hbar()) - hpsi;
    Ok(ResidualEstimate {
        residual: res_vec.norm(),
        fd_spread,
    })
}
