//! Reduced density matrices of the hybrid state and entanglement measures.
//!
//! With coefficients c[i, k] (i = Fock level, k = Dicke index) the reduced
//! operators are Gram matrices, so no full MN x MN density matrix is ever
//! formed:
//!
//!   rho_orb[i, j]  = Sum_k c[i, k] conj(c[j, k]),
//!   rho_spin[k, l] = Sum_i c[i, k] conj(c[i, l]).

use crate::error::{Error, Result};
use crate::fock::HybridState;
use crate::linalg::{hermitian_eig, hermiticity_residual, CMat, C64};
use crate::spin::SpinRepresentation;

/// Trace out the spin factor; M x M.
pub fn reduced_orbital_density(state: &HybridState) -> CMat {
    let c = state.coeffs();
    c * c.adjoint()
}

/// Trace out the orbital factor; N x N.
pub fn reduced_spin_density(state: &HybridState) -> CMat {
    let c = state.coeffs();
    c.adjoint() * c
}

/// Density-matrix invariants: Hermitian, unit trace, positive semidefinite
/// up to a small negative eigenvalue tolerance.
pub fn validate_density(rho: &CMat) -> Result<()> {
    let scale = rho.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if hermiticity_residual(rho) > 1e-10 * scale {
        return Err(Error::Validation(
            "reduced density matrix is not Hermitian".into(),
        ));
    }
    let trace: C64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
    if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "reduced density matrix trace is {} + {}i, expected 1",
            trace.re, trace.im
        )));
    }
    let (w, _) = hermitian_eig(rho);
    let min_eig = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 {
        return Err(Error::Validation(format!(
            "reduced density matrix has eigenvalue {min_eig:.3e} below zero"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedStateSummary {
    /// tr(rho^2), 1 on pure states, >= 1/dim.
    pub purity: f64,
    /// -Sum lambda ln lambda, eigenvalues below 1e-14 clamped to zero.
    pub von_neumann_entropy: f64,
    /// 1 - purity.
    pub linear_entropy: f64,
}

/// Purity and entropies of a reduced density matrix.
pub fn purity_and_entropy(rho: &CMat) -> Result<MixedStateSummary> {
    validate_density(rho)?;
    // tr(rho^2) = Sum |rho_ij|^2 for Hermitian rho.
    let purity: f64 = rho.iter().map(|c| c.norm_sqr()).sum();
    let (w, _) = hermitian_eig(rho);
    let mut entropy = 0.0;
    for &lambda in w.iter() {
        if lambda > 1e-14 {
            entropy -= lambda * lambda.ln();
        }
    }
    Ok(MixedStateSummary {
        purity,
        von_neumann_entropy: entropy,
        linear_entropy: 1.0 - purity,
    })
}

/// tr(rho_orb op) without forming the product, equal to <Psi,(op (x) I)Psi>.
pub fn orbital_expectation(state: &HybridState, op: &CMat) -> C64 {
    let c = state.coeffs();
    // Sum_{i,j,k} conj(c[i,k]) op[i,j] c[j,k] = tr(adjoint(C) op C).
    let oc = op * c;
    c.iter()
        .zip(oc.iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// tr(rho_spin op), equal to <Psi,(I (x) op)Psi>.
pub fn spin_expectation(state: &HybridState, op: &CMat) -> C64 {
    let c = state.coeffs();
    let co = c * op.transpose();
    c.iter()
        .zip(co.iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// The classical direction encoded by the spin factor: n_k = -<S_k>/s.
pub fn bloch_vector(state: &HybridState, rep: &SpinRepresentation) -> [f64; 3] {
    let s = rep.spin().s();
    [
        -spin_expectation(state, rep.s1()).re / s,
        -spin_expectation(state, rep.s2()).re / s,
        -spin_expectation(state, rep.s3()).re / s,
    ]
}
