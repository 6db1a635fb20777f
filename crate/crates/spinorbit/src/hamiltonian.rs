//! Assembly of hybrid (oscillator x spin) Hamiltonians.
//!
//! Operators act on the row-major flattened hybrid state, so every term is a
//! Kronecker product kron(orbital, spin). The generic shape is
//!
//!   H(t) = H_orb (x) I  +  hbar Sum_k [ c_k(t) I + u_k(t) x + w_k(t) p ] (x) S_k,
//!
//! split into an autonomous part and a list of scalar envelopes multiplying
//! constant matrices. That split is what the propagators exploit: autonomous
//! Hamiltonians get a single eigendecomposition, driven ones a midpoint
//! Magnus scheme that only re-sums the envelope coefficients.

use crate::error::{Error, Result};
use crate::fock::OrbitalOperators;
use crate::linalg::{hermiticity_residual, CMat, C64};
use crate::spin::SpinRepresentation;

pub type TimeEnvelope = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// One additive term of the hybrid Hamiltonian.
pub enum HamiltonianTerm {
    /// (omega/2)(x^2 + p^2) (x) I.
    Oscillator { omega: f64 },
    /// Custom Hermitian orbital block (x) I.
    OrbitalMatrix(CMat),
    /// hbar I (x) (weight . S).
    SpinConstant { weight: [f64; 3] },
    /// hbar f(t) I (x) (weight . S).
    SpinDriven {
        weight: [f64; 3],
        envelope: TimeEnvelope,
    },
    /// hbar x (x) (weight . S).
    PositionSpin { weight: [f64; 3] },
    /// hbar p (x) (weight . S).
    MomentumSpin { weight: [f64; 3] },
    /// hbar f(t) x (x) (weight . S).
    PositionSpinDriven {
        weight: [f64; 3],
        envelope: TimeEnvelope,
    },
    /// hbar f(t) p (x) (weight . S).
    MomentumSpinDriven {
        weight: [f64; 3],
        envelope: TimeEnvelope,
    },
}

/// Hybrid Hamiltonian split into an autonomous matrix and driven envelopes.
pub struct HybridHamiltonian {
    fock_dim: usize,
    spin_dim: usize,
    hbar: f64,
    constant: CMat,
    driven: Vec<(TimeEnvelope, CMat)>,
}

impl HybridHamiltonian {
    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn total_dim(&self) -> usize {
        self.fock_dim * self.spin_dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn is_autonomous(&self) -> bool {
        self.driven.is_empty()
    }

    pub fn constant_part(&self) -> &CMat {
        &self.constant
    }

    pub fn driven_parts(&self) -> &[(TimeEnvelope, CMat)] {
        &self.driven
    }

    /// Dense matrix at time t.
    pub fn at(&self, t: f64) -> CMat {
        let mut h = self.constant.clone();
        for (envelope, mat) in &self.driven {
            h += mat * C64::new(envelope(t), 0.0);
        }
        h
    }

    /// Hermiticity invariant: 1e-12 (relative) for the autonomous part,
    /// 1e-10 at the sampled times for driven Hamiltonians.
    pub fn check_hermiticity(&self, sample_times: &[f64]) -> Result<()> {
        let scale = self.constant.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let r = hermiticity_residual(&self.constant);
        if r > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "autonomous Hamiltonian part is not Hermitian (residual {r:.3e})"
            )));
        }
        for &t in sample_times {
            let h = self.at(t);
            let scale = h.iter().map(|c| c.norm()).fold(1.0, f64::max);
            let r = hermiticity_residual(&h);
            if r > 1e-10 * scale {
                return Err(Error::Validation(format!(
                    "Hamiltonian is not Hermitian at t = {t} (residual {r:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Build the hybrid Hamiltonian from additive terms.
pub fn assemble_hamiltonian(
    ops: &OrbitalOperators,
    rep: &SpinRepresentation,
    terms: Vec<HamiltonianTerm>,
) -> Result<HybridHamiltonian> {
    let m = ops.dim();
    let n = rep.spin().dimension();
    let hbar = ops.hbar();
    let eye_m = CMat::identity(m, m);
    let eye_n = CMat::identity(n, n);
    let mut constant = CMat::zeros(m * n, m * n);
    let mut driven: Vec<(TimeEnvelope, CMat)> = Vec::new();

    for term in terms {
        match term {
            HamiltonianTerm::Oscillator { omega } => {
                if !(omega.is_finite()) {
                    return Err(Error::Validation("oscillator frequency must be finite".into()));
                }
                constant += ops.oscillator_hamiltonian(omega).kronecker(&eye_n);
            }
            HamiltonianTerm::OrbitalMatrix(block) => {
                if block.nrows() != m || block.ncols() != m {
                    return Err(Error::Validation(format!(
                        "orbital block must be {m} x {m}, got {} x {}",
                        block.nrows(),
                        block.ncols()
                    )));
                }
                let scale = block.iter().map(|c| c.norm()).fold(1.0, f64::max);
                if hermiticity_residual(&block) > 1e-12 * scale {
                    return Err(Error::Validation(
                        "custom orbital block is not Hermitian".into(),
                    ));
                }
                constant += block.kronecker(&eye_n);
            }
            HamiltonianTerm::SpinConstant { weight } => {
                constant += eye_m.kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
            }
            HamiltonianTerm::SpinDriven { weight, envelope } => {
                let mat = eye_m.kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
                driven.push((envelope, mat));
            }
            HamiltonianTerm::PositionSpin { weight } => {
                constant += ops
                    .x()
                    .kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
            }
            HamiltonianTerm::MomentumSpin { weight } => {
                constant += ops
                    .momentum()
                    .kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
            }
            HamiltonianTerm::PositionSpinDriven { weight, envelope } => {
                let mat = ops
                    .x()
                    .kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
                driven.push((envelope, mat));
            }
            HamiltonianTerm::MomentumSpinDriven { weight, envelope } => {
                let mat = ops
                    .momentum()
                    .kronecker(&(rep.component(weight) * C64::new(hbar, 0.0)));
                driven.push((envelope, mat));
            }
        }
    }

    let h = HybridHamiltonian {
        fock_dim: m,
        spin_dim: n,
        hbar,
        constant,
        driven,
    };
    h.check_hermiticity(&[])?;
    Ok(h)
}

/// Collective coupling rate of the finite-size two-level ensemble:
/// g = 2 lambda / sqrt(n_atoms hbar) with n_atoms = 2s.
pub fn collective_coupling_rate(lambda: f64, hbar: f64, twice_s: u32) -> f64 {
    2.0 * lambda / (twice_s as f64 * hbar).sqrt()
}

/// Single-mode superradiance Hamiltonian
/// (omega_c/2)(x^2 + p^2) (x) I + omega3 hbar I (x) S3 + g x (x) hbar S1.
pub fn dicke_hamiltonian(
    ops: &OrbitalOperators,
    rep: &SpinRepresentation,
    lambda: f64,
    omega3: f64,
    omega_c: f64,
) -> Result<HybridHamiltonian> {
    let g = collective_coupling_rate(lambda, ops.hbar(), rep.spin().twice_s());
    assemble_hamiltonian(
        ops,
        rep,
        vec![
            HamiltonianTerm::Oscillator { omega: omega_c },
            HamiltonianTerm::SpinConstant {
                weight: [0.0, 0.0, omega3],
            },
            HamiltonianTerm::PositionSpin {
                weight: [g, 0.0, 0.0],
            },
        ],
    )
}

/// The same coupling seen from the frame co-rotating with the cavity:
/// hbar g [cos(omega_c t) x + sin(omega_c t) p] (x) S1. Purely driven.
pub fn interaction_picture_coupling(
    ops: &OrbitalOperators,
    rep: &SpinRepresentation,
    g: f64,
    omega_c: f64,
) -> Result<HybridHamiltonian> {
    assemble_hamiltonian(
        ops,
        rep,
        vec![
            HamiltonianTerm::PositionSpinDriven {
                weight: [g, 0.0, 0.0],
                envelope: Box::new(move |t| (omega_c * t).cos()),
            },
            HamiltonianTerm::MomentumSpinDriven {
                weight: [g, 0.0, 0.0],
                envelope: Box::new(move |t| (omega_c * t).sin()),
            },
        ],
    )
}
