//! Truncated Fock space for the orbital factor and the hybrid
//! (oscillator x spin) state container.
//!
//! Conventions: lowering operator a|n> = sqrt(n)|n-1>, position
//! x = sqrt(hbar/2)(a + a*), momentum p = i sqrt(hbar/2)(a* - a), so
//! [x, p] = i hbar exactly away from the truncation corner. Coherent states
//! are D(zeta)|0> with zeta = (q + i p)/sqrt(2 hbar) and Fock coefficients
//! exp(-|zeta|^2/2) zeta^n / sqrt(n!).
//!
//! Hybrid states are stored as an M x N coefficient matrix (row = Fock level,
//! column = Dicke index), flattened row-major so that operators assembled as
//! kron(orbital, spin) act on the flattened vector.

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use serde::{Deserialize, Serialize};

/// Size floor keeping truncated ladder algebra meaningful.
pub const MIN_FOCK_DIM: usize = 8;

/// Validated truncation parameters for the orbital factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFockTruncation")]
pub struct FockTruncation {
    m: usize,
    hbar: f64,
    omega_ref: f64,
}

#[derive(Deserialize)]
struct RawFockTruncation {
    m: usize,
    hbar: f64,
    omega_ref: f64,
}

impl TryFrom<RawFockTruncation> for FockTruncation {
    type Error = Error;
    fn try_from(raw: RawFockTruncation) -> Result<Self> {
        FockTruncation::new(raw.m, raw.hbar, raw.omega_ref)
    }
}

impl FockTruncation {
    pub fn new(m: usize, hbar: f64, omega_ref: f64) -> Result<Self> {
        if m < MIN_FOCK_DIM {
            return Err(Error::Validation(format!(
                "Fock dimension {m} below the minimum {MIN_FOCK_DIM}"
            )));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Validation(format!("hbar must be positive, got {hbar}")));
        }
        if !(omega_ref.is_finite() && omega_ref > 0.0) {
            return Err(Error::Validation(format!(
                "omega_ref must be positive, got {omega_ref}"
            )));
        }
        Ok(Self { m, hbar, omega_ref })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }
}

/// Dense orbital operators on the truncated space.
#[derive(Debug, Clone)]
pub struct OrbitalOperators {
    hbar: f64,
    lowering: CMat,
    x: CMat,
    momentum: CMat,
}

impl OrbitalOperators {
    pub fn dim(&self) -> usize {
        self.lowering.nrows()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn lowering(&self) -> &CMat {
        &self.lowering
    }

    pub fn raising(&self) -> CMat {
        self.lowering.adjoint()
    }

    pub fn x(&self) -> &CMat {
        &self.x
    }

    pub fn momentum(&self) -> &CMat {
        &self.momentum
    }

    /// Number operator a* a = diag(0, 1, ..., M-1).
    pub fn number(&self) -> CMat {
        let m = self.dim();
        CMat::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// (omega/2)(x^2 + p^2). In the truncated algebra the quadratic pieces
    /// cancel exactly: this equals hbar omega (N + 1/2) with a single
    /// corrupted corner entry.
    pub fn oscillator_hamiltonian(&self, omega: f64) -> CMat {
        (&self.x * &self.x + &self.momentum * &self.momentum) * C64::new(0.5 * omega, 0.0)
    }
}

/// Build lowering, position and momentum matrices for the truncation.
pub fn build_orbital_operators(fock: &FockTruncation) -> OrbitalOperators {
    let m = fock.dim();
    let mut lowering = CMat::zeros(m, m);
    for n in 1..m {
        lowering[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let raising = lowering.adjoint();
    let scale = (fock.hbar() / 2.0).sqrt();
    let x = (&lowering + &raising) * C64::new(scale, 0.0);
    let momentum = (&raising - &lowering) * C64::new(0.0, scale);
    OrbitalOperators {
        hbar: fock.hbar(),
        lowering,
        x,
        momentum,
    }
}

/// zeta = (q + i p) / sqrt(2 hbar).
pub fn coherent_parameter(q: f64, p: f64, hbar: f64) -> C64 {
    C64::new(q, p) / C64::new((2.0 * hbar).sqrt(), 0.0)
}

/// Smallest admissible truncation for a coherent parameter.
pub fn required_fock_dim(zeta: C64) -> usize {
    let needed = (4.0 * zeta.norm_sqr()).floor() as usize + 1;
    needed.max(MIN_FOCK_DIM)
}

/// Fock coefficients of the normalized coherent state D(zeta)|0>.
///
/// Requires |zeta|^2 < M/4 so the Poisson weight is far from the cutoff;
/// otherwise a truncation error reports the needed dimension.
pub fn coherent_state_fock(fock: &FockTruncation, zeta: C64) -> Result<CVec> {
    let m = fock.dim();
    if zeta.norm_sqr() >= m as f64 / 4.0 {
        return Err(Error::Truncation {
            msg: format!(
                "|zeta|^2 = {:.3} needs a Fock dimension of at least {}, have {m}",
                zeta.norm_sqr(),
                required_fock_dim(zeta)
            ),
            required_m: required_fock_dim(zeta),
        });
    }
    let mut c = CVec::zeros(m);
    c[0] = C64::new((-0.5 * zeta.norm_sqr()).exp(), 0.0);
    for n in 1..m {
        c[n] = c[n - 1] * zeta / C64::new((n as f64).sqrt(), 0.0);
    }
    let tail = tail_mass(c.as_slice(), 0.1);
    if tail > 1e-10 {
        return Err(Error::Truncation {
            msg: format!("coherent state leaks {tail:.3e} into the top Fock levels at M = {m}"),
            required_m: 2 * m,
        });
    }
    let norm = c.norm();
    Ok(c / C64::new(norm, 0.0))
}

/// Probability mass at the top `frac` of the Fock levels.
pub fn tail_mass(coeffs: &[C64], frac: f64) -> f64 {
    let m = coeffs.len();
    let start = m - ((m as f64 * frac).ceil() as usize).clamp(1, m);
    coeffs[start..].iter().map(|c| c.norm_sqr()).sum()
}

/// State of the combined oscillator x spin system on the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    coeffs: CMat,
}

impl HybridState {
    /// Wrap an M x N coefficient matrix (row = Fock level, column = Dicke index).
    pub fn new(coeffs: CMat) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Validation("hybrid state has non-finite entries".into()));
        }
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::Validation("hybrid state must be non-empty".into()));
        }
        Ok(Self { coeffs })
    }

    /// Product state orbital (x) spin.
    pub fn from_product(orbital: &CVec, spin: &CVec) -> Result<Self> {
        let coeffs = CMat::from_fn(orbital.len(), spin.len(), |i, j| orbital[i] * spin[j]);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &CMat {
        &self.coeffs
    }

    pub fn fock_dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn spin_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm < 1e-300 {
            return Err(Error::Validation("cannot normalize a null state".into()));
        }
        Ok(Self {
            coeffs: &self.coeffs / C64::new(norm, 0.0),
        })
    }

    /// <self, other> with the left factor conjugated.
    pub fn overlap(&self, other: &Self) -> C64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |<self, other>|, insensitive to global phases.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.overlap(other).norm()
    }

    /// Plain l2 distance, sensitive to the relative phase.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.coeffs - &other.coeffs)
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Probability mass in the top `frac` of the Fock levels, all spins.
    pub fn fock_tail_mass(&self, frac: f64) -> f64 {
        let m = self.fock_dim();
        let start = m - ((m as f64 * frac).ceil() as usize).clamp(1, m);
        (start..m)
            .map(|i| self.coeffs.row(i).iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Norm defect and truncation-leak invariants.
    pub fn validate(&self) -> Result<()> {
        if (self.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "hybrid state norm defect {:.3e}",
                (self.norm() - 1.0).abs()
            )));
        }
        let tail = self.fock_tail_mass(0.1);
        if tail > 1e-8 {
            return Err(Error::Truncation {
                msg: format!("hybrid state leaks {tail:.3e} into the top Fock levels"),
                required_m: 2 * self.fock_dim(),
            });
        }
        Ok(())
    }

    /// Row-major flattening consistent with kron(orbital, spin) operators.
    pub fn to_vector(&self) -> CVec {
        let (m, n) = (self.fock_dim(), self.spin_dim());
        CVec::from_fn(m * n, |k, _| self.coeffs[(k / n, k % n)])
    }

    pub fn from_vector(v: &CVec, fock_dim: usize, spin_dim: usize) -> Result<Self> {
        if v.len() != fock_dim * spin_dim {
            return Err(Error::Validation(format!(
                "vector length {} does not factor as {fock_dim} x {spin_dim}",
                v.len()
            )));
        }
        Self::new(CMat::from_fn(fock_dim, spin_dim, |i, j| v[i * spin_dim + j]))
    }
}
