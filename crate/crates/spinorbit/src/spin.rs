//! The spin-s irreducible representation of su(2) in the Dicke basis.
//!
//! Basis convention: index k = 0..N-1 labels the Dicke state with magnetic
//! number m = k - s, i.e. twice_m = 2k - twice_s, lowest weight first. In this
//! ordering
//!
//!   S3      = diag(k - s),
//!   S+[k+1,k] = sqrt((twice_s - k)(k + 1)),   S- = S+^T,
//!   S1 = (S+ + S-)/2,   S2 = (S+ - S-)/(2i),
//!
//! and the ladder coefficients are square roots of exact integer products, so
//! the commutation relations hold to rounding error even at large s.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use serde::{Deserialize, Serialize};

/// Largest representation dimension constructed without an explicit override.
pub const MAX_DIM_DEFAULT: usize = 4097;

/// Half-integer spin stored as the integer 2s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinQuantumNumber {
    twice_s: u32,
}

impl SpinQuantumNumber {
    pub fn new(twice_s: u32) -> Result<Self> {
        if twice_s == 0 {
            return Err(Error::Validation(
                "spin quantum number must satisfy 2s >= 1".into(),
            ));
        }
        Ok(Self { twice_s })
    }

    pub fn twice_s(&self) -> u32 {
        self.twice_s
    }

    pub fn s(&self) -> f64 {
        f64::from(self.twice_s) / 2.0
    }

    /// Representation dimension N = 2s + 1.
    pub fn dimension(&self) -> usize {
        self.twice_s as usize + 1
    }

    /// Magnetic number m = k - s of the k-th Dicke basis state.
    pub fn m_of_index(&self, k: usize) -> f64 {
        (2.0 * k as f64 - f64::from(self.twice_s)) / 2.0
    }
}

/// Dense N x N matrices of the spin operators in the Dicke basis.
#[derive(Debug, Clone)]
pub struct SpinRepresentation {
    spin: SpinQuantumNumber,
    s_plus: CMat,
    s_minus: CMat,
    s1: CMat,
    s2: CMat,
    s3: CMat,
}

impl SpinRepresentation {
    pub fn new(spin: SpinQuantumNumber) -> Result<Self> {
        Self::with_max_dim(spin, MAX_DIM_DEFAULT)
    }

    pub fn with_max_dim(spin: SpinQuantumNumber, max_dim: usize) -> Result<Self> {
        let n = spin.dimension();
        if n > max_dim {
            return Err(Error::DimensionTooLarge { dim: n, max: max_dim });
        }
        let twice_s = spin.twice_s() as usize;
        let mut s_plus = CMat::zeros(n, n);
        for k in 0..n - 1 {
            // Integer product (2s - k)(k + 1) is exact in f64 for all allowed dims.
            let c = ((twice_s - k) as f64 * (k + 1) as f64).sqrt();
            s_plus[(k + 1, k)] = C64::new(c, 0.0);
        }
        let s_minus = s_plus.transpose();
        let half = C64::new(0.5, 0.0);
        let half_over_i = C64::new(0.0, -0.5);
        let s1 = (&s_plus + &s_minus) * half;
        let s2 = (&s_plus - &s_minus) * half_over_i;
        let mut s3 = CMat::zeros(n, n);
        for k in 0..n {
            s3[(k, k)] = C64::new(spin.m_of_index(k), 0.0);
        }
        Ok(Self {
            spin,
            s_plus,
            s_minus,
            s1,
            s2,
            s3,
        })
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }

    pub fn dimension(&self) -> usize {
        self.spin.dimension()
    }

    pub fn s_plus(&self) -> &CMat {
        &self.s_plus
    }

    pub fn s_minus(&self) -> &CMat {
        &self.s_minus
    }

    pub fn s1(&self) -> &CMat {
        &self.s1
    }

    pub fn s2(&self) -> &CMat {
        &self.s2
    }

    pub fn s3(&self) -> &CMat {
        &self.s3
    }

    /// Cartesian component e . S for a real 3-vector e (not necessarily unit).
    pub fn component(&self, e: [f64; 3]) -> CMat {
        &self.s1 * C64::new(e[0], 0.0)
            + &self.s2 * C64::new(e[1], 0.0)
            + &self.s3 * C64::new(e[2], 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs_diff};

    #[test]
    fn pauli_over_two_at_spin_half() {
        let rep = SpinRepresentation::new(SpinQuantumNumber::new(1).unwrap()).unwrap();
        // Basis is (m=-1/2, m=+1/2); sigma_k/2 in that ordering flips the
        // usual spin-up-first signs of sigma_2 and sigma_3.
        let s1 = rep.s1();
        assert!((s1[(0, 1)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((s1[(1, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        let s2 = rep.s2();
        assert!((s2[(0, 1)] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((s2[(1, 0)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        let s3 = rep.s3();
        assert!((s3[(0, 0)] - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((s3[(1, 1)] - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ladder_coefficient_spin_one() {
        // S+ on the lowest Dicke state of s=1 lands on the middle state
        // with coefficient sqrt((s-m)(s+m+1)) = sqrt(2) at m=-1.
        let rep = SpinRepresentation::new(SpinQuantumNumber::new(2).unwrap()).unwrap();
        let c = rep.s_plus()[(1, 0)];
        assert!((c - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(rep.s_plus()[(2, 0)].norm() == 0.0);
    }

    #[test]
    fn commutation_relations_hold_up_to_large_spin() {
        for twice_s in [1u32, 2, 3, 7, 40, 100] {
            let rep = SpinRepresentation::new(SpinQuantumNumber::new(twice_s).unwrap()).unwrap();
            let n = rep.dimension() as f64;
            let tol = 1e-12 * n;
            let i = C64::new(0.0, 1.0);
            let c12 = commutator(rep.s1(), rep.s2());
            assert!(max_abs_diff(&c12, &(rep.s3() * i)) < tol, "2s={twice_s}");
            let c23 = commutator(rep.s2(), rep.s3());
            assert!(max_abs_diff(&c23, &(rep.s1() * i)) < tol, "2s={twice_s}");
            let c31 = commutator(rep.s3(), rep.s1());
            assert!(max_abs_diff(&c31, &(rep.s2() * i)) < tol, "2s={twice_s}");
            // Ladder relations [S3,S+/-] = +/- S+/-.
            let cp = commutator(rep.s3(), rep.s_plus());
            assert!(max_abs_diff(&cp, rep.s_plus()) < tol);
            let cm = commutator(rep.s3(), rep.s_minus());
            assert!(max_abs_diff(&cm, &(-rep.s_minus())) < tol);
        }
    }

    #[test]
    fn cartesian_components_are_hermitian() {
        let rep = SpinRepresentation::new(SpinQuantumNumber::new(5).unwrap()).unwrap();
        for m in [rep.s1(), rep.s2(), rep.s3()] {
            assert!(crate::linalg::hermiticity_residual(m) < 1e-15);
        }
        let sp = rep.s1() + rep.s2() * C64::new(0.0, 1.0);
        assert!(max_abs_diff(&sp, rep.s_plus()) < 1e-15);
    }

    #[test]
    fn casimir_is_scalar() {
        let spin = SpinQuantumNumber::new(9).unwrap();
        let rep = SpinRepresentation::new(spin).unwrap();
        let s = spin.s();
        let casimir = rep.s1() * rep.s1() + rep.s2() * rep.s2() + rep.s3() * rep.s3();
        let expect = CMat::identity(rep.dimension(), rep.dimension()) * C64::new(s * (s + 1.0), 0.0);
        assert!(max_abs_diff(&casimir, &expect) < 1e-12 * rep.dimension() as f64);
    }

    #[test]
    fn dimension_guard() {
        let spin = SpinQuantumNumber::new(4097).unwrap();
        let err = SpinRepresentation::new(spin).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { dim: 4098, max: 4097 }));
        assert!(SpinRepresentation::with_max_dim(spin, 4098).is_ok());
    }

    #[test]
    fn zero_spin_rejected() {
        assert!(SpinQuantumNumber::new(0).is_err());
    }
}
