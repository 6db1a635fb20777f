//! The two small parameters of the hybrid system and their coupling.
//!
//! The orbital degree of freedom is semiclassical in hbar while the spin is
//! semiclassical in 1/s; the product kappa = hbar * s is the effective
//! strength with which the spin back-reacts on the orbit. Regimes are often
//! parametrised by s = c * hbar^(-delta): kappa stays O(hbar^(1-delta)), so
//! delta < 1 keeps the back-reaction vanishing while delta = 1 makes it O(1).
//! Experiments treat (hbar, s) as the primitive pair; delta is a diagnostic.

use crate::error::{Error, Result};
use crate::spin::SpinQuantumNumber;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationScales {
    hbar: f64,
    spin: SpinQuantumNumber,
}

impl SimulationScales {
    pub fn new(hbar: f64, spin: SpinQuantumNumber) -> Result<Self> {
        if !hbar.is_finite() || hbar <= 0.0 {
            return Err(Error::Validation(format!(
                "hbar must be a positive real, got {hbar}"
            )));
        }
        Ok(Self { hbar, spin })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }

    pub fn s(&self) -> f64 {
        self.spin.s()
    }

    /// Effective coupling kappa = hbar * s.
    pub fn kappa(&self) -> f64 {
        self.hbar * self.spin.s()
    }

    /// Exponent delta solving s = c * hbar^(-delta), for a given constant c.
    pub fn delta(&self, c: f64) -> f64 {
        (self.spin.s() / c).ln() / (1.0 / self.hbar).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_is_the_exact_product() {
        let spin = SpinQuantumNumber::new(9).unwrap();
        let scales = SimulationScales::new(0.02, spin).unwrap();
        assert_eq!(scales.kappa(), 0.02 * 4.5);
    }

    #[test]
    fn delta_recovers_the_scaling_exponent() {
        // s = c hbar^(-delta) with c = 2, delta = 0.5, hbar = 1/400 -> s = 40.
        let spin = SpinQuantumNumber::new(80).unwrap();
        let scales = SimulationScales::new(1.0 / 400.0, spin).unwrap();
        assert!((scales.delta(2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_hbar() {
        let spin = SpinQuantumNumber::new(1).unwrap();
        assert!(SimulationScales::new(0.0, spin).is_err());
        assert!(SimulationScales::new(f64::NAN, spin).is_err());
    }
}
