//! Directions on the unit sphere and their charts.
//!
//! The primary representation is the unit 3-vector n. Derived charts:
//!
//! * polar angles (theta, phi) with n = (sin t cos p, sin t sin p, cos t),
//! * the stereographic coordinate eta = -tan(theta/2) * exp(-i phi), the
//!   complex chart in which the spin coherent flow takes rational form:
//!   n1 = -2 Re eta / (1+|eta|^2), n2 = 2 Im eta / (1+|eta|^2),
//!   n3 = (1-|eta|^2) / (1+|eta|^2).
//!
//! The chart is regular everywhere except the antipode n = -e3 (theta = pi),
//! where |eta| diverges; chart accessors return a chart error inside the
//! antipodal cap theta > pi - 1e-6. When sin(theta) < 1e-14 the azimuth is
//! fixed to phi = 0 so pole handling is deterministic.

use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};

/// Colatitude above which the stereographic chart is considered broken.
pub const ANTIPODAL_CAP: f64 = 1e-6;
/// sin(theta) below which the azimuth is conventionally zero.
pub const POLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereDirection {
    n: [f64; 3],
}

impl SphereDirection {
    /// Build from any non-degenerate 3-vector; the input is normalized.
    /// Vectors shorter than 1e-12 are rejected.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::Validation(format!(
                "direction vector has norm {norm:.3e}, cannot normalize"
            )));
        }
        Ok(Self {
            n: [v[0] / norm, v[1] / norm, v[2] / norm],
        })
    }

    /// Build from polar angles.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        let (st, ct) = (theta.sin(), theta.cos());
        let (sp, cp) = (phi.sin(), phi.cos());
        Self {
            n: [st * cp, st * sp, ct],
        }
    }

    /// Build from the stereographic coordinate.
    pub fn from_chart(eta: C64) -> Self {
        let u = eta.norm_sqr();
        let d = 1.0 + u;
        Self {
            n: [-2.0 * eta.re / d, 2.0 * eta.im / d, (1.0 - u) / d],
        }
    }

    pub fn north() -> Self {
        Self { n: [0.0, 0.0, 1.0] }
    }

    pub fn components(&self) -> [f64; 3] {
        self.n
    }

    /// Colatitude in [0, pi]. atan2 keeps full precision near the poles,
    /// where acos(n3) would lose half the significant digits.
    pub fn theta(&self) -> f64 {
        let sxy = (self.n[0] * self.n[0] + self.n[1] * self.n[1]).sqrt();
        sxy.atan2(self.n[2])
    }

    /// Azimuth in [0, 2 pi); conventionally 0 at the poles.
    pub fn phi(&self) -> f64 {
        let s2 = self.n[0] * self.n[0] + self.n[1] * self.n[1];
        if s2.sqrt() < POLE_TOL {
            return 0.0;
        }
        let p = self.n[1].atan2(self.n[0]);
        if p < 0.0 {
            p + 2.0 * std::f64::consts::PI
        } else {
            p
        }
    }

    /// Stereographic coordinate; errors inside the antipodal cap.
    pub fn chart(&self) -> Result<C64> {
        let theta = self.theta();
        if theta > std::f64::consts::PI - ANTIPODAL_CAP {
            return Err(Error::Chart(format!(
                "direction at colatitude {theta:.8} is inside the antipodal cap; \
                 the stereographic coordinate diverges there"
            )));
        }
        let phi = self.phi();
        // tan(theta/2) >= 0 on [0, pi), so the modulus is the tangent itself.
        Ok(-C64::from_polar((0.5 * theta).tan(), -phi))
    }

    /// Euclidean distance |n - m| between two directions.
    pub fn distance(&self, other: &Self) -> f64 {
        let d0 = self.n[0] - other.n[0];
        let d1 = self.n[1] - other.n[1];
        let d2 = self.n[2] - other.n[2];
        (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.n[0] * other.n[0] + self.n[1] * other.n[1] + self.n[2] * other.n[2]
    }

    /// Norm defect |1 - |n||, useful for drift checks.
    pub fn norm_defect(&self) -> f64 {
        let norm = (self.n[0] * self.n[0] + self.n[1] * self.n[1] + self.n[2] * self.n[2]).sqrt();
        (1.0 - norm).abs()
    }
}

/// Rotation of a vector about a unit axis by an angle (Rodrigues formula).
pub fn rotate_about_axis(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let cross = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    [
        c * v[0] + s * cross[0] + (1.0 - c) * dot * axis[0],
        c * v[1] + s * cross[1] + (1.0 - c) * dot * axis[1],
        c * v[2] + s * cross[2] + (1.0 - c) * dot * axis[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_roundtrip() {
        for &(theta, phi) in &[
            (0.3, 0.7),
            (1.2, 4.0),
            (2.9, 0.01),
            (0.0, 0.0),
            (1.5707963, 3.1),
        ] {
            let d = SphereDirection::from_polar(theta, phi);
            let d2 = SphereDirection::from_polar(d.theta(), d.phi());
            assert!(d.distance(&d2) < 1e-10, "theta={theta} phi={phi}");
        }
    }

    #[test]
    fn chart_roundtrip() {
        for &(theta, phi) in &[(0.4, 1.1), (1.9, 5.9), (3.0, 2.2), (1e-8, 0.0)] {
            let d = SphereDirection::from_polar(theta, phi);
            let eta = d.chart().unwrap();
            let d2 = SphereDirection::from_chart(eta);
            assert!(d.distance(&d2) < 1e-10, "theta={theta} phi={phi}");
        }
    }

    #[test]
    fn chart_convention_signs() {
        // theta = pi/2, phi = 0 gives eta = -tan(pi/4) = -1.
        let d = SphereDirection::from_polar(std::f64::consts::FRAC_PI_2, 0.0);
        let eta = d.chart().unwrap();
        assert!((eta - C64::new(-1.0, 0.0)).norm() < 1e-12);
        // North pole maps to the origin of the chart.
        let eta0 = SphereDirection::north().chart().unwrap();
        assert!(eta0.norm() < 1e-12);
    }

    #[test]
    fn antipodal_cap_is_a_chart_error() {
        let d = SphereDirection::from_polar(std::f64::consts::PI - 1e-9, 0.3);
        assert!(matches!(d.chart(), Err(Error::Chart(_))));
    }

    #[test]
    fn pole_azimuth_is_zero() {
        let d = SphereDirection::from_vector([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.phi(), 0.0);
        let d = SphereDirection::from_vector([1e-16, -1e-16, -1.0]).unwrap();
        assert_eq!(d.phi(), 0.0);
    }

    #[test]
    fn degenerate_vector_rejected() {
        assert!(SphereDirection::from_vector([1e-13, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rodrigues_rotation_oracle() {
        // Rotating e3 about e1 by pi/2 gives -e2... check orientation:
        // e1 x e3 = -e2, so R_{e1}(pi/2) e3 = -e2? Rodrigues: c*v + s*(axis x v)
        // = 0 + 1 * (e1 x e3) = (0, -1, 0).
        let r = rotate_about_axis([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], std::f64::consts::FRAC_PI_2);
        assert!((r[0]).abs() < 1e-12 && (r[1] + 1.0).abs() < 1e-12 && r[2].abs() < 1e-12);
    }
}
