//! Spin coherent states and their closed-form algebra.
//!
//! A direction n with polar angles (theta, phi) defines the unitary
//!
//!   D(g_n) = exp((theta/2) (e^{i phi} S- - e^{-i phi} S+)),
//!
//! which maps the lowest-weight Dicke state e_0 to the coherent state
//! psi_n = D(g_n) e_0 and e_1 to the first excited state psi_{1,n}. The
//! exponent equals -i theta m.S with m = (-sin phi, cos phi, 0), so D is a
//! rotation by theta about an equatorial axis. Key identities implemented
//! and cross-checked here:
//!
//! * (n.S) psi_n = -s psi_n, and <psi_n, S psi_n> = -s n;
//! * closed-form amplitudes psi_n(k) = sqrt(C(2s,k)) cos^{2s-k}(theta/2)
//!   (-sin(theta/2) e^{-i phi})^k, the independent route used as an oracle;
//! * |<psi_n, psi_m>| = (1 - |n-m|^2/4)^s;
//! * the adjoint action D^H S_k D as a rotation of the vector of matrices,
//!   plus its rational form in the stereographic chart;
//! * the exact two-term decomposition
//!   S_k psi_n = -s n_k psi_n + sqrt(s/2) v_k(n) psi_{1,n}, with n.v(n) = 0.
//!
//! Directions inside the antipodal cap break the chart; the strict
//! constructors return a chart error there, while
//! `rotation_matrix_composed` squares the half-colatitude rotation (same
//! axis), which is the documented convention for reaching the south pole.

use crate::error::{Error, Result};
use crate::linalg::{expm_antihermitian, CMat, CVec, C64};
use crate::sphere::{rotate_about_axis, SphereDirection, ANTIPODAL_CAP};
use crate::spin::{SpinQuantumNumber, SpinRepresentation};

/// Anti-Hermitian exponent (theta/2)(e^{i phi} S- - e^{-i phi} S+).
fn rotation_exponent(rep: &SpinRepresentation, theta: f64, phi: f64) -> CMat {
    let ph = C64::from_polar(1.0, phi);
    (rep.s_minus() * ph - rep.s_plus() * ph.conj()) * C64::new(0.5 * theta, 0.0)
}

/// The rotation D(g_n). Errors inside the antipodal cap.
pub fn rotation_matrix(rep: &SpinRepresentation, n: &SphereDirection) -> Result<CMat> {
    let theta = n.theta();
    if theta > std::f64::consts::PI - ANTIPODAL_CAP {
        return Err(Error::Chart(format!(
            "rotation to colatitude {theta:.8} is inside the antipodal cap; \
             use the composed antipodal convention"
        )));
    }
    Ok(expm_antihermitian(&rotation_exponent(rep, theta, n.phi())))
}

/// Total variant of `rotation_matrix`: inside the antipodal cap the rotation
/// is built by squaring the half-colatitude rotation about the same axis.
pub fn rotation_matrix_composed(rep: &SpinRepresentation, n: &SphereDirection) -> CMat {
    let theta = n.theta();
    if theta > std::f64::consts::PI - ANTIPODAL_CAP {
        let half = expm_antihermitian(&rotation_exponent(rep, 0.5 * theta, n.phi()));
        &half * &half
    } else {
        expm_antihermitian(&rotation_exponent(rep, theta, n.phi()))
    }
}

/// A normalized spin coherent state together with its direction label.
#[derive(Debug, Clone)]
pub struct SpinCoherentState {
    spin: SpinQuantumNumber,
    n: SphereDirection,
    vec: CVec,
}

impl SpinCoherentState {
    /// psi_n = D(g_n) e_0 via the matrix construction.
    pub fn new(rep: &SpinRepresentation, n: SphereDirection) -> Result<Self> {
        let d = rotation_matrix(rep, &n)?;
        Ok(Self {
            spin: rep.spin(),
            n,
            vec: d.column(0).into_owned(),
        })
    }

    /// Build from the stereographic coordinate eta = -tan(theta/2) e^{-i phi}.
    pub fn from_chart(rep: &SpinRepresentation, eta: C64) -> Result<Self> {
        Self::new(rep, SphereDirection::from_chart(eta))
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }

    pub fn direction(&self) -> SphereDirection {
        self.n
    }

    pub fn vec(&self) -> &CVec {
        &self.vec
    }
}

/// Closed-form coherent amplitudes, evaluated in log space so large spins do
/// not overflow the binomial coefficients. Independent of the matrix route.
pub fn coherent_closed_form(spin: SpinQuantumNumber, n: &SphereDirection) -> CVec {
    let dim = spin.dimension();
    let twice_s = spin.twice_s() as usize;
    let theta = n.theta();
    let phi = n.phi();
    let (sin_h, cos_h) = (0.5 * theta).sin_cos();
    // ln k! for k = 0..2s, cumulative.
    let mut ln_fact = vec![0.0f64; dim];
    for k in 1..dim {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    CVec::from_fn(dim, |k, _| {
        if (k > 0 && sin_h == 0.0) || (k < twice_s && cos_h == 0.0) {
            return C64::new(0.0, 0.0);
        }
        let mut ln_mag = 0.5 * (ln_fact[twice_s] - ln_fact[k] - ln_fact[twice_s - k]);
        if k < twice_s {
            ln_mag += (twice_s - k) as f64 * cos_h.ln();
        }
        if k > 0 {
            ln_mag += k as f64 * sin_h.ln();
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        C64::from_polar(sign * ln_mag.exp(), -(k as f64) * phi)
    })
}

/// First excited coherent state psi_{1,n} = D(g_n) e_1.
pub fn excited_coherent_state(rep: &SpinRepresentation, n: &SphereDirection) -> Result<CVec> {
    let d = rotation_matrix(rep, n)?;
    Ok(d.column(1).into_owned())
}

/// |<psi_n, psi_m>| = exp(s log(1 - |n-m|^2/4)); exactly 0 for antipodal pairs.
pub fn overlap_magnitude(spin: SpinQuantumNumber, n: &SphereDirection, m: &SphereDirection) -> f64 {
    let d = n.distance(m);
    let arg = 1.0 - 0.25 * d * d;
    if arg <= 0.0 {
        return 0.0;
    }
    (spin.s() * arg.ln()).exp()
}

/// The conjugated matrices D^H S_k D for k = 1,2,3, in closed form: the
/// exponent is -i theta m.S with m = (-sin phi, cos phi, 0), so conjugation
/// rotates the matrix 3-vector, D^H S_k D = sum_l [R_m(theta)]_{kl} S_l.
pub fn adjoint_action(rep: &SpinRepresentation, n: &SphereDirection) -> Result<[CMat; 3]> {
    let theta = n.theta();
    if theta > std::f64::consts::PI - ANTIPODAL_CAP {
        return Err(Error::Chart(format!(
            "adjoint action at colatitude {theta:.8} is inside the antipodal cap"
        )));
    }
    let phi = n.phi();
    let axis = [-phi.sin(), phi.cos(), 0.0];
    let combine = |row: [f64; 3]| -> CMat {
        rep.s1() * C64::new(row[0], 0.0)
            + rep.s2() * C64::new(row[1], 0.0)
            + rep.s3() * C64::new(row[2], 0.0)
    };
    // Row k of R_m(theta) is R_m(-theta) e_k.
    Ok([
        combine(rotate_about_axis([1.0, 0.0, 0.0], axis, -theta)),
        combine(rotate_about_axis([0.0, 1.0, 0.0], axis, -theta)),
        combine(rotate_about_axis([0.0, 0.0, 1.0], axis, -theta)),
    ])
}

/// The same conjugated matrices in the stereographic chart, as rational
/// expressions in eta:
///
///   S3(eta) = [(1-u) S3 + eta S+ + conj(eta) S-] / (1+u),
///   S+(eta) = [-2 conj(eta) S3 + S+ - conj(eta)^2 S-] / (1+u),
///   S-(eta) = [-2 eta S3 + S- - eta^2 S+] / (1+u),   u = |eta|^2,
///
/// returned as the Cartesian triple (S1(eta), S2(eta), S3(eta)). The last
/// terms are forced by S-(eta) = S+(eta)^H and by the recursion
/// d/dtheta S+ = e^{i phi} S3(theta, phi); the conjugation oracle below pins
/// them.
pub fn adjoint_action_chart(rep: &SpinRepresentation, eta: C64) -> [CMat; 3] {
    let u = eta.norm_sqr();
    let d = C64::new(1.0 + u, 0.0);
    let s3c = (rep.s3() * C64::new(1.0 - u, 0.0) + rep.s_plus() * eta + rep.s_minus() * eta.conj())
        / d;
    let sp = (rep.s3() * (-2.0 * eta.conj()) + rep.s_plus()
        - rep.s_minus() * (eta.conj() * eta.conj()))
        / d;
    let sm = (rep.s3() * (-2.0 * eta) + rep.s_minus() - rep.s_plus() * (eta * eta)) / d;
    let half = C64::new(0.5, 0.0);
    let half_over_i = C64::new(0.0, -0.5);
    let s1c = (&sp + &sm) * half;
    let s2c = (&sp - &sm) * half_over_i;
    [s1c, s2c, s3c]
}

/// The complex 3-vector v(n) of the two-term decomposition, orthogonal to n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCoefficient {
    v: [C64; 3],
}

impl TangentCoefficient {
    pub fn components(&self) -> [C64; 3] {
        self.v
    }

    /// |n.v|, which vanishes identically.
    pub fn radial_defect(&self, n: &SphereDirection) -> f64 {
        let nn = n.components();
        (self.v[0] * nn[0] + self.v[1] * nn[1] + self.v[2] * nn[2]).norm()
    }
}

/// v(n) in closed form:
///   v1 = (cos t + 1)/2 + (cos t - 1)/2 e^{-2i p},
///   v2 = -i [(cos t + 1)/2 - (cos t - 1)/2 e^{-2i p}],
///   v3 = -sin t e^{-i p}.
pub fn tangent_coefficient(n: &SphereDirection) -> TangentCoefficient {
    let theta = n.theta();
    let phi = n.phi();
    let a = 0.5 * (theta.cos() + 1.0);
    let b = 0.5 * (theta.cos() - 1.0);
    let e2 = C64::from_polar(1.0, -2.0 * phi);
    let minus_i = C64::new(0.0, -1.0);
    TangentCoefficient {
        v: [
            e2 * b + a,
            (e2 * (-b) + a) * minus_i,
            C64::from_polar(theta.sin(), -phi) * (-1.0),
        ],
    }
}

/// Verify and return the two-term decomposition
/// S_k psi_n = -s n_k psi_n + sqrt(s/2) v_k(n) psi_{1,n}.
/// The leading coefficient -s n is returned as a real 3-vector. The residual
/// of each component equation is checked against 1e-10 s.
pub fn apply_spin_to_coherent(
    rep: &SpinRepresentation,
    n: &SphereDirection,
) -> Result<([f64; 3], TangentCoefficient)> {
    let d = rotation_matrix(rep, n)?;
    let psi = d.column(0).into_owned();
    let psi1 = d.column(1).into_owned();
    let s = rep.spin().s();
    let nn = n.components();
    let leading = [-s * nn[0], -s * nn[1], -s * nn[2]];
    let tangent = tangent_coefficient(n);
    let root = (0.5 * s).sqrt();
    let ops = [rep.s1(), rep.s2(), rep.s3()];
    for k in 0..3 {
        let lhs = ops[k] * &psi;
        let rhs = &psi * C64::new(leading[k], 0.0) + &psi1 * (tangent.v[k] * root);
        let residual = (lhs - rhs).norm();
        if residual > 1e-10 * s {
            return Err(Error::Validation(format!(
                "two-term decomposition residual {residual:.3e} in component {} \
                 exceeds 1e-10 s",
                k + 1
            )));
        }
    }
    Ok((leading, tangent))
}

/// Classical energy of the direction eta in the field: the normalized
/// covariant symbol H_c = G.n(eta), a rational function of the chart,
///
///   H_c = [G3 (1-u) - 2 G1 Re eta + 2 G2 Im eta] / (1+u),   u = |eta|^2.
///
/// Normalization is pinned by the matrix oracle <psi_eta, G.S psi_eta> = -s H_c.
pub fn covariant_symbol(field: [f64; 3], eta: C64) -> f64 {
    let u = eta.norm_sqr();
    (field[2] * (1.0 - u) - 2.0 * field[0] * eta.re + 2.0 * field[1] * eta.im) / (1.0 + u)
}
