//! Closed forms for the resonant single-mode superradiance model.
//!
//! In the frame co-rotating with the cavity the coupling is
//! H(t) = hbar g [cos(w_c t) x + sin(w_c t) p] (x) S1, whose Lie algebra
//! closes: with the accumulated displacements
//!
//!   a(t) = (g/w_c) sin(w_c t),   b(t) = (g/w_c)(1 - cos(w_c t)),
//!
//! the propagator factorizes exactly, either sequentially
//!
//!   U = exp(-i hbar J S1^2) exp(-i b p (x) S1) exp(-i a x (x) S1),
//!   J(t) = Int_0^t g cos(w_c tau) b(tau) dtau,
//!
//! or with the displacements combined,
//!
//!   U = exp(-i hbar (J - ab/2) S1^2) exp(-i (a x + b p) (x) S1).
//!
//! Conditioned on position, the spin Bloch vector is kicked by a rotation
//! about e1 with angle a(t) x. Entanglement growth only depends on the kick
//! rate r(t) = sqrt(a^2 + b^2) = (2g/w_c)|sin(w_c t / 2)|: the reduced-state
//! purity of the coherent-pair initial state is the Gaussian-weighted kernel
//!
//!   P(t) = Int Int w(x) w(y) (1 - sin^2(th0) sin^2(r (x-y)/2))^{2s} dx dy,
//!
//! with w the ground-state density and th0 the angle between the initial
//! Bloch vector and e1. The collective coupling follows the finite-ensemble
//! convention g = 2 lambda / sqrt(n hbar) with n = 2s two-level atoms.

use crate::error::{Error, Result};
use crate::fock::OrbitalOperators;
use crate::linalg::{expm_minus_i_hermitian, hermitian_eig, CMat, C64};
use crate::quad::{gauss_legendre, scale_to_interval};
use crate::scales::SimulationScales;
use crate::sphere::{rotate_about_axis, SphereDirection};
use crate::spin::SpinRepresentation;

/// Resonant superradiance parameters on top of the simulation scales.
#[derive(Debug, Clone, Copy)]
pub struct DickeModel {
    scales: SimulationScales,
    lambda: f64,
    omega3: f64,
    omega_c: f64,
}

impl DickeModel {
    pub fn new(scales: SimulationScales, lambda: f64, omega3: f64, omega_c: f64) -> Result<Self> {
        if !(lambda.is_finite() && omega3.is_finite()) {
            return Err(Error::Validation("model parameters must be finite".into()));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::Validation(format!(
                "cavity frequency must be positive, got {omega_c}"
            )));
        }
        Ok(Self {
            scales,
            lambda,
            omega3,
            omega_c,
        })
    }

    pub fn scales(&self) -> SimulationScales {
        self.scales
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega3(&self) -> f64 {
        self.omega3
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// g = 2 lambda / sqrt(2s hbar).
    pub fn coupling_rate(&self) -> f64 {
        crate::hamiltonian::collective_coupling_rate(
            self.lambda,
            self.scales.hbar(),
            self.scales.spin().twice_s(),
        )
    }

    /// Accumulated displacement and phase factors at time t (resonant case).
    pub fn kick_factors(&self, t: f64) -> KickFactors {
        let g = self.coupling_rate();
        let w = self.omega_c;
        let a = (g / w) * (w * t).sin();
        let b = (g / w) * (1.0 - (w * t).cos());
        // J = Int g cos(w tau) b(tau) = (g^2/w)[sin(wt)/w - t/2 - sin(2wt)/(4w)].
        let j = (g * g / w) * ((w * t).sin() / w - 0.5 * t - (2.0 * w * t).sin() / (4.0 * w));
        KickFactors {
            a,
            b,
            phase_j: j,
            kick_rate: (2.0 * g / w) * (0.5 * w * t).sin().abs(),
        }
    }
}

/// a, b, J and r = sqrt(a^2 + b^2) at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickFactors {
    pub a: f64,
    pub b: f64,
    pub phase_j: f64,
    pub kick_rate: f64,
}

/// Which exact factorization of the kicked propagator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KickFactorization {
    /// exp(-i hbar J S1^2) exp(-i b p S1) exp(-i a x S1).
    Sequential,
    /// exp(-i hbar (J - ab/2) S1^2) exp(-i (a x + b p) S1).
    Combined,
}

/// Dense closed-form propagator for the resonant model (omega3 = 0).
pub fn kick_unitary(
    ops: &OrbitalOperators,
    rep: &SpinRepresentation,
    factors: &KickFactors,
    variant: KickFactorization,
) -> CMat {
    let hbar = ops.hbar();
    let a1 = rep.s1();
    let a2 = a1 * a1;
    let eye_m = CMat::identity(ops.dim(), ops.dim());
    match variant {
        KickFactorization::Sequential => {
            let phase = expm_minus_i_hermitian(&eye_m.kronecker(&a2), hbar * factors.phase_j);
            let kick_p = expm_minus_i_hermitian(&ops.momentum().kronecker(a1), factors.b);
            let kick_x = expm_minus_i_hermitian(&ops.x().kronecker(a1), factors.a);
            phase * kick_p * kick_x
        }
        KickFactorization::Combined => {
            let phase = expm_minus_i_hermitian(
                &eye_m.kronecker(&a2),
                hbar * (factors.phase_j - 0.5 * factors.a * factors.b),
            );
            let shift = ops.x() * C64::new(factors.a, 0.0)
                + ops.momentum() * C64::new(factors.b, 0.0);
            phase * expm_minus_i_hermitian(&shift.kronecker(a1), 1.0)
        }
    }
}

/// Bloch direction of the spin field at position x: the initial direction
/// kicked by a rotation about e1 with angle a_t x.
pub fn spin_field_direction(n0: &SphereDirection, a_t: f64, x: f64) -> SphereDirection {
    let rotated = rotate_about_axis(n0.components(), [1.0, 0.0, 0.0], a_t * x);
    SphereDirection::from_vector(rotated).expect("rotation preserves the norm")
}

/// Spin action accumulated along the kick at position x, so the local phase
/// of the spin factor is s * alpha. Integrated with Simpson's rule on the
/// rotation angle; the dynamical part u.n is constant along a rotation.
pub fn spin_field_phase(n0: &SphereDirection, a_t: f64, x: f64) -> Result<f64> {
    let delta = a_t * x;
    if delta == 0.0 {
        return Ok(0.0);
    }
    let steps = 512;
    let h = delta / steps as f64;
    let n0c = n0.components();
    let kinetic = |tau: f64| -> Result<f64> {
        let n = rotate_about_axis(n0c, [1.0, 0.0, 0.0], tau);
        // ndot = e1 ^ n, per unit angle.
        let ndot = [0.0, -n[2], n[1]];
        let denom = 1.0 + n[2];
        if denom < 1e-9 {
            return Err(Error::Chart(
                "spin action term breaks down at the south pole along the kick".into(),
            ));
        }
        Ok((n[0] * ndot[1] - n[1] * ndot[0]) / denom)
    };
    // Simpson weights over an even number of panels.
    let mut acc = kinetic(0.0)? + kinetic(delta)?;
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * kinetic(k as f64 * h)?;
    }
    let kinetic_part = acc * h / 3.0;
    Ok(delta * n0c[0] + kinetic_part)
}

/// Closed-kernel purity evaluated at one fixed Gauss-Legendre order.
pub fn closed_kernel_purity_at_order(
    scales: &SimulationScales,
    n0: &SphereDirection,
    kick_rate: f64,
    order: usize,
) -> Result<f64> {
    let hbar = scales.hbar();
    let twice_s = scales.spin().twice_s() as i32;
    let cos_th0 = n0.components()[0];
    let sin2_th0 = (1.0 - cos_th0 * cos_th0).max(0.0);
    let half = 6.0 * hbar.sqrt();
    let density = |x: f64| (-x * x / hbar).exp() / (std::f64::consts::PI * hbar).sqrt();
    let kernel = |dx: f64| -> f64 {
        let s = (0.5 * kick_rate * dx).sin();
        (1.0 - sin2_th0 * s * s).powi(twice_s)
    };
    let (nodes, weights) = gauss_legendre(order);
    let (x, w) = scale_to_interval(&nodes, &weights, -half, half);
    // Window mass guard: the Gaussian must be fully captured.
    let mass: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * density(*xi)).sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::Quadrature(format!(
            "window mass defect {:.3e} at order {order}",
            (mass - 1.0).abs()
        )));
    }
    let mut p = 0.0;
    for i in 0..order {
        let wx = w[i] * density(x[i]);
        let mut inner = 0.0;
        for j in 0..order {
            inner += w[j] * density(x[j]) * kernel(x[i] - x[j]);
        }
        p += wx * inner;
    }
    Ok(p)
}

/// Purity of either reduced state after a kick at rate r, by Gauss-Legendre
/// quadrature of the closed kernel with automatic order doubling.
pub fn closed_kernel_purity(
    scales: &SimulationScales,
    n0: &SphereDirection,
    kick_rate: f64,
) -> Result<f64> {
    let mut prev: Option<f64> = None;
    let mut order = 48;
    loop {
        let p = closed_kernel_purity_at_order(scales, n0, kick_rate, order)?;
        if let Some(q) = prev {
            if (p - q).abs() < 1e-9 * p.abs().max(1e-30) {
                return Ok(p);
            }
        }
        if order >= 512 {
            return Err(Error::Quadrature(format!(
                "purity quadrature did not settle by order {order}"
            )));
        }
        prev = Some(p);
        order = (order * 2).min(512);
    }
}

/// Independent algebraic route to the same purity: expand the spin coherent
/// state in the S1 eigenbasis and sum Gaussian overlaps of the conditionally
/// displaced orbital states.
pub fn projection_purity_oracle(
    rep: &SpinRepresentation,
    scales: &SimulationScales,
    n0: &SphereDirection,
    kick_rate: f64,
) -> Result<f64> {
    let chi = crate::coherent::SpinCoherentState::new(rep, *n0)?;
    let (mu, v) = hermitian_eig(rep.s1());
    let amps = v.adjoint() * chi.vec();
    let probs: Vec<f64> = amps.iter().map(|c| c.norm_sqr()).collect();
    let hbar = scales.hbar();
    let mut p = 0.0;
    for i in 0..probs.len() {
        for j in 0..probs.len() {
            let dm = mu[i] - mu[j];
            p += probs[i] * probs[j] * (-dm * dm * kick_rate * kick_rate * hbar * 0.5).exp();
        }
    }
    Ok(p)
}

/// Closed-form purity curve over a time grid.
#[derive(Debug, Clone)]
pub struct PurityCurve {
    pub times: Vec<f64>,
    pub purity: Vec<f64>,
}

/// Least-squares constant of the envelope P(t) ~ (1 + c0 t^2)^{-1/2},
/// fitted through the origin on P^{-2} - 1 against t^2 over the supplied
/// window.
pub fn fit_purity_envelope(times: &[f64], purity: &[f64]) -> Result<f64> {
    if times.len() != purity.len() || times.len() < 2 {
        return Err(Error::Validation(
            "envelope fit needs matching time and purity samples, at least two".into(),
        ));
    }
    let mut x = Vec::with_capacity(times.len());
    let mut y = Vec::with_capacity(times.len());
    for (&t, &p) in times.iter().zip(purity) {
        if !(p.is_finite() && p > 0.0 && p <= 1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "purity sample {p} outside (0, 1]"
            )));
        }
        x.push(t * t);
        y.push(1.0 / (p * p) - 1.0);
    }
    Ok(crate::fit::fit_through_origin(&x, &y))
}

/// Envelope value (1 + c0 t^2)^{-1/2}.
pub fn envelope_value(c0: f64, t: f64) -> f64 {
    1.0 / (1.0 + c0 * t * t).sqrt()
}

pub fn purity_curve(
    model: &DickeModel,
    n0: &SphereDirection,
    t_grid: &[f64],
) -> Result<PurityCurve> {
    let scales = model.scales();
    let mut purity = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let r = model.kick_factors(t).kick_rate;
        purity.push(closed_kernel_purity(&scales, n0, r)?);
    }
    Ok(PurityCurve {
        times: t_grid.to_vec(),
        purity,
    })
}
