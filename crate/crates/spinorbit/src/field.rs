//! Coupling fields G(t, X) and the orbital Hamiltonian H0(t, X).
//!
//! The classical layer sees the spin-orbit coupling through three real
//! scalar symbols G_1, G_2, G_3 on extended phase space (t, X), X = (q, p),
//! together with their X-gradients, plus an optional orbital Hamiltonian H0
//! with gradient and (for Gaussian width propagation) Hessian blocks. All
//! evaluators are plain closures behind a kind tag; constructors are provided
//! for the families used by the experiments:
//!
//! * time-only fields (constant or rotating), with vanishing gradients,
//! * fields affine in q (the first component of a linear coupling),
//! * the single-mode superradiance-style coupling G = (g q, 0, omega3) with a
//!   harmonic H0,
//! * fully custom closures.
//!
//! A finite-difference self-test compares the declared gradients against
//! central differences; every constructor here passes it by construction and
//! custom fields are expected to run it in their own tests.

use crate::classical::PhasePoint;
use nalgebra::DMatrix;

/// Family tag, used by capability checks further up the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    TimeOnly,
    Linear,
    Dicke,
    Custom,
}

/// Gradient of a scalar on phase space, split into q- and p-parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGradient {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl PhaseGradient {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dq: vec![0.0; dim],
            dp: vec![0.0; dim],
        }
    }
}

/// Second derivatives of H0: blocks d2/dq2, d2/dqdp, d2/dp2.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHessian {
    pub qq: DMatrix<f64>,
    pub qp: DMatrix<f64>,
    pub pp: DMatrix<f64>,
}

type ScalarFn = Box<dyn Fn(f64, &PhasePoint) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(f64, &PhasePoint) -> PhaseGradient + Send + Sync>;
type HessianFn = Box<dyn Fn(f64, &PhasePoint) -> PhaseHessian + Send + Sync>;
type FieldFn = Box<dyn Fn(f64, &PhasePoint) -> [f64; 3] + Send + Sync>;
type FieldGradientFn = Box<dyn Fn(f64, &PhasePoint) -> [PhaseGradient; 3] + Send + Sync>;

/// H0(t, X) with first derivatives and, when available, Hessian blocks.
pub struct OrbitalHamiltonian {
    value: ScalarFn,
    gradient: GradientFn,
    hessian: Option<HessianFn>,
}

impl OrbitalHamiltonian {
    /// H0 = 0 (interaction picture, or pure spin problems).
    pub fn zero(dim: usize) -> Self {
        let d = dim;
        Self {
            value: Box::new(|_, _| 0.0),
            gradient: Box::new(move |_, _| PhaseGradient::zeros(d)),
            hessian: Some(Box::new(move |_, _| PhaseHessian {
                qq: DMatrix::zeros(d, d),
                qp: DMatrix::zeros(d, d),
                pp: DMatrix::zeros(d, d),
            })),
        }
    }

    /// Isotropic harmonic oscillator H0 = omega (|q|^2 + |p|^2) / 2.
    pub fn harmonic(dim: usize, omega: f64) -> Self {
        let d = dim;
        Self {
            value: Box::new(move |_, z| {
                let sq: f64 = z.q.iter().map(|v| v * v).sum();
                let sp: f64 = z.p.iter().map(|v| v * v).sum();
                0.5 * omega * (sq + sp)
            }),
            gradient: Box::new(move |_, z| PhaseGradient {
                dq: z.q.iter().map(|v| omega * v).collect(),
                dp: z.p.iter().map(|v| omega * v).collect(),
            }),
            hessian: Some(Box::new(move |_, _| PhaseHessian {
                qq: DMatrix::identity(d, d) * omega,
                qp: DMatrix::zeros(d, d),
                pp: DMatrix::identity(d, d) * omega,
            })),
        }
    }

    pub fn custom(value: ScalarFn, gradient: GradientFn, hessian: Option<HessianFn>) -> Self {
        Self {
            value,
            gradient,
            hessian,
        }
    }

    pub fn value(&self, t: f64, z: &PhasePoint) -> f64 {
        (self.value)(t, z)
    }

    pub fn gradient(&self, t: f64, z: &PhasePoint) -> PhaseGradient {
        (self.gradient)(t, z)
    }

    pub fn hessian(&self, t: f64, z: &PhasePoint) -> Option<PhaseHessian> {
        self.hessian.as_ref().map(|h| h(t, z))
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }
}

/// The three coupling symbols with gradients, plus H0.
pub struct CouplingField {
    kind: FieldKind,
    dim: usize,
    value: FieldFn,
    gradient: FieldGradientFn,
    h0: OrbitalHamiltonian,
}

impl CouplingField {
    /// Constant field G(t, X) = g.
    pub fn constant(g: [f64; 3]) -> Self {
        Self::time_only(move |_| g)
    }

    /// Rotating field G(t) = (g_perp cos(nu t), g_perp sin(nu t), g3).
    pub fn rotating(g_perp: f64, nu: f64, g3: f64) -> Self {
        Self::time_only(move |t| [g_perp * (nu * t).cos(), g_perp * (nu * t).sin(), g3])
    }

    /// Any purely time-dependent field; gradients vanish identically.
    pub fn time_only(g: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        Self {
            kind: FieldKind::TimeOnly,
            dim: 1,
            value: Box::new(move |t, _| g(t)),
            gradient: Box::new(|_, _| {
                [
                    PhaseGradient::zeros(1),
                    PhaseGradient::zeros(1),
                    PhaseGradient::zeros(1),
                ]
            }),
            h0: OrbitalHamiltonian::zero(1),
        }
    }

    /// One orbital degree of freedom, each component affine in q:
    /// G_k(t, X) = slope_k q + offset_k.
    pub fn linear_in_q(slope: [f64; 3], offset: [f64; 3]) -> Self {
        Self {
            kind: FieldKind::Linear,
            dim: 1,
            value: Box::new(move |_, z| {
                let q = z.q[0];
                [
                    slope[0] * q + offset[0],
                    slope[1] * q + offset[1],
                    slope[2] * q + offset[2],
                ]
            }),
            gradient: Box::new(move |_, _| {
                [
                    PhaseGradient {
                        dq: vec![slope[0]],
                        dp: vec![0.0],
                    },
                    PhaseGradient {
                        dq: vec![slope[1]],
                        dp: vec![0.0],
                    },
                    PhaseGradient {
                        dq: vec![slope[2]],
                        dp: vec![0.0],
                    },
                ]
            }),
            h0: OrbitalHamiltonian::zero(1),
        }
    }

    /// Superradiance-style single-mode coupling G = (g q, 0, omega3) with
    /// harmonic H0 at frequency omega_c.
    pub fn dicke(g: f64, omega3: f64, omega_c: f64) -> Self {
        let mut field = Self::linear_in_q([g, 0.0, 0.0], [0.0, 0.0, omega3]);
        field.kind = FieldKind::Dicke;
        field.h0 = OrbitalHamiltonian::harmonic(1, omega_c);
        field
    }

    pub fn custom(
        dim: usize,
        value: FieldFn,
        gradient: FieldGradientFn,
        h0: OrbitalHamiltonian,
    ) -> Self {
        Self {
            kind: FieldKind::Custom,
            dim,
            value,
            gradient,
            h0,
        }
    }

    /// Replace H0 (builder style).
    pub fn with_h0(mut self, h0: OrbitalHamiltonian) -> Self {
        self.h0 = h0;
        self
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, t: f64, z: &PhasePoint) -> [f64; 3] {
        (self.value)(t, z)
    }

    pub fn gradient(&self, t: f64, z: &PhasePoint) -> [PhaseGradient; 3] {
        (self.gradient)(t, z)
    }

    pub fn h0(&self) -> &OrbitalHamiltonian {
        &self.h0
    }

    /// Maximum relative deviation between declared gradients (field and H0)
    /// and central finite differences at (t, z), step h.
    pub fn gradient_self_test(&self, t: f64, z: &PhasePoint, h: f64) -> f64 {
        let declared = self.gradient(t, z);
        let h0_grad = self.h0.gradient(t, z);
        let mut worst = 0.0f64;
        let mut check = |fd: f64, dg: f64| {
            let scale = fd.abs().max(dg.abs()).max(1.0);
            worst = worst.max((fd - dg).abs() / scale);
        };
        for i in 0..z.dim() {
            for is_q in [true, false] {
                let mut plus = z.clone();
                let mut minus = z.clone();
                if is_q {
                    plus.q[i] += h;
                    minus.q[i] -= h;
                } else {
                    plus.p[i] += h;
                    minus.p[i] -= h;
                }
                let gp = self.evaluate(t, &plus);
                let gm = self.evaluate(t, &minus);
                for k in 0..3 {
                    let fd = (gp[k] - gm[k]) / (2.0 * h);
                    let dg = if is_q {
                        declared[k].dq[i]
                    } else {
                        declared[k].dp[i]
                    };
                    check(fd, dg);
                }
                let fd0 = (self.h0.value(t, &plus) - self.h0.value(t, &minus)) / (2.0 * h);
                let dg0 = if is_q { h0_grad.dq[i] } else { h0_grad.dp[i] };
                check(fd0, dg0);
            }
        }
        worst
    }
}
