//! The coupled classical system driving the semiclassical ansatz.
//!
//! State: an orbital phase point z = (q, p), a unit Bloch vector n, the
//! orbital action S, the spin action alpha, the complex symmetric Gaussian
//! width matrix Gamma (Im Gamma positive definite) and the complex prefactor
//! log-amplitude. With kappa = hbar s, lowest-weight coherent states carry
//! <S> = -s n, so the orbit feels the effective Hamiltonian H0 - kappa G.n:
//!
//!   dq/dt =  dH0/dp - kappa d(G.n)/dp,
//!   dp/dt = -dH0/dq + kappa d(G.n)/dq,
//!   dn/dt =  G(t, z) ^ n                       (Landau-Lifshitz),
//!   dS/dt = (p.dq/dt - q.dp/dt)/2 - H0,
//!   dalpha/dt = G.n + (n1 dn2/dt - n2 dn1/dt)/(1 + n3),
//!   dGamma/dt = -(Hqq + Hqp Gamma + Gamma Hqp^T + Gamma Hpp Gamma),
//!   d(ln pref)/dt = -tr(Hqp + Hpp Gamma)/2.
//!
//! The action split is calibrated so that exp((i/hbar) S + i s alpha + ln pref)
//! times the transported coherent pair reproduces exact quantum evolution in
//! the two solvable regimes (harmonic orbit: S = 0, ln pref = -i omega t / 2;
//! pure precession: alpha = omega t). An optional flag moves the kappa G.n
//! energy from alpha into S; the total phase is invariant because
//! kappa/hbar = s. The symmetrized integrand (p dq - q dp)/2 (rather than
//! p dq) is what makes the harmonic phase exact for the displacement-operator
//! coherent convention used by the Fock layer.
//!
//! All integration is fixed-step RK4 on the packed state, with per-node
//! renormalization of n (pre-renormalization drift is guarded) and a chart
//! guard on the spin-action term at the south pole.

use crate::error::{Error, Result};
use crate::field::CouplingField;
use crate::linalg::{CMat, C64};
use crate::scales::SimulationScales;
use crate::sphere::SphereDirection;
use serde::{Deserialize, Serialize};

/// A point of orbital phase space, any dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Validation(format!(
                "phase point needs matching dimensions, got q: {}, p: {}",
                q.len(),
                p.len()
            )));
        }
        let z = Self { q, p };
        if !z.is_finite() {
            return Err(Error::Validation("phase point has non-finite entries".into()));
        }
        Ok(z)
    }

    /// One orbital degree of freedom.
    pub fn scalar(q: f64, p: f64) -> Self {
        Self {
            q: vec![q],
            p: vec![p],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }
}

/// C ^ n, the Landau-Lifshitz right-hand side.
pub fn landau_lifshitz_rhs(c: [f64; 3], n: [f64; 3]) -> [f64; 3] {
    [
        c[1] * n[2] - c[2] * n[1],
        c[2] * n[0] - c[0] * n[2],
        c[0] * n[1] - c[1] * n[0],
    ]
}

/// Right-hand side of the coupled orbit + spin system; n may be slightly
/// off-sphere (integrator stages), it is used as given.
pub fn coupled_rhs(
    field: &CouplingField,
    scales: &SimulationScales,
    t: f64,
    z: &PhasePoint,
    n: [f64; 3],
) -> Result<(PhasePoint, [f64; 3])> {
    let g = field.evaluate(t, z);
    if !g.iter().all(|v| v.is_finite()) {
        return Err(Error::Step(format!(
            "field evaluated to non-finite values at t = {t}"
        )));
    }
    let kappa = scales.kappa();
    let grads = field.gradient(t, z);
    let h0_grad = field.h0().gradient(t, z);
    let d = z.dim();
    let mut qdot = vec![0.0; d];
    let mut pdot = vec![0.0; d];
    for i in 0..d {
        let mut gn_dp = 0.0;
        let mut gn_dq = 0.0;
        for k in 0..3 {
            gn_dp += n[k] * grads[k].dp[i];
            gn_dq += n[k] * grads[k].dq[i];
        }
        qdot[i] = h0_grad.dp[i] - kappa * gn_dp;
        pdot[i] = -h0_grad.dq[i] + kappa * gn_dq;
    }
    Ok((PhasePoint { q: qdot, p: pdot }, landau_lifshitz_rhs(g, n)))
}

/// One classical RK4 step of a fallible right-hand side.
pub fn rk4_step<F>(rhs: &F, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let k1 = rhs(t, y)?;
    let stage = |k: &[f64], w: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + w * dt * b).collect()
    };
    let k2 = rhs(t + 0.5 * dt, &stage(&k1, 0.5))?;
    let k3 = rhs(t + 0.5 * dt, &stage(&k2, 0.5))?;
    let k4 = rhs(t + dt, &stage(&k3, 1.0))?;
    Ok(y
        .iter()
        .enumerate()
        .map(|(i, a)| a + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Debug, Clone)]
pub struct TrajectoryOptions {
    /// RK4 substeps per grid interval.
    pub substeps: usize,
    /// Move the kappa G.n energy from the spin action into the orbital one.
    pub couple_in_orbital_action: bool,
    /// Propagate Gamma and the prefactor (needs H0 Hessians).
    pub propagate_gamma: bool,
    /// Allowed |n| drift per step before renormalization.
    pub drift_guard: f64,
    /// Initial width matrix; None means i I.
    pub gamma0: Option<CMat>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            couple_in_orbital_action: false,
            propagate_gamma: true,
            drift_guard: 1e-6,
            gamma0: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryNode {
    pub t: f64,
    pub z: PhasePoint,
    pub n: SphereDirection,
    /// Orbital action S(t).
    pub action_s: f64,
    /// Spin action alpha(t); the state phase is exp((i/hbar) S + i s alpha).
    pub alpha: f64,
    pub gamma: CMat,
    /// Accumulated complex log of the Gaussian prefactor.
    pub ln_prefactor: C64,
    /// |n| - 1 right before the renormalization at this node.
    pub drift_before_renorm: f64,
}

#[derive(Debug, Clone)]
pub struct SemiclassicalTrajectory {
    nodes: Vec<TrajectoryNode>,
    scales: SimulationScales,
    couple_in_orbital_action: bool,
}

impl SemiclassicalTrajectory {
    pub fn nodes(&self) -> &[TrajectoryNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TrajectoryNode {
        &self.nodes[i]
    }

    pub fn endpoint(&self) -> &TrajectoryNode {
        self.nodes.last().expect("trajectory has at least one node")
    }

    pub fn scales(&self) -> SimulationScales {
        self.scales
    }

    pub fn couple_in_orbital_action(&self) -> bool {
        self.couple_in_orbital_action
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.nodes
            .iter()
            .map(|nd| nd.n.norm_defect())
            .fold(0.0, f64::max)
    }

    /// Node-level invariants: unit Bloch vector, Im Gamma positive definite.
    pub fn validate(&self) -> Result<()> {
        for nd in &self.nodes {
            if nd.n.norm_defect() > 1e-9 {
                return Err(Error::Validation(format!(
                    "Bloch vector defect {:.3e} at t = {}",
                    nd.n.norm_defect(),
                    nd.t
                )));
            }
            let d = nd.gamma.nrows();
            let im = nalgebra::DMatrix::<f64>::from_fn(d, d, |i, j| nd.gamma[(i, j)].im);
            let sym = (&im + im.transpose()) * 0.5;
            let min_eig = sym
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig <= 0.0 {
                return Err(Error::Validation(format!(
                    "Im Gamma lost positivity (min eigenvalue {min_eig:.3e}) at t = {}",
                    nd.t
                )));
            }
        }
        Ok(())
    }
}

/// Packed-state layout for the extended RK4 integration.
#[derive(Clone, Copy)]
struct Layout {
    d: usize,
}

impl Layout {
    fn size(&self) -> usize {
        2 * self.d + 3 + 2 + 2 * self.d * self.d + 2
    }
    fn q(&self) -> std::ops::Range<usize> {
        0..self.d
    }
    fn p(&self) -> std::ops::Range<usize> {
        self.d..2 * self.d
    }
    fn n(&self) -> std::ops::Range<usize> {
        2 * self.d..2 * self.d + 3
    }
    fn s(&self) -> usize {
        2 * self.d + 3
    }
    fn alpha(&self) -> usize {
        2 * self.d + 4
    }
    fn gamma(&self) -> usize {
        2 * self.d + 5
    }
    fn ln_pref(&self) -> usize {
        2 * self.d + 5 + 2 * self.d * self.d
    }

    fn unpack_z(&self, y: &[f64]) -> PhasePoint {
        PhasePoint {
            q: y[self.q()].to_vec(),
            p: y[self.p()].to_vec(),
        }
    }
    fn unpack_n(&self, y: &[f64]) -> [f64; 3] {
        let r = self.n();
        [y[r.start], y[r.start + 1], y[r.start + 2]]
    }
    fn unpack_gamma(&self, y: &[f64]) -> CMat {
        let base = self.gamma();
        let d = self.d;
        CMat::from_fn(d, d, |i, j| {
            C64::new(y[base + i * d + j], y[base + d * d + i * d + j])
        })
    }
    fn pack_gamma(&self, y: &mut [f64], g: &CMat) {
        let base = self.gamma();
        let d = self.d;
        for i in 0..d {
            for j in 0..d {
                y[base + i * d + j] = g[(i, j)].re;
                y[base + d * d + i * d + j] = g[(i, j)].im;
            }
        }
    }
}

/// Integrate the coupled system over a strictly increasing grid, carrying the
/// actions, the width matrix and the prefactor.
pub fn integrate_trajectory(
    field: &CouplingField,
    scales: &SimulationScales,
    z0: &PhasePoint,
    n0: &SphereDirection,
    t_grid: &[f64],
    opts: &TrajectoryOptions,
) -> Result<SemiclassicalTrajectory> {
    if t_grid.len() < 2 {
        return Err(Error::Validation("time grid needs at least two nodes".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("time grid must be strictly increasing".into()));
    }
    if opts.substeps == 0 {
        return Err(Error::Validation("substeps must be >= 1".into()));
    }
    let d = z0.dim();
    if field.dim() != d {
        return Err(Error::Validation(format!(
            "field dimension {} does not match phase point dimension {d}",
            field.dim()
        )));
    }
    if opts.propagate_gamma && !field.h0().has_hessian() {
        return Err(Error::Capability(
            "Gamma propagation needs H0 Hessian blocks; supply them or disable it".into(),
        ));
    }
    let layout = Layout { d };
    let gamma0 = match &opts.gamma0 {
        Some(g) => {
            if g.nrows() != d || g.ncols() != d {
                return Err(Error::Validation(format!(
                    "Gamma0 must be {d} x {d}, got {} x {}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            g.clone()
        }
        None => CMat::identity(d, d) * C64::new(0.0, 1.0),
    };

    let couple = opts.couple_in_orbital_action;
    let propagate_gamma = opts.propagate_gamma;
    let rhs = move |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let z = layout.unpack_z(y);
        if !z.is_finite() {
            return Err(Error::Step(format!("non-finite orbit state at t = {t}")));
        }
        let n = layout.unpack_n(y);
        let (zdot, ndot) = coupled_rhs(field, scales, t, &z, n)?;
        let g = field.evaluate(t, &z);
        let gn = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
        let denom = 1.0 + n[2];
        if denom < 1e-9 {
            return Err(Error::Chart(format!(
                "spin action term breaks down at the south pole (1 + n3 = {denom:.3e} at t = {t})"
            )));
        }
        let kinetic = (n[0] * ndot[1] - n[1] * ndot[0]) / denom;
        let sym: f64 = (0..d)
            .map(|i| 0.5 * (z.p[i] * zdot.q[i] - z.q[i] * zdot.p[i]))
            .sum();
        let h0 = field.h0().value(t, &z);
        let (s_dot, alpha_dot) = if couple {
            (sym - h0 + scales.kappa() * gn, kinetic)
        } else {
            (sym - h0, gn + kinetic)
        };

        let mut dy = vec![0.0; layout.size()];
        dy[layout.q()].copy_from_slice(&zdot.q);
        dy[layout.p()].copy_from_slice(&zdot.p);
        dy[layout.n()].copy_from_slice(&ndot);
        dy[layout.s()] = s_dot;
        dy[layout.alpha()] = alpha_dot;
        if propagate_gamma {
            let hess = field.h0().hessian(t, &z).expect("checked above");
            let qq = crate::linalg::complexify(&hess.qq);
            let qp = crate::linalg::complexify(&hess.qp);
            let pp = crate::linalg::complexify(&hess.pp);
            let gamma = layout.unpack_gamma(y);
            let gdot = -(&qq + &qp * &gamma + &gamma * qp.transpose() + &gamma * &pp * &gamma);
            layout.pack_gamma(&mut dy, &gdot);
            let mut trace = C64::new(0.0, 0.0);
            for i in 0..d {
                trace += qp[(i, i)];
                for j in 0..d {
                    trace += pp[(i, j)] * gamma[(j, i)];
                }
            }
            let rate = trace * C64::new(-0.5, 0.0);
            dy[layout.ln_pref()] = rate.re;
            dy[layout.ln_pref() + 1] = rate.im;
        }
        Ok(dy)
    };

    let mut y = vec![0.0; layout.size()];
    y[layout.q()].copy_from_slice(&z0.q);
    y[layout.p()].copy_from_slice(&z0.p);
    y[layout.n()].copy_from_slice(&n0.components());
    layout.pack_gamma(&mut y, &gamma0);

    let make_node = |t: f64, y: &[f64], drift: f64| -> Result<TrajectoryNode> {
        let n_raw = layout.unpack_n(y);
        let n = SphereDirection::from_vector(n_raw)
            .map_err(|_| Error::Step(format!("Bloch vector degenerated at t = {t}")))?;
        Ok(TrajectoryNode {
            t,
            z: layout.unpack_z(y),
            n,
            action_s: y[layout.s()],
            alpha: y[layout.alpha()],
            gamma: layout.unpack_gamma(y),
            ln_prefactor: C64::new(y[layout.ln_pref()], y[layout.ln_pref() + 1]),
            drift_before_renorm: drift,
        })
    };

    let mut nodes = Vec::with_capacity(t_grid.len());
    nodes.push(make_node(t_grid[0], &y, 0.0)?);
    for w in t_grid.windows(2) {
        let dt = (w[1] - w[0]) / opts.substeps as f64;
        let mut t = w[0];
        for step in 0..opts.substeps {
            y = rk4_step(&rhs, t, &y, dt)?;
            t = if step + 1 == opts.substeps {
                w[1]
            } else {
                t + dt
            };
            // Renormalize the Bloch vector, guarding the drift.
            let r = layout.n();
            let n = &y[r.clone()];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let drift = (norm - 1.0).abs();
            if drift > opts.drift_guard {
                return Err(Error::Step(format!(
                    "Bloch norm drifted by {drift:.3e} in one step at t = {t}; \
                     reduce the step size"
                )));
            }
            for v in &mut y[r] {
                *v /= norm;
            }
            if step + 1 == opts.substeps {
                let node = make_node(t, &y, drift)?;
                if !node.z.is_finite() {
                    return Err(Error::Step(format!("non-finite orbit state at t = {t}")));
                }
                nodes.push(node);
            }
        }
    }

    Ok(SemiclassicalTrajectory {
        nodes,
        scales: *scales,
        couple_in_orbital_action: couple,
    })
}

/// Landau-Lifshitz flow in the stereographic chart, co-integrated with the
/// orbit so X-dependent fields see the back-reacted trajectory:
///
///   d(eta)/dt = [G1 (1 - eta^2) - i G2 (1 + eta^2) + 2 G3 eta] / (2i).
///
/// Returns eta at every grid node. |eta| > 1e6 aborts with a chart error.
pub fn integrate_complex_landau(
    field: &CouplingField,
    scales: &SimulationScales,
    z0: &PhasePoint,
    eta0: C64,
    t_grid: &[f64],
) -> Result<Vec<C64>> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation(
            "time grid must be strictly increasing with at least two nodes".into(),
        ));
    }
    let d = z0.dim();
    let rhs = move |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let z = PhasePoint {
            q: y[0..d].to_vec(),
            p: y[d..2 * d].to_vec(),
        };
        let eta = C64::new(y[2 * d], y[2 * d + 1]);
        if eta.norm() > 1e6 {
            return Err(Error::Chart(format!(
                "stereographic coordinate blew up (|eta| = {:.3e} at t = {t})",
                eta.norm()
            )));
        }
        let u = eta.norm_sqr();
        let n = [
            -2.0 * eta.re / (1.0 + u),
            2.0 * eta.im / (1.0 + u),
            (1.0 - u) / (1.0 + u),
        ];
        let (zdot, _) = coupled_rhs(field, scales, t, &z, n)?;
        let g = field.evaluate(t, &z);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let etadot = (one * g[0] * (one - eta * eta) - i * g[1] * (one + eta * eta)
            + eta * (2.0 * g[2]))
            / (2.0 * i);
        let mut dy = vec![0.0; 2 * d + 2];
        dy[0..d].copy_from_slice(&zdot.q);
        dy[d..2 * d].copy_from_slice(&zdot.p);
        dy[2 * d] = etadot.re;
        dy[2 * d + 1] = etadot.im;
        Ok(dy)
    };

    let mut y = vec![0.0; 2 * d + 2];
    y[0..d].copy_from_slice(&z0.q);
    y[d..2 * d].copy_from_slice(&z0.p);
    y[2 * d] = eta0.re;
    y[2 * d + 1] = eta0.im;
    let mut path = Vec::with_capacity(t_grid.len());
    path.push(eta0);
    for w in t_grid.windows(2) {
        y = rk4_step(&rhs, w[0], &y, w[1] - w[0])?;
        path.push(C64::new(y[2 * d], y[2 * d + 1]));
    }
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct PerturbationReport {
    /// ||X(t) - Y(t)|| at each grid node.
    pub separation: Vec<f64>,
    /// Fit of separation = slope * t through the origin over the fit window.
    pub fitted_slope: f64,
    /// ||G(t0, X0)||, so the expected leading slope is kappa * this.
    pub g_norm_at_start: f64,
    pub expected_slope: f64,
}

/// Integrate dY/dt = F(t, Y) and dX/dt = F(t, X) + kappa G(t, X) from the
/// same start and report how the solutions separate.
pub fn perturbation_divergence(
    f: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    g: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    kappa: f64,
    x0: &[f64],
    t_grid: &[f64],
    fit_window: f64,
) -> Result<PerturbationReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation(
            "time grid must be strictly increasing with at least two nodes".into(),
        ));
    }
    let base = |t: f64, y: &[f64]| -> Result<Vec<f64>> { Ok(f(t, y)) };
    let pert = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let mut dy = f(t, y);
        for (a, b) in dy.iter_mut().zip(g(t, y)) {
            *a += kappa * b;
        }
        Ok(dy)
    };
    let g0: f64 = g(t_grid[0], x0).iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = x0.to_vec();
    let mut x = x0.to_vec();
    let mut separation = vec![0.0];
    for w in t_grid.windows(2) {
        y = rk4_step(&base, w[0], &y, w[1] - w[0])?;
        x = rk4_step(&pert, w[0], &x, w[1] - w[0])?;
        let sep: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        separation.push(sep);
    }
    let t0 = t_grid[0];
    let mut ts = Vec::new();
    let mut seps = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        if t - t0 > 0.0 && t - t0 <= fit_window {
            ts.push(t - t0);
            seps.push(separation[i]);
        }
    }
    let fitted_slope = if ts.is_empty() {
        0.0
    } else {
        crate::fit::fit_through_origin(&ts, &seps)
    };
    Ok(PerturbationReport {
        separation,
        fitted_slope,
        g_norm_at_start: g0,
        expected_slope: kappa * g0,
    })
}

/// The coupled system as a flat ODE on [q.., p.., n1, n2, n3], split into the
/// uncoupled part F (H0 flow + precession) and the back-reaction direction G
/// so that F + kappa G is `coupled_rhs`.
pub fn split_coupled_flow<'a>(
    field: &'a CouplingField,
    scales: &'a SimulationScales,
) -> (
    impl Fn(f64, &[f64]) -> Vec<f64> + 'a,
    impl Fn(f64, &[f64]) -> Vec<f64> + 'a,
) {
    let d = field.dim();
    let unpack = move |y: &[f64]| -> (PhasePoint, [f64; 3]) {
        (
            PhasePoint {
                q: y[0..d].to_vec(),
                p: y[d..2 * d].to_vec(),
            },
            [y[2 * d], y[2 * d + 1], y[2 * d + 2]],
        )
    };
    let uncoupled = move |t: f64, y: &[f64]| -> Vec<f64> {
        let (z, n) = unpack(y);
        let g = field.evaluate(t, &z);
        let h0_grad = field.h0().gradient(t, &z);
        let ndot = landau_lifshitz_rhs(g, n);
        let mut dy = vec![0.0; 2 * d + 3];
        for i in 0..d {
            dy[i] = h0_grad.dp[i];
            dy[d + i] = -h0_grad.dq[i];
        }
        dy[2 * d..].copy_from_slice(&ndot);
        dy
    };
    let _ = scales;
    let back_reaction = move |t: f64, y: &[f64]| -> Vec<f64> {
        let (z, n) = unpack(y);
        let grads = field.gradient(t, &z);
        let mut dy = vec![0.0; 2 * d + 3];
        for i in 0..d {
            let mut gn_dp = 0.0;
            let mut gn_dq = 0.0;
            for k in 0..3 {
                gn_dp += n[k] * grads[k].dp[i];
                gn_dq += n[k] * grads[k].dq[i];
            }
            dy[i] = -gn_dp;
            dy[d + i] = gn_dq;
        }
        dy
    };
    (uncoupled, back_reaction)
}
