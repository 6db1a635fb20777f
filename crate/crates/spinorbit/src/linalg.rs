//! Dense complex linear algebra helpers on top of nalgebra.
//!
//! All matrix exponentials in this crate act on normal (anti-Hermitian or
//! i*Hermitian) generators, so they are evaluated through a Hermitian
//! eigendecomposition rather than scaling-and-squaring. The helpers here also
//! centralise the norms used by contract checks (entrywise, Frobenius,
//! operator 2-norm).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigendecomposition of a Hermitian matrix: (eigenvalues, eigenvectors).
/// Columns of the returned matrix are orthonormal eigenvectors.
pub fn hermitian_eig(h: &CMat) -> (DVector<f64>, CMat) {
    let se = h.clone().symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// exp(-i * tau * H) for Hermitian H, via eigendecomposition.
pub fn expm_minus_i_hermitian(h: &CMat, tau: f64) -> CMat {
    let (w, v) = hermitian_eig(h);
    apply_spectral_phase(&w, &v, tau)
}

/// Given the eigensystem of a Hermitian H, build exp(-i * tau * H).
/// Reusing a precomputed eigensystem keeps repeated propagator evaluations
/// at different times cheap.
pub fn apply_spectral_phase(w: &DVector<f64>, v: &CMat, tau: f64) -> CMat {
    let n = v.nrows();
    let mut scaled = v.clone();
    for j in 0..n {
        let ph = C64::from_polar(1.0, -tau * w[j]);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * v.adjoint()
}

/// exp(X) for anti-Hermitian X (X^dagger = -X). Writes X = -i * (iX) with
/// iX Hermitian and reuses the spectral route.
pub fn expm_antihermitian(x: &CMat) -> CMat {
    let ih = x.map(|z| z * C64::new(0.0, 1.0));
    expm_minus_i_hermitian(&ih, 1.0)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

/// Largest entrywise absolute difference between two matrices.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    let mut r: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            r = r.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    r
}

/// Operator 2-norm (largest singular value), computed from the Hermitian
/// eigenvalues of M^dagger M. Adequate for the moderate dimensions used in
/// contract checks.
pub fn op_norm(m: &CMat) -> f64 {
    let gram = m.adjoint() * m;
    let (w, _) = hermitian_eig(&gram);
    w.iter().cloned().fold(0.0f64, f64::max).max(0.0).sqrt()
}

/// Commutator [a, b] = ab - ba.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Real matrix promoted to a complex one.
pub fn complexify(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Flatten a matrix into the interleaved column-major layout used by the
/// debug dumps: [Re m[0,0], Im m[0,0], Re m[1,0], Im m[1,0], ...].
pub fn column_major_interleaved(m: &CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermitian_probe() -> CMat {
        let a = CMat::from_fn(4, 4, |i, j| {
            let re = 0.3 * ((i * 7 + j * 3) % 5) as f64;
            let im = 0.2 * (i as f64 - j as f64);
            C64::new(re, im)
        });
        (&a + a.adjoint()).map(|z| z * C64::new(0.5, 0.0))
    }

    #[test]
    fn spectral_exponential_is_unitary_and_matches_series() {
        let h = hermitian_probe();
        assert!(hermiticity_residual(&h) < 1e-14);
        let tau = 0.37;
        let u = expm_minus_i_hermitian(&h, tau);
        let id = CMat::identity(4, 4);
        assert!(max_abs_diff(&(&u * u.adjoint()), &id) < 1e-12);

        // Taylor series oracle at small tau * ||H||.
        let mut series = CMat::identity(4, 4);
        let mut term = CMat::identity(4, 4);
        let a = h.map(|z| z * C64::new(0.0, -tau));
        for k in 1..25 {
            term = (&term * &a).map(|z| z / C64::new(k as f64, 0.0));
            series += &term;
        }
        assert!(max_abs_diff(&u, &series) < 1e-12);
    }

    #[test]
    fn antihermitian_exponential_matches_phase_route() {
        let h = hermitian_probe();
        // X = -i h is anti-Hermitian; exp(X) must equal exp(-i h).
        let x = h.map(|z| z * C64::new(0.0, -1.0));
        let u1 = expm_antihermitian(&x);
        let u2 = expm_minus_i_hermitian(&h, 1.0);
        assert!(max_abs_diff(&u1, &u2) < 1e-12);
    }

    #[test]
    fn op_norm_on_known_matrix() {
        // diag(3, -4) has operator norm 4.
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(3.0, 0.0);
        m[(1, 1)] = C64::new(-4.0, 0.0);
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn interleaved_layout_is_column_major() {
        let m = CMat::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64));
        let v = column_major_interleaved(&m);
        // column 0: (0,0), (1,0) then column 1: (0,1), (1,1)
        assert_eq!(v, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }
}
