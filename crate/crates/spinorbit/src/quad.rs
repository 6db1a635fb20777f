//! Quadrature rules: Gauss-Legendre nodes/weights and cumulative Simpson.

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial recurrence. Exact for polynomials of degree
/// 2n - 1; geometric convergence for analytic integrands.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Symmetric rule: solve for the non-negative half and mirror.
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi-style initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Map [-1, 1] nodes/weights to [a, b].
pub fn scale_to_interval(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        nodes.iter().map(|&x| mid + half * x).collect(),
        weights.iter().map(|&w| w * half).collect(),
    )
}

/// Cumulative integral of uniformly sampled values by composite Simpson.
/// Even-indexed nodes use the standard pair rule; odd-indexed nodes use the
/// one-sided half-interval rule dt/12 * (5 f0 + 8 f1 - f2). Both are O(dt^4),
/// so the cumulative values converge at fourth order on every node.
pub fn cumulative_simpson(f: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 1);
    let mut out = vec![0.0; n];
    if n == 1 {
        return out;
    }
    if n == 2 {
        // Single interval: trapezoid is the best available.
        out[1] = 0.5 * dt * (f[0] + f[1]);
        return out;
    }
    for i in 1..n {
        if i % 2 == 0 {
            out[i] = out[i - 2] + dt / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        } else if i + 1 < n {
            out[i] = out[i - 1] + dt / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
        } else {
            // Final odd node: mirrored half-interval rule.
            out[i] = out[i - 1] + dt / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_matches_reference_order_5() {
        // Abramowitz-Stegun 25.4.29 values for n = 5.
        let (x, w) = gauss_legendre(5);
        let xr = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let wr = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        for i in 0..5 {
            assert!((x[i] - xr[i]).abs() < 1e-13, "node {i}");
            assert!((w[i] - wr[i]).abs() < 1e-13, "weight {i}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree_polynomials() {
        for n in [1usize, 2, 3, 4, 8, 17] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let got: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!(
                    (got - exact).abs() < 1e-12,
                    "n={n} deg={deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss_legendre_gaussian_integral() {
        // int_{-6}^{6} exp(-x^2) dx = sqrt(pi) up to ~1e-16 tail.
        let (x, w) = gauss_legendre(48);
        let (xs, ws) = scale_to_interval(&x, &w, -6.0, 6.0);
        let got: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&xi, &wi)| wi * (-xi * xi).exp())
            .sum();
        assert!((got - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cumulative_simpson_fourth_order() {
        // Integrand with a known antiderivative on [0, 2].
        let f = |t: f64| (1.3 * t).sin() + 0.5 * t * t;
        let int = |t: f64| (1.0 - (1.3 * t).cos()) / 1.3 + t * t * t / 6.0;
        let mut errs = Vec::new();
        for &n in &[41usize, 81] {
            let dt = 2.0 / (n - 1) as f64;
            let samples: Vec<f64> = (0..n).map(|i| f(i as f64 * dt)).collect();
            let cum = cumulative_simpson(&samples, dt);
            let err = (0..n)
                .map(|i| (cum[i] - int(i as f64 * dt)).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.6, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn cumulative_simpson_polynomial_exactness() {
        let n = 11;
        let dt = 0.3;
        // Quadratics are integrated exactly on every node (the half-interval
        // rule is the integral of the parabolic interpolant).
        let quad_samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                2.0 - t + 3.0 * t * t
            })
            .collect();
        let cum = cumulative_simpson(&quad_samples, dt);
        for i in 0..n {
            let t = i as f64 * dt;
            let exact = 2.0 * t - t * t / 2.0 + t * t * t;
            assert!((cum[i] - exact).abs() < 1e-12, "quadratic node {i}");
        }
        // Cubics are exact on even nodes (pair rule).
        let cubic_samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                t * t * t
            })
            .collect();
        let cum = cumulative_simpson(&cubic_samples, dt);
        for i in (0..n).step_by(2) {
            let t = i as f64 * dt;
            assert!((cum[i] - t * t * t * t / 4.0).abs() < 1e-12, "cubic node {i}");
        }
    }
}
