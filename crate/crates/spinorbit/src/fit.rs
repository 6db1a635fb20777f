//! Small least-squares fits used by the scan and decoherence experiments.

/// Result of an ordinary least-squares line fit y = slope * x + intercept.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Relative residual ||y - fit||_2 / ||y - mean(y)||_2 (0 for a perfect
    /// fit; 1 means the fit explains nothing beyond the mean).
    pub rel_residual: f64,
}

/// Ordinary least squares on (x, y) pairs.
pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points for a line fit");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&xi, &yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - slope * xi - intercept;
            r * r
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|&yi| (yi - my) * (yi - my)).sum();
    let rel_residual = if ss_tot > 0.0 {
        (ss_res / ss_tot).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        rel_residual,
    }
}

/// Log-log slope fit: y ~ C * x^slope. Requires positive data.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|&v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|&v| v.ln()).collect();
    line_fit(&lx, &ly)
}

/// Least squares for y = c * x through the origin.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| a * b).sum();
    let sxx: f64 = x.iter().map(|&a| a * a).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|&v| 2.5 * v - 1.0).collect();
        let f = line_fit(&x, &y);
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.rel_residual < 1e-12);
    }

    #[test]
    fn loglog_recovers_power_law() {
        let x = [0.05f64, 0.02, 0.01, 0.005];
        let y: Vec<f64> = x.iter().map(|&v| 3.0 * v.powf(0.5)).collect();
        let f = loglog_slope(&x, &y);
        assert!((f.slope - 0.5).abs() < 1e-10);
    }

    #[test]
    fn origin_fit_matches_hand_value() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 3.9, 6.1];
        // c = sum(xy)/sum(x^2) = (2 + 7.8 + 18.3) / 14
        let c = fit_through_origin(&x, &y);
        assert!((c - 28.1 / 14.0).abs() < 1e-12);
    }
}
