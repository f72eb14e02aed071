//! Power-law fits `E = A·h^α` by least squares on `(ln h, ln E)`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub a: f64,
    pub alpha: f64,
    pub sigma_a: f64,
    pub sigma_alpha: f64,
    /// Inclusive `[h_min, h_max]` window the points were taken from.
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Fits the points whose `h` lies inside `window` (inclusive).
///
/// `α` is the slope and `A = exp(intercept)`. Standard errors come from the
/// residual variance with `n − 2` degrees of freedom; `σ_A` is propagated
/// to first order (`σ_A = A·σ_intercept`).
pub fn fit_points(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(h, e) in points {
        if h < window.0 || h > window.1 {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::NonPositiveError { h, error: e });
        }
        xs.push(h.ln());
        ys.push(e.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::TooFewPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let s2 = ssr / (nf - 2.0);
    let sigma_slope = (s2 / sxx).sqrt();
    let sigma_intercept = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let a = intercept.exp();
    Ok(PowerLawFit {
        a,
        alpha: slope,
        sigma_a: a * sigma_intercept,
        sigma_alpha: sigma_slope,
        window,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = (0..6)
            .map(|i| {
                let h = 1e-3 * 2f64.powi(i);
                (h, 0.05 * h)
            })
            .collect();
        let fit = fit_points(&pts, (1e-4, 1.0)).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-12);
        assert!((fit.a - 0.05).abs() < 1e-12);
        assert!(fit.sigma_alpha < 1e-12);
        assert_eq!(fit.n_points, 6);
    }

    #[test]
    fn window_selects_points() {
        let pts = [(1e-4, 1.0), (1e-3, 1e-3), (2e-3, 2e-3), (4e-3, 4e-3), (1.0, 5.0)];
        let fit = fit_points(&pts, (1e-3, 1e-2)).unwrap();
        assert_eq!(fit.n_points, 3);
        assert!((fit.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let pts = [(1e-3, 1e-3), (2e-3, 2e-3)];
        assert!(matches!(fit_points(&pts, (0.0, 1.0)), Err(Error::TooFewPoints(2))));
    }

    #[test]
    fn non_positive_error_rejected() {
        let pts = [(1e-3, 1e-3), (2e-3, 0.0), (4e-3, 4e-3)];
        assert!(matches!(
            fit_points(&pts, (0.0, 1.0)),
            Err(Error::NonPositiveError { .. })
        ));
    }
}
