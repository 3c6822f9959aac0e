use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Least-squares line through `(log2 tau, log2 error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Empirical strong order.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log2(error)` on `log2(tau)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    if let Some(&(tau, error)) = points.iter().find(|(t, e)| !(*t > 0.0 && *e > 0.0)) {
        return Err(AnalysisError::NonPositivePoint { tau, error });
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.log2()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateDesign);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taus() -> Vec<f64> {
        (7..=11).map(|k| 2f64.powi(-k)).collect()
    }

    #[test]
    fn exact_lines() {
        for order in [1.0, 0.5] {
            let pts: Vec<_> = taus().into_iter().map(|t| (t, 3.0 * t.powf(order))).collect();
            let fit = fit_rate(&pts).unwrap();
            assert!((fit.slope - order).abs() < 1e-12);
            assert!((fit.intercept - 3f64.log2()).abs() < 1e-12);
            assert!((fit.r_squared - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_point_normal_equations() {
        // log2 tau = -1, -2, -3 ; log2 err = -1, -3, -4
        let pts = [(0.5, 0.5), (0.25, 0.125), (0.125, 0.0625)];
        // Hand-solved 2x2 normal equations:
        // n = 3, Sx = -6, Sxx = 14, Sy = -8, Sxy = 1 + 6 + 12 = 19
        // slope = (n Sxy - Sx Sy) / (n Sxx - Sx^2) = (57 - 48) / (42 - 36) = 1.5
        // intercept = (Sy - slope Sx) / n = (-8 + 9) / 3 = 1/3
        let fit = fit_rate(&pts).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 1.0 / 3.0).abs() < 1e-12);
        // residuals: -1 - (1/3 - 1.5) = 1/6 ; -3 - (1/3 - 3) = -1/3 ; -4 - (1/3 - 4.5) = 1/6
        // ss_res = 1/36 + 4/36 + 1/36 = 1/6 ; syy = (-1+8/3)^2 + (-3+8/3)^2 + (-4+8/3)^2 = 42/9
        let expected_r2 = 1.0 - (1.0 / 6.0) / (42.0 / 9.0);
        assert!((fit.r_squared - expected_r2).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_rate(&[(0.1, 1.0), (0.2, 2.0)]), Err(AnalysisError::TooFewPoints(2))));
        assert!(matches!(
            fit_rate(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]),
            Err(AnalysisError::DegenerateDesign)
        ));
        assert!(matches!(
            fit_rate(&[(0.1, 1.0), (0.2, 0.0), (0.3, 3.0)]),
            Err(AnalysisError::NonPositivePoint { .. })
        ));
    }

    #[test]
    fn constant_errors_fit_flat() {
        let pts: Vec<_> = taus().into_iter().map(|t| (t, 0.2)).collect();
        let fit = fit_rate(&pts).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }
}
