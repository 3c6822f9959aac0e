//! Closed-form positivity analytics for the tamed-splitting scheme and the
//! log-log regression used to read off convergence orders.

mod positivity;
mod rate;

use libm::erfc;
use thiserror::Error;

pub use positivity::{
    bound_state_term, confidence_gap, one_step_negativity_prob, survival_lower_bound, tau_for_confidence,
    unscaled_drift_argument, PositivityBoundInputs,
};
pub use rate::{fit_rate, RateFit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit needs positive tau and error, got ({tau}, {error})")]
    NonPositivePoint { tau: f64, error: f64 },
    #[error("all step sizes are equal")]
    DegenerateDesign,
    #[error("invalid positivity bound inputs: {0}")]
    InvalidInputs(String),
    #[error("no step size in (1e-12, 1) satisfies the confidence constraint")]
    NoFeasibleTau,
}

/// Standard normal CDF, `erfc(-x / sqrt 2) / 2`.
///
/// `erfc` comes from `libm` (the musl port, about one ulp); evaluating
/// through the complementary function keeps full relative accuracy in the
/// lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the standard normal density over
    /// `[0, x]`; independent of `erfc`.
    fn cdf_by_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let dens = |s: f64| (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = dens(0.0) + dens(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * dens(i as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    #[test]
    fn cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for x in [0.5, 1.0, 2.0, 5.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-14);
        }
        assert!((normal_cdf(1.959963985) - 0.975).abs() < 1e-9);
        for x in [0.1, 0.7, 1.959963985, 3.0, 6.0] {
            assert!((normal_cdf(x) - cdf_by_quadrature(x)).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn survival_function_tail() {
        assert!(normal_sf(40.0) >= 0.0);
        assert!((normal_sf(1.0) - (1.0 - normal_cdf(1.0))).abs() < 1e-15);
        assert!(normal_sf(-3.0) > 0.99);
    }
}
