//! Probability that the explicit tamed-splitting proposal goes negative, the
//! resulting lower bound on staying positive over a horizon, and the
//! largest step size that keeps that bound above `1 - epsilon`.

use crate::model::{ModelError, ModelParams};

use super::{normal_cdf, normal_sf, AnalysisError};

/// Inputs of the horizon-wide survival bound.
///
/// `m1 <= Y_n <= m2` are assumed almost-sure bounds on the numerical
/// solution. They are not constructed here; callers supply them or harvest
/// them from simulated extrema.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityBoundInputs {
    pub params: ModelParams,
    pub m1: f64,
    pub m2: f64,
    pub epsilon: f64,
    pub horizon: f64,
}

impl PositivityBoundInputs {
    pub fn new(params: ModelParams, m1: f64, m2: f64, epsilon: f64, horizon: f64) -> Result<Self, AnalysisError> {
        let inputs = PositivityBoundInputs {
            params,
            m1,
            m2,
            epsilon,
            horizon,
        };
        inputs.check()?;
        Ok(inputs)
    }

    fn check(&self) -> Result<(), AnalysisError> {
        if !(self.m1 > 0.0 && self.m1 <= self.m2 && self.m2.is_finite()) {
            return Err(AnalysisError::InvalidInputs(format!(
                "need 0 < m1 <= m2, got m1={} m2={}",
                self.m1, self.m2
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(AnalysisError::InvalidInputs(format!("epsilon {} not in (0, 1)", self.epsilon)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(AnalysisError::InvalidInputs(format!("horizon {} must be positive", self.horizon)));
        }
        Ok(())
    }
}

/// `P[explicit TSM proposal < 0 | Y_n = y] = 1 - Phi((y + tau F_tau(y)) / (b (theta-1) sqrt tau))`.
pub fn one_step_negativity_prob(p: &ModelParams, y: f64, tau: f64) -> Result<f64, ModelError> {
    let drifted = y + tau * p.tamed_f(y, tau)?;
    Ok(normal_sf(drifted / (p.b() * (p.theta() - 1.0) * tau.sqrt())))
}

/// `(y + F_tau(y)) / (b (theta-1) sqrt tau)`: the argument with the drift
/// not multiplied by the step size. Kept for comparison only; it does not
/// describe the implemented scheme.
pub fn unscaled_drift_argument(p: &ModelParams, y: f64, tau: f64) -> Result<f64, ModelError> {
    Ok((y + p.tamed_f(y, tau)?) / (p.b() * (p.theta() - 1.0) * tau.sqrt()))
}

/// Lower bound on `(y + tau F_tau(y)) / sqrt(tau)` over `m1 <= y <= m2`,
/// built term by term from the bounds (written `Y_tau` in the derivation).
pub fn bound_state_term(inputs: &PositivityBoundInputs, tau: f64) -> f64 {
    let p = &inputs.params;
    let (m1, m2) = (inputs.m1, inputs.m2);
    let (a_m1, a0, a2, b, g, t) = (p.a_minus1(), p.a0(), p.a2(), p.b(), p.gamma(), p.theta());
    let tm1 = t - 1.0;
    let numerator = tm1
        * tau.sqrt()
        * (a2 * m2.powf((g - t) / (1.0 - t)) - a_m1 * m2.powf((t + 1.0) / tm1)
            + a0 * m1.powf(t / tm1)
            + 0.5 * b * b * t / m2);
    let denominator = 1.0
        + 4.0
            * tau
            * tm1
            * tm1
            * (a2 * a2 * m1.powf((2.0 * g - 2.0 * t) / (1.0 - t))
                + a_m1 * a_m1 * m2.powf((2.0 * t + 2.0) / tm1)
                + a0 * a0 * m2.powf(2.0 * t / tm1)
                + 0.25 * b.powi(4) * t / (m1 * m1));
    m1 / tau.sqrt() + numerator / denominator
}

/// `Phi(Y_tau / (b (theta - 1)))^n_steps`.
pub fn survival_lower_bound(inputs: &PositivityBoundInputs, tau: f64, n_steps: u64) -> f64 {
    if n_steps == 0 {
        return 1.0;
    }
    let p = &inputs.params;
    let per_step = normal_cdf(bound_state_term(inputs, tau) / (p.b() * (p.theta() - 1.0)));
    // powi takes i32; fold larger exponents through exp/ln
    if n_steps <= i32::MAX as u64 {
        per_step.powi(n_steps as i32)
    } else {
        (n_steps as f64 * per_step.ln()).exp()
    }
}

/// `g(tau) = Y_tau - sqrt(-2 b^2 (theta-1)^2 ln(1 - (2 (1-eps)^(tau/T) - 1)^2))`.
///
/// `None` where the logarithm is undefined.
pub fn confidence_gap(inputs: &PositivityBoundInputs, tau: f64) -> Option<f64> {
    let p = &inputs.params;
    let c = 2.0 * (1.0 - inputs.epsilon).powf(tau / inputs.horizon) - 1.0;
    let arg = 1.0 - c * c;
    if !(arg > 0.0 && arg < 1.0) {
        return None;
    }
    let scale = p.b() * (p.theta() - 1.0);
    let threshold = (-2.0 * scale * scale * arg.ln()).sqrt();
    Some(bound_state_term(inputs, tau) - threshold)
}

const SCAN_POINTS: usize = 4096;
const TAU_MIN: f64 = 1e-12;
const TAU_MAX: f64 = 1.0 - 1e-12;

fn feasible(inputs: &PositivityBoundInputs, tau: f64) -> bool {
    confidence_gap(inputs, tau).is_some_and(|g| g >= 0.0)
}

/// Largest `tau` in `(0, 1)` with `g(tau) >= 0`.
///
/// A log-spaced scan from the top locates the last feasible grid point, and
/// bisection refines the crossing to 1e-10 relative. The returned value is
/// always on the feasible side.
pub fn tau_for_confidence(inputs: &PositivityBoundInputs) -> Result<f64, AnalysisError> {
    inputs.check()?;
    let ratio = (TAU_MAX / TAU_MIN).ln() / (SCAN_POINTS - 1) as f64;
    let grid = |k: usize| {
        if k == SCAN_POINTS - 1 {
            TAU_MAX
        } else {
            TAU_MIN * (ratio * k as f64).exp()
        }
    };
    let top = (0..SCAN_POINTS)
        .rev()
        .find(|&k| feasible(inputs, grid(k)))
        .ok_or(AnalysisError::NoFeasibleTau)?;
    if top == SCAN_POINTS - 1 {
        return Ok(TAU_MAX);
    }
    let (mut lo, mut hi) = (grid(top), grid(top + 1));
    while (hi - lo) > 1e-10 * lo {
        let mid = 0.5 * (lo + hi);
        if feasible(inputs, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
