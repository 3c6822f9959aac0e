//! Generalized Ait-Sahalia short-rate model.
//!
//! The original dynamics are
//!
//! ```text
//! dX = (a_{-1} X^{-1} - a_0 + a_1 X - a_2 X^gamma) dt + b X^theta dW
//! ```
//!
//! and the Lamperti variable `Y = X^(1 - theta)` carries additive noise:
//!
//! ```text
//! dY = f(Y) dt + b (1 - theta) dW,    f(y) = -lambda y + F(y),    lambda = (theta - 1) a_1
//! ```
//!
//! Every function here rejects non-positive states instead of raising them to
//! fractional powers. Schemes deal with negativity explicitly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to decide `gamma + 1 == 2 theta`.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("coefficient `{name}` must be positive, got {value}")]
    NonPositiveCoefficient { name: &'static str, value: f64 },
    #[error("exponent `{name}` must exceed 1, got {value}")]
    ExponentOutOfRange { name: &'static str, value: f64 },
    #[error("unsupported regime: gamma + 1 = {lhs} < 2 theta = {rhs}")]
    UnsupportedRegime { lhs: f64, rhs: f64 },
    #[error("state must be positive, got {0}")]
    NonPositiveState(f64),
}

/// Which moment regime the exponents fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `gamma + 1 > 2 theta`
    NonCritical,
    /// `gamma + 1 = 2 theta`
    Critical,
}

/// The seven unvalidated model constants, as they appear on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub a_minus1: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub gamma: f64,
    pub theta: f64,
}

/// Validated model constants.
///
/// Construct through [`ModelParams::validate`] (or deserialization, which
/// validates). Fields are read-only once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    a_minus1: f64,
    a0: f64,
    a1: f64,
    a2: f64,
    b: f64,
    gamma: f64,
    theta: f64,
    regime: Regime,
}

/// Constants of the linear part of the Lamperti drift and of the additive noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LampertiConstants {
    /// `(theta - 1) a_1`
    pub lambda: f64,
    /// `b (1 - theta)`, negative for `theta > 1`.
    pub noise_coeff: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ModelError;

    fn try_from(raw: RawParams) -> Result<Self, ModelError> {
        ModelParams::validate(raw)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        p.raw()
    }
}

#[inline]
fn check_state(z: f64) -> Result<f64, ModelError> {
    // NaN also fails this test
    if z > 0.0 {
        Ok(z)
    } else {
        Err(ModelError::NonPositiveState(z))
    }
}

impl ModelParams {
    pub fn validate(raw: RawParams) -> Result<Self, ModelError> {
        let coeffs = [
            ("a_minus1", raw.a_minus1),
            ("a0", raw.a0),
            ("a1", raw.a1),
            ("a2", raw.a2),
            ("b", raw.b),
        ];
        for (name, value) in coeffs {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::NonPositiveCoefficient { name, value });
            }
        }
        for (name, value) in [("gamma", raw.gamma), ("theta", raw.theta)] {
            if !(value > 1.0 && value.is_finite()) {
                return Err(ModelError::ExponentOutOfRange { name, value });
            }
        }
        let lhs = raw.gamma + 1.0;
        let rhs = 2.0 * raw.theta;
        let regime = if (lhs - rhs).abs() <= CRITICAL_REL_TOL * lhs.abs().max(rhs.abs()) {
            Regime::Critical
        } else if lhs > rhs {
            Regime::NonCritical
        } else {
            return Err(ModelError::UnsupportedRegime { lhs, rhs });
        };
        Ok(ModelParams {
            a_minus1: raw.a_minus1,
            a0: raw.a0,
            a1: raw.a1,
            a2: raw.a2,
            b: raw.b,
            gamma: raw.gamma,
            theta: raw.theta,
            regime,
        })
    }

    /// Non-critical parameter set fitted to short-rate data (`theta = 1.5`).
    pub fn non_critical() -> Self {
        Self::validate(RawParams {
            a_minus1: 0.00107,
            a0: 0.0517,
            a1: 0.877,
            a2: 4.604,
            b: 1.0,
            gamma: 3.0,
            theta: 1.5,
        })
        .expect("built-in parameter set is valid")
    }

    /// Critical parameter set, same coefficients with `theta = 2`.
    pub fn critical() -> Self {
        Self::validate(RawParams {
            theta: 2.0,
            ..Self::non_critical().raw()
        })
        .expect("built-in parameter set is valid")
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            a_minus1: self.a_minus1,
            a0: self.a0,
            a1: self.a1,
            a2: self.a2,
            b: self.b,
            gamma: self.gamma,
            theta: self.theta,
        }
    }

    pub fn a_minus1(&self) -> f64 {
        self.a_minus1
    }
    pub fn a0(&self) -> f64 {
        self.a0
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn lamperti_constants(&self) -> LampertiConstants {
        LampertiConstants {
            lambda: self.lambda(),
            noise_coeff: self.noise_coeff(),
        }
    }

    /// `(theta - 1) a_1`
    #[inline]
    pub fn lambda(&self) -> f64 {
        (self.theta - 1.0) * self.a1
    }

    /// `b (1 - theta)`
    #[inline]
    pub fn noise_coeff(&self) -> f64 {
        self.b * (1.0 - self.theta)
    }

    // ---- original coordinates -------------------------------------------

    pub fn drift_x(&self, x: f64) -> Result<f64, ModelError> {
        let x = check_state(x)?;
        Ok(self.a_minus1 / x - self.a0 + self.a1 * x - self.a2 * x.powf(self.gamma))
    }

    pub fn diffusion_x(&self, x: f64) -> Result<f64, ModelError> {
        let x = check_state(x)?;
        Ok(self.b * x.powf(self.theta))
    }

    pub fn diffusion_x_prime(&self, x: f64) -> Result<f64, ModelError> {
        let x = check_state(x)?;
        Ok(self.b * self.theta * x.powf(self.theta - 1.0))
    }

    /// Derivative of [`drift_x`](Self::drift_x), used by the implicit solvers.
    pub fn drift_x_prime(&self, x: f64) -> Result<f64, ModelError> {
        let x = check_state(x)?;
        Ok(-self.a_minus1 / (x * x) + self.a1
            - self.a2 * self.gamma * x.powf(self.gamma - 1.0))
    }

    // ---- Lamperti coordinates -------------------------------------------

    /// `y = x^(1 - theta)`
    pub fn lamperti(&self, x: f64) -> Result<f64, ModelError> {
        let x = check_state(x)?;
        Ok(x.powf(1.0 - self.theta))
    }

    /// `x = y^(1 / (1 - theta))`
    pub fn lamperti_inv(&self, y: f64) -> Result<f64, ModelError> {
        let y = check_state(y)?;
        Ok(y.powf(1.0 / (1.0 - self.theta)))
    }

    /// Transformed drift `f(y) = -lambda y + F(y)`.
    pub fn drift_y(&self, y: f64) -> Result<f64, ModelError> {
        let t = self.theta;
        let y = check_state(y)?;
        Ok((t - 1.0)
            * (self.a2 * y.powf((self.gamma - t) / (1.0 - t)) - self.a1 * y
                - self.a_minus1 * y.powf((t + 1.0) / (t - 1.0))
                + self.a0 * y.powf(t / (t - 1.0))
                + 0.5 * self.b * self.b * t / y))
    }

    /// Nonlinear part of the transformed drift (no `a_1` term).
    pub fn big_f(&self, y: f64) -> Result<f64, ModelError> {
        let y = check_state(y)?;
        Ok(self.big_f_unchecked(y))
    }

    #[inline]
    pub(crate) fn big_f_unchecked(&self, y: f64) -> f64 {
        let t = self.theta;
        let tm1 = t - 1.0;
        tm1 * (self.a2 * y.powf((self.gamma - t) / (1.0 - t))
            - self.a_minus1 * y.powf((t + 1.0) / tm1)
            + self.a0 * y.powf(t / tm1)
            + 0.5 * self.b * self.b * t / y)
    }

    /// `F'(y)`, term by term.
    pub fn big_f_prime(&self, y: f64) -> Result<f64, ModelError> {
        let y = check_state(y)?;
        Ok(self.big_f_prime_unchecked(y))
    }

    #[inline]
    pub(crate) fn big_f_prime_unchecked(&self, y: f64) -> f64 {
        let t = self.theta;
        let g = self.gamma;
        let tm1 = t - 1.0;
        -self.a2 * (g - t) * y.powf((g - 1.0) / (1.0 - t))
            - self.a_minus1 * (t + 1.0) * y.powf(2.0 / tm1)
            + self.a0 * t * y.powf(1.0 / tm1)
            - 0.5 * tm1 * self.b * self.b * t / (y * y)
    }

    /// `F''(y)`, term by term.
    pub fn big_f_second(&self, y: f64) -> Result<f64, ModelError> {
        let y = check_state(y)?;
        let t = self.theta;
        let g = self.gamma;
        let tm1 = t - 1.0;
        let e1 = (g - 1.0) / (1.0 - t);
        Ok(-self.a2 * (g - t) * e1 * y.powf(e1 - 1.0)
            - self.a_minus1 * (t + 1.0) * (2.0 / tm1) * y.powf(2.0 / tm1 - 1.0)
            + self.a0 * t / tm1 * y.powf(1.0 / tm1 - 1.0)
            + tm1 * self.b * self.b * t / (y * y * y))
    }

    /// `F(y) / (1 + tau F(y)^2)`; satisfies `tau * tamed_F^2 <= 1`.
    pub fn tamed_f(&self, y: f64, tau: f64) -> Result<f64, ModelError> {
        let f = self.big_f(y)?;
        Ok(tame_squared(f, tau))
    }

    // ---- moment admissibility -------------------------------------------

    /// Whether `sup_t E[Y_t^-p]` is known to be finite.
    pub fn negative_moment_admissible(&self, moment_order: f64) -> bool {
        let lower = 2.0 / (self.theta - 1.0);
        match self.regime {
            Regime::NonCritical => moment_order >= lower,
            Regime::Critical => {
                let upper = (2.0 * self.a2 + self.b * self.b)
                    / ((self.theta - 1.0) * self.b * self.b);
                moment_order >= lower && moment_order <= upper
            }
        }
    }

    /// Whether `sup_t E[Y_t^p]` is known to be finite.
    pub fn positive_moment_admissible(&self, moment_order: f64) -> bool {
        moment_order >= (self.gamma - 1.0) / (self.theta - 1.0)
    }

    /// Admissible negative-moment orders as `(lower, upper)`; `upper` is
    /// infinite in the non-critical regime.
    pub fn negative_moment_range(&self) -> (f64, f64) {
        let lower = 2.0 / (self.theta - 1.0);
        match self.regime {
            Regime::NonCritical => (lower, f64::INFINITY),
            Regime::Critical => (
                lower,
                (2.0 * self.a2 + self.b * self.b) / ((self.theta - 1.0) * self.b * self.b),
            ),
        }
    }

    pub fn positive_moment_threshold(&self) -> f64 {
        (self.gamma - 1.0) / (self.theta - 1.0)
    }
}

/// Taming with a squared denominator.
#[inline]
pub fn tame_squared(value: f64, tau: f64) -> f64 {
    value / (1.0 + tau * value * value)
}
