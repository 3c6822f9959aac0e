//! Exact flows of the four power-law pieces of `F`.
//!
//! Each piece `dZ = c Z^k dt` separates, so its flow over time `tau` is
//! `Z(tau) = [z^(1-k) + (1-k) c tau]^(1/(1-k))`:
//!
//! | kind | ODE                                   | flow                                              |
//! |------|---------------------------------------|---------------------------------------------------|
//! | U    | `(theta-1) a_2 U^((gamma-theta)/(1-theta))` | `[(gamma-1) a_2 tau + y^((gamma-1)/(theta-1))]^((theta-1)/(gamma-1))` |
//! | V    | `(1-theta) a_{-1} V^((theta+1)/(theta-1))`  | `[2 a_{-1} tau + y^(-2/(theta-1))]^(-(theta-1)/2)` |
//! | P    | `(theta-1) a_0 P^(theta/(theta-1))`         | `[y^(-1/(theta-1)) - a_0 tau]^(-(theta-1))`        |
//! | Q    | `b^2 theta (theta-1) / (2 Q)`               | `[b^2 theta (theta-1) tau + y^2]^(1/2)`            |
//!
//! Only the P flow can leave the domain: it blows up in finite time once
//! `a_0 tau` reaches `y^(-1/(theta-1))`.

use std::fmt;

use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubflowKind {
    U,
    V,
    P,
    Q,
}

impl SubflowKind {
    pub const ALL: [SubflowKind; 4] = [SubflowKind::U, SubflowKind::V, SubflowKind::P, SubflowKind::Q];

    /// Right-hand side of the sub-ODE, `dZ/dt`.
    pub fn vector_field(self, p: &ModelParams, z: f64) -> f64 {
        let t = p.theta();
        match self {
            SubflowKind::U => (t - 1.0) * p.a2() * z.powf((p.gamma() - t) / (1.0 - t)),
            SubflowKind::V => (1.0 - t) * p.a_minus1() * z.powf((t + 1.0) / (t - 1.0)),
            SubflowKind::P => (t - 1.0) * p.a0() * z.powf(t / (t - 1.0)),
            SubflowKind::Q => 0.5 * p.b() * p.b() * t * (t - 1.0) / z,
        }
    }
}

impl fmt::Display for SubflowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubflowKind::U => "U",
            SubflowKind::V => "V",
            SubflowKind::P => "P",
            SubflowKind::Q => "Q",
        };
        f.write_str(s)
    }
}

/// Exact flow of one sub-ODE from `y` over `tau`.
///
/// Returns `Err(base)` when the P flow blows up within the step, where
/// `base = y^(-1/(theta-1)) - a_0 tau <= 0`.
pub(crate) fn exact_flow(p: &ModelParams, kind: SubflowKind, y: f64, tau: f64) -> Result<f64, f64> {
    if tau == 0.0 {
        return Ok(y);
    }
    let t = p.theta();
    let tm1 = t - 1.0;
    match kind {
        SubflowKind::U => {
            let g1 = p.gamma() - 1.0;
            Ok((g1 * p.a2() * tau + y.powf(g1 / tm1)).powf(tm1 / g1))
        }
        SubflowKind::V => Ok((2.0 * p.a_minus1() * tau + y.powf(-2.0 / tm1)).powf(-0.5 * tm1)),
        SubflowKind::P => {
            let base = y.powf(-1.0 / tm1) - p.a0() * tau;
            if base > 0.0 {
                Ok(base.powf(-tm1))
            } else {
                Err(base)
            }
        }
        SubflowKind::Q => Ok((p.b() * p.b() * t * tm1 * tau + y * y).sqrt()),
    }
}
