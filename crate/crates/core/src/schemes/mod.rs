//! Time steppers for the Ait-Sahalia model.
//!
//! Four schemes advance the Lamperti variable `Y` and two advance `X`
//! directly:
//!
//! * [`SchemeId::Tsm`]: tamed-splitting. Exact Ornstein-Uhlenbeck decay
//!   around an explicit step whose nonlinearity is tamed as
//!   `F / (1 + tau F^2)`, with a backward Euler backstop whenever the explicit
//!   proposal is not positive.
//! * [`SchemeId::Splitting`]: the same OU decay composed with the exact flows
//!   of the four power-law pieces of `F` (see [`subflow`]).
//! * [`SchemeId::BemY`]: drift-implicit Euler on the `Y` equation.
//! * [`SchemeId::TemY`]: explicit Euler on `Y` with the full drift tamed as
//!   `f / (1 + tau |f|)`.
//! * [`SchemeId::RefBemX`]: drift-implicit Euler on the original equation,
//!   diffusion evaluated at the left point.
//! * [`SchemeId::TamedMilsteinX`]: tamed Milstein on the original equation,
//!   used as the fine reference. A non-positive proposal falls back to the
//!   drift-implicit step.
//!
//! Splitting and TEM share the TSM backstop; the flags in [`StepOutcome`]
//! record when it fires.

pub mod solver;
pub mod subflow;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{tame_squared, ModelError, ModelParams};
pub use solver::{find_bracket, solve_implicit, ImplicitProblem, Root, SolveError, RESIDUAL_TOL};
pub use subflow::SubflowKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("implicit step found no positive root: {0}")]
    BackstopNoRoot(#[source] SolveError),
    #[error("{kind} sub-flow leaves the domain within the step (base {base:e})")]
    FlowDomainExit { kind: SubflowKind, base: f64 },
    #[error("expected {expected} increments, got {got}")]
    IncrementCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "TSM")]
    Tsm,
    #[serde(rename = "Splitting")]
    Splitting,
    #[serde(rename = "BEM_Y")]
    BemY,
    #[serde(rename = "TEM_Y")]
    TemY,
    #[serde(rename = "RefBEM_X")]
    RefBemX,
    #[serde(rename = "TamedMilstein_X")]
    TamedMilsteinX,
}

/// State variable a scheme evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// Original short rate.
    X,
    /// Lamperti variable `X^(1 - theta)`.
    Y,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Tsm,
        SchemeId::Splitting,
        SchemeId::BemY,
        SchemeId::TemY,
        SchemeId::RefBemX,
        SchemeId::TamedMilsteinX,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Tsm => "TSM",
            SchemeId::Splitting => "Splitting",
            SchemeId::BemY => "BEM_Y",
            SchemeId::TemY => "TEM_Y",
            SchemeId::RefBemX => "RefBEM_X",
            SchemeId::TamedMilsteinX => "TamedMilstein_X",
        }
    }

    pub fn coordinate(self) -> Coordinate {
        match self {
            SchemeId::RefBemX | SchemeId::TamedMilsteinX => Coordinate::X,
            _ => Coordinate::Y,
        }
    }

    /// One step from `state` (in the scheme's own coordinate).
    pub fn step(self, p: &ModelParams, state: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
        match self {
            SchemeId::Tsm => step_tsm(p, state, dw, tau),
            SchemeId::Splitting => step_splitting(p, state, dw, tau),
            SchemeId::BemY => step_bem_y(p, state, dw, tau),
            SchemeId::TemY => step_tem_y(p, state, dw, tau),
            SchemeId::RefBemX => step_refbem_x(p, state, dw, tau),
            SchemeId::TamedMilsteinX => step_tamed_milstein_x(p, state, dw, tau),
        }
    }

    /// Converts an `X` value into this scheme's coordinate.
    pub fn from_x(self, p: &ModelParams, x: f64) -> Result<f64, ModelError> {
        match self.coordinate() {
            Coordinate::X => if x > 0.0 { Ok(x) } else { Err(ModelError::NonPositiveState(x)) },
            Coordinate::Y => p.lamperti(x),
        }
    }

    /// Converts a state in this scheme's coordinate back to `X`.
    pub fn to_x(self, p: &ModelParams, state: f64) -> Result<f64, ModelError> {
        match self.coordinate() {
            Coordinate::X => if state > 0.0 { Ok(state) } else { Err(ModelError::NonPositiveState(state)) },
            Coordinate::Y => p.lamperti_inv(state),
        }
    }

    /// Converts a state in this scheme's coordinate to `Y`.
    pub fn to_y(self, p: &ModelParams, state: f64) -> Result<f64, ModelError> {
        match self.coordinate() {
            Coordinate::X => p.lamperti(state),
            Coordinate::Y => if state > 0.0 { Ok(state) } else { Err(ModelError::NonPositiveState(state)) },
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Post-step state in the scheme's own coordinate; always positive.
    pub value: f64,
    pub backstop_used: bool,
    pub explicit_proposal_negative: bool,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

impl StepOutcome {
    fn explicit(value: f64) -> Self {
        StepOutcome {
            value,
            backstop_used: false,
            explicit_proposal_negative: false,
            solver_iterations: 0,
            solver_residual: 0.0,
        }
    }

    fn implicit(root: Root) -> Self {
        StepOutcome {
            value: root.root,
            backstop_used: false,
            explicit_proposal_negative: false,
            solver_iterations: root.iterations,
            solver_residual: root.residual,
        }
    }

    fn backstop(root: Root) -> Self {
        StepOutcome {
            backstop_used: true,
            explicit_proposal_negative: true,
            ..Self::implicit(root)
        }
    }
}

fn check_positive(z: f64) -> Result<f64, SchemeError> {
    if z > 0.0 {
        Ok(z)
    } else {
        Err(ModelError::NonPositiveState(z).into())
    }
}

fn initial_bracket(state: f64, shift: f64) -> (f64, f64) {
    (1e-12 * state, (10.0 * state).max(state + 10.0 * shift.abs()))
}

/// Solves `z - tau (F(z) - lambda z) = y + b (1 - theta) dW` for `z > 0`.
pub fn bem_y_root(p: &ModelParams, y: f64, dw: f64, tau: f64) -> Result<Root, SchemeError> {
    let y = check_positive(y)?;
    let lambda = p.lambda();
    let shift = p.noise_coeff() * dw;
    let rhs = y + shift;
    let residual = |z: f64| {
        if z <= 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let r = z * (1.0 + tau * lambda) - tau * p.big_f_unchecked(z) - rhs;
        let dr = 1.0 + tau * lambda - tau * p.big_f_prime_unchecked(z);
        (r, dr)
    };
    solve_positive(residual, y, shift)
}

/// Solves `z - tau drift_x(z) = x + b x^theta dW` for `z > 0`.
pub fn refbem_x_root(p: &ModelParams, x: f64, dw: f64, tau: f64) -> Result<Root, SchemeError> {
    let x = check_positive(x)?;
    let shift = p.diffusion_x(x)? * dw;
    let rhs = x + shift;
    let (a_m1, a0, a1, a2, g) = (p.a_minus1(), p.a0(), p.a1(), p.a2(), p.gamma());
    let residual = |z: f64| {
        if z <= 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let zg1 = z.powf(g - 1.0);
        let drift = a_m1 / z - a0 + a1 * z - a2 * zg1 * z;
        let drift_prime = -a_m1 / (z * z) + a1 - a2 * g * zg1;
        (z - tau * drift - rhs, 1.0 - tau * drift_prime)
    };
    solve_positive(residual, x, shift)
}

fn solve_positive<R>(residual: R, state: f64, shift: f64) -> Result<Root, SchemeError>
where
    R: Fn(f64) -> (f64, f64),
{
    let (lo, hi) = initial_bracket(state, shift);
    let bracket = find_bracket(&residual, lo, hi).map_err(SchemeError::BackstopNoRoot)?;
    let root = solve_implicit(ImplicitProblem {
        residual,
        bracket,
        tolerance: RESIDUAL_TOL,
        initial: Some(state),
    })
    .map_err(SchemeError::BackstopNoRoot)?;
    if root.root > 0.0 {
        Ok(root)
    } else {
        Err(SchemeError::BackstopNoRoot(SolveError::NoSignChange {
            lo: bracket.0,
            hi: bracket.1,
        }))
    }
}

/// Tamed-splitting step with backward Euler backstop.
pub fn step_tsm(p: &ModelParams, y: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    let y = check_positive(y)?;
    let tamed = tame_squared(p.big_f(y)?, tau);
    debug_assert!(tau * tamed * tamed <= 1.0, "taming bound violated");
    let proposal = (-p.lambda() * tau).exp() * (y + tau * tamed + p.noise_coeff() * dw);
    if proposal > 0.0 {
        Ok(StepOutcome::explicit(proposal))
    } else {
        Ok(StepOutcome::backstop(bem_y_root(p, y, dw, tau)?))
    }
}

/// Exact flow of one power-law piece of `F`.
pub fn subflow(p: &ModelParams, kind: SubflowKind, y: f64, tau: f64) -> Result<f64, SchemeError> {
    let y = check_positive(y)?;
    subflow::exact_flow(p, kind, y, tau).map_err(|base| SchemeError::FlowDomainExit { kind, base })
}

/// Composition `Q(P(V(U(y))))` of the exact sub-flows over one step.
pub fn splitting_drift_flow(p: &ModelParams, y: f64, tau: f64) -> Result<f64, SchemeError> {
    SubflowKind::ALL
        .into_iter()
        .try_fold(y, |z, kind| subflow(p, kind, z, tau))
}

/// Exact-subflow splitting step.
pub fn step_splitting(p: &ModelParams, y: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    let q_out = splitting_drift_flow(p, y, tau)?;
    let decay = (-p.lambda() * tau).exp();
    let proposal = decay * q_out + p.noise_coeff() * decay * dw;
    if proposal > 0.0 {
        Ok(StepOutcome::explicit(proposal))
    } else {
        Ok(StepOutcome::backstop(bem_y_root(p, y, dw, tau)?))
    }
}

/// Backward Euler on the Lamperti equation.
pub fn step_bem_y(p: &ModelParams, y: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    Ok(StepOutcome::implicit(bem_y_root(p, y, dw, tau)?))
}

/// Tamed Euler on the Lamperti equation (full drift, `1 + tau |f|` taming).
pub fn step_tem_y(p: &ModelParams, y: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    let f = p.drift_y(y)?;
    let proposal = y + tau * f / (1.0 + tau * f.abs()) + p.noise_coeff() * dw;
    if proposal > 0.0 {
        Ok(StepOutcome::explicit(proposal))
    } else {
        Ok(StepOutcome::backstop(bem_y_root(p, y, dw, tau)?))
    }
}

/// Drift-implicit Euler on the original equation.
pub fn step_refbem_x(p: &ModelParams, x: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    Ok(StepOutcome::implicit(refbem_x_root(p, x, dw, tau)?))
}

/// Tamed Milstein on the original equation.
pub fn step_tamed_milstein_x(p: &ModelParams, x: f64, dw: f64, tau: f64) -> Result<StepOutcome, SchemeError> {
    let mu = p.drift_x(x)?;
    let sigma = p.diffusion_x(x)?;
    let sigma_prime = p.diffusion_x_prime(x)?;
    let proposal = x
        + tau * mu / (1.0 + tau * mu.abs())
        + sigma * dw
        + 0.5 * sigma * sigma_prime * (dw * dw - tau);
    if proposal > 0.0 {
        Ok(StepOutcome::explicit(proposal))
    } else {
        Ok(StepOutcome::backstop(refbem_x_root(p, x, dw, tau)?))
    }
}

/// Per-path counters gathered while folding a stepper over increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDiagnostics {
    pub steps: usize,
    pub backstop_count: usize,
    pub negative_proposal_count: usize,
    pub solver_iterations: usize,
    /// Extremes over the whole trajectory, initial state included, in the
    /// scheme's coordinate.
    pub min_state: f64,
    pub max_state: f64,
}

impl PathDiagnostics {
    fn start(initial: f64) -> Self {
        PathDiagnostics {
            steps: 0,
            backstop_count: 0,
            negative_proposal_count: 0,
            solver_iterations: 0,
            min_state: initial,
            max_state: initial,
        }
    }

    fn record(&mut self, outcome: &StepOutcome) {
        self.steps += 1;
        self.backstop_count += usize::from(outcome.backstop_used);
        self.negative_proposal_count += usize::from(outcome.explicit_proposal_negative);
        self.solver_iterations += outcome.solver_iterations;
        self.min_state = self.min_state.min(outcome.value);
        self.max_state = self.max_state.max(outcome.value);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResult {
    /// Terminal state in the scheme's coordinate.
    pub terminal: f64,
    pub diagnostics: PathDiagnostics,
}

/// Folds `scheme` over `increments` starting from `initial` (scheme coordinate).
pub fn simulate_path(
    scheme: SchemeId,
    p: &ModelParams,
    initial: f64,
    increments: &[f64],
    tau: f64,
) -> Result<PathResult, SchemeError> {
    simulate_path_with(scheme, p, initial, increments, tau, |_, _| {})
}

/// As [`simulate_path`], calling `observe(n, state)` after each step `n`
/// (1-based).
pub fn simulate_path_with<O>(
    scheme: SchemeId,
    p: &ModelParams,
    initial: f64,
    increments: &[f64],
    tau: f64,
    mut observe: O,
) -> Result<PathResult, SchemeError>
where
    O: FnMut(usize, f64),
{
    let mut state = check_positive(initial)?;
    let mut diagnostics = PathDiagnostics::start(state);
    for (n, &dw) in increments.iter().enumerate() {
        let outcome = scheme.step(p, state, dw, tau)?;
        diagnostics.record(&outcome);
        state = outcome.value;
        observe(n + 1, state);
    }
    Ok(PathResult {
        terminal: state,
        diagnostics,
    })
}

/// Runs `scheme` from `x0` given in `X`, returning the terminal value in `X`.
///
/// `Y` schemes transform `x0`, evolve `Y` and transform back at the end.
pub fn simulate_path_x(
    scheme: SchemeId,
    p: &ModelParams,
    x0: f64,
    increments: &[f64],
    tau: f64,
) -> Result<PathResult, SchemeError> {
    let initial = scheme.from_x(p, x0)?;
    let mut result = simulate_path(scheme, p, initial, increments, tau)?;
    result.terminal = scheme.to_x(p, result.terminal)?;
    Ok(result)
}
