//! Safeguarded Newton iteration for the scalar implicit equations of the
//! drift-implicit steppers.

use thiserror::Error;

/// Residual tolerance of every implicit step.
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 200;
/// Geometric widenings tried on each side before giving up on a bracket.
pub const MAX_WIDENINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("residual has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("no root within tolerance after {iterations} iterations (best {best}, residual {residual:e})")]
    MaxIterations {
        iterations: usize,
        best: f64,
        residual: f64,
    },
}

/// A scalar root-finding problem on a sign-changing bracket.
///
/// `residual` returns the value and derivative at a trial point.
pub struct ImplicitProblem<R> {
    pub residual: R,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    /// Starting point for Newton; clamped into the bracket.
    pub initial: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub root: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton with bisection fallback. The bracket is shrunk at every
/// evaluation; a Newton iterate is used only when it lands strictly inside
/// the current bracket and halves the step compared to two steps back.
pub fn solve_implicit<R>(problem: ImplicitProblem<R>) -> Result<Root, SolveError>
where
    R: Fn(f64) -> (f64, f64),
{
    let ImplicitProblem {
        residual,
        bracket: (a, b),
        tolerance,
        initial,
    } = problem;
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let (r_lo, _) = residual(lo);
    let (r_hi, _) = residual(hi);
    if r_lo.abs() <= tolerance {
        return Ok(Root { root: lo, iterations: 0, residual: r_lo });
    }
    if r_hi.abs() <= tolerance {
        return Ok(Root { root: hi, iterations: 0, residual: r_hi });
    }
    if r_lo.is_nan() || r_hi.is_nan() {
        return Err(SolveError::NoSignChange { lo, hi });
    }
    if r_lo.signum() == r_hi.signum() {
        return Err(SolveError::NoSignChange { lo, hi });
    }
    let lo_negative = r_lo < 0.0;

    let mut z = initial
        .filter(|z| *z > lo && *z < hi)
        .unwrap_or(0.5 * (lo + hi));
    let mut step_old = hi - lo;
    let mut step = step_old;
    let mut best = (z, f64::INFINITY);

    for iteration in 1..=MAX_ITERATIONS {
        let (r, dr) = residual(z);
        if r.is_nan() {
            // outside the residual's domain; fall back to the bracket midpoint
            z = 0.5 * (lo + hi);
            continue;
        }
        if r.abs() < best.1.abs() {
            best = (z, r);
        }
        if r.abs() <= tolerance {
            return Ok(polish(&residual, Root { root: z, iterations: iteration, residual: r }, dr));
        }
        if (r < 0.0) == lo_negative {
            lo = z;
        } else {
            hi = z;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs() {
            break;
        }

        let newton = z - r / dr;
        let use_newton = dr.is_finite()
            && dr != 0.0
            && newton > lo
            && newton < hi
            && (2.0 * r).abs() <= (step_old * dr).abs();
        step_old = step;
        if use_newton {
            step = (newton - z).abs();
            z = newton;
        } else {
            // bisect in log space when the bracket spans decades
            let mid = if lo > 0.0 && hi / lo > 16.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            step = 0.5 * (hi - lo);
            z = mid;
        }
    }
    Err(SolveError::MaxIterations {
        iterations: MAX_ITERATIONS,
        best: best.0,
        residual: best.1,
    })
}

/// One extra Newton step once within tolerance, kept only if it does not
/// increase the residual. Quadratic convergence makes this close to exact.
fn polish<R>(residual: &R, root: Root, dr: f64) -> Root
where
    R: Fn(f64) -> (f64, f64),
{
    if !(dr.is_finite() && dr != 0.0) || root.residual == 0.0 {
        return root;
    }
    let z = root.root - root.residual / dr;
    let (r, _) = residual(z);
    if r.abs() <= root.residual.abs() {
        Root {
            root: z,
            iterations: root.iterations + 1,
            residual: r,
        }
    } else {
        root
    }
}

/// Widens `(lo, hi)` geometrically until an increasing residual is negative
/// at `lo` and positive at `hi`.
pub fn find_bracket<R>(residual: &R, lo: f64, hi: f64) -> Result<(f64, f64), SolveError>
where
    R: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    let mut widenings = 0;
    while !(residual(lo).0 < 0.0) {
        if widenings == MAX_WIDENINGS {
            return Err(SolveError::NoSignChange { lo, hi });
        }
        lo *= 0.5;
        widenings += 1;
    }
    widenings = 0;
    while !(residual(hi).0 > 0.0) {
        if widenings == MAX_WIDENINGS {
            return Err(SolveError::NoSignChange { lo, hi });
        }
        hi *= 2.0;
        widenings += 1;
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let root = solve_implicit(ImplicitProblem {
            residual: |z: f64| (z - 2.0, 1.0),
            bracket: (1.0, 3.0),
            tolerance: RESIDUAL_TOL,
            initial: None,
        })
        .unwrap();
        assert_eq!(root.root, 2.0);
        assert!(root.residual.abs() <= RESIDUAL_TOL);
    }

    #[test]
    fn decreasing_residual_is_fine() {
        let root = solve_implicit(ImplicitProblem {
            residual: |z: f64| (4.0 - z * z, -2.0 * z),
            bracket: (0.5, 10.0),
            tolerance: RESIDUAL_TOL,
            initial: Some(9.0),
        })
        .unwrap();
        assert!((root.root - 2.0).abs() < 1e-12);
    }

    #[test]
    fn root_near_lower_edge() {
        let target: f64 = 1e-8;
        let root = solve_implicit(ImplicitProblem {
            residual: |z: f64| (z.ln() - target.ln(), 1.0 / z),
            bracket: (1e-9, 10.0),
            tolerance: RESIDUAL_TOL,
            initial: None,
        })
        .unwrap();
        assert!(root.residual.abs() <= RESIDUAL_TOL);
        assert!((root.root - target).abs() / target < 1e-11);
    }

    #[test]
    fn no_sign_change() {
        let err = solve_implicit(ImplicitProblem {
            residual: |z: f64| (z * z + 1.0, 2.0 * z),
            bracket: (-1.0, 1.0),
            tolerance: RESIDUAL_TOL,
            initial: None,
        })
        .unwrap_err();
        assert!(matches!(err, SolveError::NoSignChange { .. }));
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        // derivative deliberately wrong by a large factor
        let root = solve_implicit(ImplicitProblem {
            residual: |z: f64| (z * z * z - 3.0, 1e-6),
            bracket: (0.0, 5.0),
            tolerance: RESIDUAL_TOL,
            initial: None,
        })
        .unwrap();
        assert!((root.root - 3f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn unreachable_tolerance_reports_max_iterations() {
        let err = solve_implicit(ImplicitProblem {
            residual: |z: f64| (1e20 * (z * z - 2.0), 2e20 * z),
            bracket: (0.0, 3.0),
            tolerance: 1e-30,
            initial: None,
        })
        .unwrap_err();
        assert!(matches!(err, SolveError::MaxIterations { .. }));
    }

    #[test]
    fn bracket_widening() {
        let r = |z: f64| (z - 1e6, 1.0);
        let (lo, hi) = find_bracket(&r, 1.0, 2.0).unwrap();
        assert!(lo < 1e6 && hi > 1e6);
        let never = |_z: f64| (1.0, 0.0);
        assert!(find_bracket(&never, 1.0, 2.0).is_err());
    }
}
