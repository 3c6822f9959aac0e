//! Largest step size that keeps a TSM path positive with probability at
//! least `1 - epsilon`, given state bounds `[m1, m2]`.
//!
//!     cargo run --example tau_epsilon [m1] [m2]

use aitsde::analysis::{survival_lower_bound, tau_for_confidence, PositivityBoundInputs};
use aitsde::model::ModelParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let m1: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.2);
    let m2: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5.0);
    for params in [ModelParams::non_critical(), ModelParams::critical()] {
        println!("{:?}, Y in [{m1}, {m2}]", params.regime());
        for eps in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let inputs = PositivityBoundInputs::new(params, m1, m2, eps, 1.0)?;
            let tau = tau_for_confidence(&inputs)?;
            let n = (1.0 / tau).ceil() as u64;
            let survival = survival_lower_bound(&inputs, 1.0 / n as f64, n);
            println!("  eps={eps:<6} tau={tau:.4e}  survival bound at T/{n}: {survival:.4}");
        }
    }
    Ok(())
}
