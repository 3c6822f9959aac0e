//! Prints the derived constants of both built-in parameter sets.
//!
//!     cargo run --example check_params

use aitsde::model::ModelParams;

fn main() {
    for p in [ModelParams::non_critical(), ModelParams::critical()] {
        let (lo, hi) = p.negative_moment_range();
        println!("{:?}", p.regime());
        println!("  theta = {}, gamma = {}", p.theta(), p.gamma());
        println!("  lambda = {:.6}", p.lambda());
        println!("  noise coefficient b(theta-1) = {}", p.noise_coeff());
        println!("  E|Y|^-q bounded for q in [{lo}, {hi}]");
        println!("  E|Y|^q bounded for q >= {}", p.positive_moment_threshold());
        let y = p.lamperti(1.0).unwrap();
        println!("  X = 1 maps to Y = {y}, f(Y) = {:.6}", p.drift_y(y).unwrap());
    }
}
