//! Counts negative explicit proposals and backstop solves for TSM over many
//! paths, for both parameter sets.
//!
//!     cargo run --release --example positivity_census [paths]

use aitsde::harness::{ExperimentConfig, Runner};
use aitsde::model::ModelParams;
use aitsde::schemes::SchemeId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_paths = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let runner = Runner::from_env();
    for params in [ModelParams::non_critical(), ModelParams::critical()] {
        let cfg = ExperimentConfig {
            schemes: vec![SchemeId::Tsm, SchemeId::TemY],
            n_paths,
            ..ExperimentConfig::standard(params)
        };
        println!("{:?}", params.regime());
        for row in runner.run_positivity_census(&cfg)? {
            println!(
                "  {:>6} tau={:.3e} steps={:>9} negative={} backstops={}",
                row.scheme.name(),
                row.tau,
                row.total_steps,
                row.negative_proposals,
                row.backstop_invocations
            );
        }
    }
    Ok(())
}
