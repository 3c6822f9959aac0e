//! Tracks `E|Y|^q` and `E|Y|^-q` along TSM paths and writes moments.csv to
//! stdout. Orders outside the bounded range are flagged.
//!
//!     cargo run --release --example moment_tracking [q ...]

use aitsde::harness::{write_moments_csv, CsvMeta, ExperimentConfig, Runner};
use aitsde::model::ModelParams;
use aitsde::schemes::SchemeId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut orders: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    if orders.is_empty() {
        orders = vec![2.0, 4.0, 12.0];
    }
    let cfg = ExperimentConfig {
        schemes: vec![SchemeId::Tsm],
        taus: vec![2f64.powi(-7)],
        n_paths: 500,
        ..ExperimentConfig::standard(ModelParams::critical())
    };
    let report = Runner::from_env().run_moment_tracking(&cfg, &orders)?;
    for (order, msg) in report.warnings() {
        eprintln!("order {order}: {msg}");
    }
    write_moments_csv(std::io::stdout().lock(), &CsvMeta::from_config(&cfg), &report)?;
    Ok(())
}
