//! Strong convergence of the compared schemes against a fine reference,
//! with the fitted order per scheme.
//!
//!     cargo run --release --example convergence_study [critical] [paths]

use aitsde::harness::{ExperimentConfig, Runner};
use aitsde::model::ModelParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let params = match args.next().as_deref() {
        Some("critical") => ModelParams::critical(),
        _ => ModelParams::non_critical(),
    };
    let mut cfg = ExperimentConfig::standard(params);
    if let Some(n) = args.next() {
        cfg.n_paths = n.parse()?;
    }

    let report = Runner::from_env().verbose(true).run_convergence(&cfg)?;
    println!("{:>16} {:>12} {:>12}", "scheme", "tau", "rms error");
    for row in &report.rows {
        println!("{:>16} {:>12.3e} {:>12.4e}", row.scheme.name(), row.tau, row.rms_error_x);
    }
    println!();
    for (scheme, fit) in &report.rates {
        println!("{:>16}  order {:.3}  r^2 {:.4}", scheme.name(), fit.slope, fit.r_squared);
    }
    if report.reference_failures > 0 {
        println!("{} reference paths excluded", report.reference_failures);
    }
    Ok(())
}
