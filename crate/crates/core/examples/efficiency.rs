//! Error against single-threaded wall time, then writes a log-log plot.
//!
//!     cargo run --release --example efficiency [out.svg]

use aitsde::cli::emit_loglog_svg;
use aitsde::harness::{ErrorRow, ExperimentConfig, Runner};
use aitsde::model::ModelParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "efficiency.svg".into());
    let cfg = ExperimentConfig {
        n_paths: 200,
        ..ExperimentConfig::standard(ModelParams::non_critical())
    };
    let report = Runner::from_env().run_efficiency(&cfg)?;
    for row in &report.rows {
        println!("{:>16} tau={:.3e} time={:.4}s error={:.4e}", row.scheme.name(), row.tau, row.wall_time_s, row.rms_error_x);
    }

    // plot error against cost
    let cost: Vec<ErrorRow> = report.rows.iter().map(|r| ErrorRow { tau: r.wall_time_s, ..*r }).collect();
    emit_loglog_svg(&cost, out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
