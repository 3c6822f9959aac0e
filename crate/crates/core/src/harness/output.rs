use std::io::Write;

use super::{CensusRow, ConvergenceReport, ExperimentConfig, HarnessError, MomentReport};

/// Provenance written as the first line of every CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvMeta {
    pub config_hash: String,
    pub seed: u64,
    pub horizon: String,
    pub version: String,
}

impl CsvMeta {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        CsvMeta {
            config_hash: cfg.config_hash(),
            seed: cfg.master_seed,
            horizon: cfg.horizon.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn write_line<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "# config_hash={} seed={} T={} version={}",
            self.config_hash, self.seed, self.horizon, self.version
        )
    }
}

fn table<W: Write>(mut w: W, meta: &CsvMeta, comments: &[String], header: &[&str]) -> Result<csv::Writer<W>, HarnessError> {
    meta.write_line(&mut w)?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_convergence_csv<W: Write>(w: W, meta: &CsvMeta, report: &ConvergenceReport) -> Result<(), HarnessError> {
    let header = [
        "scheme",
        "tau",
        "n_paths",
        "rms_error_x",
        "rms_error_y",
        "wall_time_s",
        "backstop_count",
        "negative_proposal_count",
    ];
    let mut out = table(w, meta, &[], &header)?;
    for r in &report.rows {
        out.write_record([
            r.scheme.to_string(),
            r.tau.to_string(),
            r.n_paths.to_string(),
            r.rms_error_x.to_string(),
            r.rms_error_y.to_string(),
            r.wall_time_s.to_string(),
            r.backstop_count.to_string(),
            r.negative_proposal_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rates_csv<W: Write>(w: W, meta: &CsvMeta, report: &ConvergenceReport) -> Result<(), HarnessError> {
    let mut out = table(w, meta, &[], &["scheme", "slope", "intercept", "r_squared"])?;
    for (scheme, fit) in &report.rates {
        out.write_record([
            scheme.to_string(),
            fit.slope.to_string(),
            fit.intercept.to_string(),
            fit.r_squared.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_positivity_csv<W: Write>(w: W, meta: &CsvMeta, rows: &[CensusRow]) -> Result<(), HarnessError> {
    let header = [
        "scheme",
        "tau",
        "n_paths",
        "total_steps",
        "negative_proposals",
        "backstop_invocations",
    ];
    let mut out = table(w, meta, &[], &header)?;
    for r in rows {
        out.write_record([
            r.scheme.to_string(),
            r.tau.to_string(),
            r.n_paths.to_string(),
            r.total_steps.to_string(),
            r.negative_proposals.to_string(),
            r.backstop_invocations.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Orders outside the range covered by the moment bounds are listed as
/// `# warning:` lines above the header.
pub fn write_moments_csv<W: Write>(w: W, meta: &CsvMeta, report: &MomentReport) -> Result<(), HarnessError> {
    let comments: Vec<String> = report
        .warnings()
        .into_iter()
        .map(|(order, msg)| format!("warning: order {order}: {msg}"))
        .collect();
    let mut out = table(w, meta, &comments, &["t", "order", "mean_abs_y_pow", "mean_abs_y_negpow"])?;
    for r in &report.rows {
        out.write_record([
            r.t.to_string(),
            r.order.to_string(),
            r.mean_abs_y_pow.to_string(),
            r.mean_abs_y_negpow.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
