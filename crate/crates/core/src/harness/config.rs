use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::ModelParams;
use crate::noise::{step_count, GridSpec};
use crate::schemes::SchemeId;

use super::HarnessError;

/// Fine reference used to measure strong errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub scheme: SchemeId,
    pub tau: f64,
}

/// One Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    /// Initial short rate, in `X` coordinates.
    pub x0: f64,
    pub horizon: f64,
    pub taus: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub schemes: Vec<SchemeId>,
    pub reference: ReferenceSpec,
    pub output_dir: PathBuf,
}

/// Order-one schemes plus the drift-implicit scheme on the original equation.
pub const COMPARED_SCHEMES: [SchemeId; 5] = [
    SchemeId::Tsm,
    SchemeId::Splitting,
    SchemeId::BemY,
    SchemeId::TemY,
    SchemeId::RefBemX,
];

impl ExperimentConfig {
    /// Step sizes `2^-7 .. 2^-11` on `[0, 1]` from `X_0 = 1`, 500 paths,
    /// tamed Milstein reference at `2^-15`.
    pub fn standard(model: ModelParams) -> Self {
        ExperimentConfig {
            model,
            x0: 1.0,
            horizon: 1.0,
            taus: (7..=11).map(|k| 2f64.powi(-k)).collect(),
            n_paths: 500,
            master_seed: 1,
            schemes: COMPARED_SCHEMES.to_vec(),
            reference: ReferenceSpec {
                scheme: SchemeId::TamedMilsteinX,
                tau: 2f64.powi(-15),
            },
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::ConfigInvalid(msg));
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return bad(format!("x0 must be positive, got {}", self.x0));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.taus.is_empty() {
            return bad("taus is empty".into());
        }
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes is empty".into());
        }
        self.reference_grid()?;
        for &tau in &self.taus {
            match step_count(self.horizon, tau) {
                Some(n) if n.is_power_of_two() => {}
                _ => return bad(format!("horizon / tau = {} / {tau} is not a power of two", self.horizon)),
            }
            match step_count(tau, self.reference.tau) {
                Some(_) => {}
                None => {
                    return bad(format!(
                        "tau {tau} is not a multiple of the reference step {}",
                        self.reference.tau
                    ))
                }
            }
        }
        Ok(())
    }

    /// Fine grid at the reference step.
    pub fn reference_grid(&self) -> Result<GridSpec, HarnessError> {
        GridSpec::from_step(self.horizon, self.reference.tau)
            .map_err(|e| HarnessError::ConfigInvalid(format!("reference step: {e}")))
    }

    /// Grid at the smallest of `taus`.
    pub fn finest_grid(&self) -> Result<GridSpec, HarnessError> {
        let tau = self.taus.iter().copied().fold(f64::INFINITY, f64::min);
        GridSpec::from_step(self.horizon, tau).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    /// Hash of everything that affects results (the output directory is
    /// excluded), as 16 hex digits.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_config_is_valid() {
        let cfg = ExperimentConfig::standard(ModelParams::non_critical());
        cfg.validate().unwrap();
        assert_eq!(cfg.reference_grid().unwrap().n_fine(), 1 << 15);
        assert_eq!(cfg.finest_grid().unwrap().n_fine(), 1 << 11);
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::standard(ModelParams::critical());
        let mut c = base.clone();
        c.x0 = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.taus.push(0.3);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.taus.push(2f64.powi(-16));
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.reference.tau = 1.0 / 3.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.n_paths = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::standard(ModelParams::non_critical());
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.master_seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
