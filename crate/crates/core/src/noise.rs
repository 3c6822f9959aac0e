//! Reproducible Brownian increments on a dyadic fine grid.
//!
//! Every path draws its increments from a ChaCha stream seeded by an
//! avalanche mix of `(master_seed, path_index)`, so a path's noise does not
//! depend on which worker produced it or in what order. Coarser step sizes
//! see the same Brownian path: their increments are left-to-right block sums
//! of the fine ones.

use std::io::{self, Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use libm::erfc;
use thiserror::Error;

pub const DUMP_MAGIC: [u8; 4] = *b"AITW";
pub const DUMP_VERSION: u32 = 1;
pub const DUMP_HEADER_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("coarsening factor {factor} does not divide {n} increments")]
    FactorNotDivisor { factor: usize, n: usize },
    #[error("bad increment dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Uniform mesh on `[0, horizon]` with a power-of-two number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    n_fine: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, n_fine: usize) -> Result<Self, NoiseError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(NoiseError::InvalidGrid(format!("horizon {horizon} must be positive")));
        }
        if n_fine == 0 || !n_fine.is_power_of_two() {
            return Err(NoiseError::InvalidGrid(format!("n_fine {n_fine} is not a power of two")));
        }
        Ok(GridSpec { horizon, n_fine })
    }

    /// Grid whose step is `tau`; `horizon / tau` must be a power of two.
    pub fn from_step(horizon: f64, tau: f64) -> Result<Self, NoiseError> {
        let n = step_count(horizon, tau)
            .ok_or_else(|| NoiseError::InvalidGrid(format!("{horizon}/{tau} is not an integer")))?;
        Self::new(horizon, n)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn tau_fine(&self) -> f64 {
        self.horizon / self.n_fine as f64
    }
}

/// `horizon / tau` when it is a positive integer (to 1e-9 relative).
pub fn step_count(horizon: f64, tau: f64) -> Option<usize> {
    if !(tau > 0.0 && horizon > 0.0) {
        return None;
    }
    let n = horizon / tau;
    let r = n.round();
    if r >= 1.0 && (n - r).abs() <= 1e-9 * r && r < usize::MAX as f64 {
        Some(r as usize)
    } else {
        None
    }
}

/// Fine-grid Brownian increments for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementTable {
    grid: GridSpec,
    master_seed: u64,
    path_index: u64,
    increments: Vec<f64>,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream belonging to `path_index`.
pub fn substream_seed(master_seed: u64, path_index: u64) -> u64 {
    mix64(master_seed ^ mix64(path_index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Generator of standard normal variates for one substream.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        NormalStream {
            rng: ChaCha8Rng::seed_from_u64(substream_seed(master_seed, path_index)),
        }
    }

    /// Uniform on the open interval (0, 1), 53 random bits.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_standard(&mut self) -> f64 {
        inverse_normal_cdf(self.next_open01())
    }
}

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error below 1.2e-9) polished by
/// one Halley step against `erfc`, which brings the error down to a few ulps.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement; work on the smaller tail to avoid cancellation.
    let e = if x <= 0.0 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * erfc(x / std::f64::consts::SQRT_2)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

impl IncrementTable {
    /// Draws `n_fine` increments with variance `tau_fine`.
    pub fn generate(master_seed: u64, path_index: u64, grid: GridSpec) -> Self {
        let mut stream = NormalStream::new(master_seed, path_index);
        let scale = grid.tau_fine().sqrt();
        let increments = (0..grid.n_fine())
            .map(|_| scale * stream.next_standard())
            .collect();
        IncrementTable {
            grid,
            master_seed,
            path_index,
            increments,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Block sums of `factor` consecutive fine increments.
    pub fn coarsen(&self, factor: usize) -> Result<Vec<f64>, NoiseError> {
        coarsen_slice(&self.increments, factor)
    }

    /// Increments for step `tau`; `tau` must be a multiple of the fine step.
    pub fn at_step(&self, tau: f64) -> Result<Vec<f64>, NoiseError> {
        let factor = step_count(tau, self.grid.tau_fine()).ok_or_else(|| {
            NoiseError::InvalidGrid(format!(
                "step {tau} is not a multiple of the fine step {}",
                self.grid.tau_fine()
            ))
        })?;
        self.coarsen(factor)
    }

    /// Writes the little-endian replay dump: 32-byte header then the increments.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<(), NoiseError> {
        w.write_all(&DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n_fine() as u64).to_le_bytes())?;
        w.write_all(&self.master_seed.to_le_bytes())?;
        w.write_all(&self.path_index.to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump; the horizon is not stored and must be supplied.
    pub fn read_dump<R: Read>(mut r: R, horizon: f64) -> Result<Self, NoiseError> {
        let mut header = [0u8; DUMP_HEADER_LEN];
        r.read_exact(&mut header)?;
        if header[0..4] != DUMP_MAGIC {
            return Err(NoiseError::BadDump("magic mismatch".into()));
        }
        let word = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != DUMP_VERSION {
            return Err(NoiseError::BadDump(format!("unsupported version {version}")));
        }
        let n_fine = word(8) as usize;
        let master_seed = word(16);
        let path_index = word(24);
        let grid = GridSpec::new(horizon, n_fine)?;
        let mut body = vec![0u8; n_fine * 8];
        r.read_exact(&mut body)?;
        let increments = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(IncrementTable {
            grid,
            master_seed,
            path_index,
            increments,
        })
    }
}

/// Left-to-right block sums of `factor` consecutive entries.
pub fn coarsen_slice(fine: &[f64], factor: usize) -> Result<Vec<f64>, NoiseError> {
    if factor == 0 || !fine.len().is_multiple_of(factor) {
        return Err(NoiseError::FactorNotDivisor {
            factor,
            n: fine.len(),
        });
    }
    Ok(fine
        .chunks_exact(factor)
        .map(|c| c.iter().fold(0.0, |acc, v| acc + v))
        .collect())
}
