//! Time stepping, Monte-Carlo convergence studies and positivity analytics
//! for the generalized Ait-Sahalia short-rate model.

pub mod analysis;
pub mod cli;
pub mod harness;
pub mod model;
pub mod noise;
pub mod schemes;
