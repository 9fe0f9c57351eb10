//! Statistical strength of photon-pair tests of local realism.
//!
//! The strength of an experiment is the Kullback-Leibler divergence (in
//! bits) from its outcome statistics to the closest local-realistic model.
//! [`photonic`] produces the statistics, [`lr`] projects them onto the
//! local-realistic polytope, [`search`] optimizes analyzer settings and
//! traces minimum detector efficiencies, and [`report`] handles run
//! configuration and table output.

pub mod error;
pub mod lr;
pub mod photonic;
pub mod report;
pub mod search;

pub use error::{Error, Result};
