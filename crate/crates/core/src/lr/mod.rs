//! Local-realistic models and the statistical strength of an experiment.

mod em;
mod kl;
mod simulate;
mod strategy;
mod strength;

pub use em::{em_project, em_project_from, EmConfig, LrModel, Projection};
pub use kl::{kl_bits, kl_divergence};
pub use simulate::{simulate_trials, TrialSummary};
pub use strategy::StrategySet;
pub use strength::{
    pvalue_bound, strength_given_settings, uniform_experiment, StrengthConfig, StrengthEvaluator,
    StrengthResult, DEFAULT_TRUNCATION, FINE_TRUNCATION,
};
