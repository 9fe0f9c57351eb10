//! Photonic states, polarization analysis, detector models and the
//! resulting outcome tables.

mod chsh;
mod distribution;
mod measurement;
mod state;

pub use chsh::{chsh_value, correlators, max_chsh, SignMap};
pub use distribution::{
    apply_loss, collapse_to_clicks, experiment_distribution, ideal_outcome_distribution,
    ExperimentDistribution, Settings, JOINT_COUNTS, UNIFORM_SETTINGS,
};
pub(crate) use measurement::wrap_signed;
pub use measurement::{
    click_index_of_counts, count_index, DetectionModel, DetectorKind, MeasurementSetting,
    OutcomeSpace, CLICK_LABELS, COUNT_LABELS,
};
pub use state::{
    build_pseudo_bell, build_unbalanced_bell, FockState, Occupation, StateFamily, MAX_PHOTONS,
};
