//! Settings optimization and minimum-efficiency boundary searches.

mod boundary;
mod canonical;
mod nelder_mead;
mod optimize;
mod trace;

pub use boundary::{
    find_eta_for_strength, find_eta_for_strength_from, find_eta_min, verify_upper,
    EfficiencyBracket, EtaSearch,
};
pub use canonical::{align_joint_rotation, canonicalize};
pub use optimize::{
    cold_strength, optimize_settings, optimize_settings_from, restart_points, OptimizeOutcome,
    RestartRecord, SearchConfig,
};
pub use trace::{trace_curve, Trace, TraceRow};
