//! Boundary curves over a grid of state parameters.

use super::boundary::{find_eta_for_strength_from, EtaSearch};
use super::optimize::SearchConfig;
use crate::error::{check_range, Result};
use crate::photonic::{DetectorKind, Settings, StateFamily};

/// One grid point of a traced curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// θ or γ in degrees.
    pub parameter: f64,
    /// Requested strength level; 0 means the S > 0 boundary.
    pub target: f64,
    pub outcome: EtaSearch,
}

/// A traced curve with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub family: StateFamily,
    pub kind: DetectorKind,
    pub rows: Vec<TraceRow>,
}

/// Runs a boundary search at every grid value of the family's parameter,
/// in grid order, starting each point from the previous point's settings.
///
/// `target = 0` traces η_min, any positive target traces η_c. Points that
/// cannot reach the target at η = 1 are kept as infeasible rows.
pub fn trace_curve(
    family: StateFamily,
    kind: DetectorKind,
    grid: &[f64],
    target: f64,
    config: &SearchConfig,
) -> Result<Trace> {
    check_range("target_s", target, target >= 0.0, "[0, inf) bits")?;
    config.validate()?;
    let level = if target == 0.0 {
        config.strength.truncation
    } else {
        target
    };
    let mut rows = Vec::with_capacity(grid.len());
    let mut previous: Option<Settings> = None;
    for &parameter in grid {
        let state = family.with_parameter(parameter).build()?;
        let outcome = find_eta_for_strength_from(&state, kind, level, config, previous.as_ref())?;
        previous = Some(*outcome.settings());
        rows.push(TraceRow {
            parameter,
            target,
            outcome,
        });
    }
    Ok(Trace { family, kind, rows })
}
