//! Minimum detection efficiencies by continuation in η.
//!
//! Starting from a feasible (η, settings) pair the search alternates two
//! steps: re-optimize the settings at the current η, then lower η with the
//! settings held fixed for as long as the strength stays at or above the
//! target. It stops when neither step can move η down by one grid step.
//! Efficiencies live on the grid η = 1 − m·Δ.

use super::canonical::{align_joint_rotation, canonicalize};
use super::optimize::{
    cold_strength, optimize_settings_from, polish_best, refine, OptimizeOutcome, SearchConfig,
};
use crate::error::{check_range, Result};
use crate::lr::{StrengthEvaluator, StrengthResult};
use crate::photonic::{wrap_signed, DetectionModel, DetectorKind, FockState, Settings};

/// The two grid efficiencies that straddle the point where the optimized
/// strength crosses the target.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyBracket {
    pub target: f64,
    /// Lowest efficiency found with S ≥ target.
    pub eta_1: f64,
    /// One grid step below `eta_1`, where S < target.
    pub eta_2: f64,
    /// Strength at `eta_1` with `settings` (cold EM).
    pub s_1: f64,
    /// Best strength found at `eta_2`.
    pub s_2: f64,
    /// Canonical settings reaching `s_1` at `eta_1`.
    pub settings: Settings,
    /// Continuation rounds used.
    pub rounds: usize,
}

/// Result of a boundary search. Not reaching the target at η = 1 is an
/// ordinary outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum EtaSearch {
    Found(EfficiencyBracket),
    Infeasible {
        target: f64,
        /// Best strength found at η = 1.
        best_strength: f64,
        settings: Settings,
    },
}

impl EtaSearch {
    pub fn bracket(&self) -> Option<&EfficiencyBracket> {
        match self {
            EtaSearch::Found(b) => Some(b),
            EtaSearch::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, EtaSearch::Found(_))
    }

    /// Settings at the boundary, or the best settings at η = 1 when the
    /// target is out of reach.
    pub fn settings(&self) -> &Settings {
        match self {
            EtaSearch::Found(b) => &b.settings,
            EtaSearch::Infeasible { settings, .. } => settings,
        }
    }
}

const MAX_ROUNDS: usize = 400;

struct Grid {
    step: f64,
    last: usize,
}

impl Grid {
    fn new(resolution: f64) -> Self {
        Self {
            step: resolution,
            last: (1.0 / resolution + 1e-9).floor() as usize,
        }
    }

    fn eta(&self, m: usize) -> f64 {
        (1.0 - m as f64 * self.step).max(0.0)
    }
}

/// Smallest efficiency at which some settings give S above the truncation
/// threshold.
pub fn find_eta_min(
    state: &FockState,
    kind: DetectorKind,
    config: &SearchConfig,
) -> Result<EtaSearch> {
    find_eta_for_strength(state, kind, config.strength.truncation, config)
}

/// Smallest efficiency at which some settings give S ≥ `target` (bits).
pub fn find_eta_for_strength(
    state: &FockState,
    kind: DetectorKind,
    target: f64,
    config: &SearchConfig,
) -> Result<EtaSearch> {
    find_eta_for_strength_from(state, kind, target, config, None)
}

/// [`find_eta_for_strength`] with an extra starting point for the η = 1
/// optimization, typically the result at a neighbouring state.
pub fn find_eta_for_strength_from(
    state: &FockState,
    kind: DetectorKind,
    target: f64,
    config: &SearchConfig,
    warm: Option<&Settings>,
) -> Result<EtaSearch> {
    check_range("target_s", target, target > 0.0, "(0, inf) bits")?;
    config.validate()?;
    let grid = Grid::new(config.eta_resolution);
    let extra: Vec<Settings> = warm.into_iter().copied().collect();
    let top = optimize_settings_from(state, DetectionModel::new(kind, 1.0)?, config, &extra)?;
    if top.best.raw < target {
        return Ok(EtaSearch::Infeasible {
            target,
            best_strength: top.best.strength,
            settings: top.best.settings,
        });
    }
    let mut ev = StrengthEvaluator::new(state.clone(), kind, config.strength, true);
    let mut best: Option<Descent> = None;
    let mut candidates = Vec::new();
    let mut rounds = 0;
    let mut s_2 = 0.0_f64;
    for start in basins(state, &top, target) {
        let d = descend(&mut ev, &grid, &start, target, config)?;
        rounds += d.rounds;
        match &best {
            Some(b) if d.m < b.m => continue,
            Some(b) if d.m == b.m => {
                s_2 = s_2.max(d.s_2);
                candidates.push(d.settings);
            }
            _ => {
                s_2 = d.s_2;
                candidates = vec![d.settings];
                best = Some(d);
            }
        }
    }
    let m = best.expect("at least one basin").m;
    let settings = polish_best(state, kind, grid.eta(m), target, &candidates, config)?;
    let settings = canonicalize(&align_joint_rotation(state, &settings));
    let at_boundary = cold_strength(state, kind, &settings, grid.eta(m), config)?;
    Ok(EtaSearch::Found(EfficiencyBracket {
        target,
        eta_1: grid.eta(m),
        eta_2: grid.eta(m + 1),
        s_1: at_boundary.raw,
        s_2,
        settings,
        rounds,
    }))
}

/// Settings closer than this (degrees, any angle) count as one basin.
const BASIN_SEPARATION: f64 = 1.0;

/// Starting points of the continuation: the best η = 1 optimum and the
/// strongest restart that ended in a different basin, if it reaches the
/// target. Basins can trade places as η drops.
fn basins(state: &FockState, top: &OptimizeOutcome, target: f64) -> Vec<Settings> {
    let first = top.best.settings;
    let mut records: Vec<_> = top
        .restarts
        .iter()
        .filter(|r| r.strength >= target)
        .collect();
    records.sort_by(|a, b| {
        b.strength
            .total_cmp(&a.strength)
            .then(a.index.cmp(&b.index))
    });
    let second = records
        .into_iter()
        .map(|r| canonicalize(&align_joint_rotation(state, &r.end)))
        .find(|s| {
            s.polars()
                .iter()
                .zip(first.polars())
                .any(|(x, y)| wrap_signed(x - y, 180.0).abs() > BASIN_SEPARATION)
        });
    std::iter::once(first).chain(second).collect()
}

struct Descent {
    /// Grid index of the lowest feasible efficiency reached.
    m: usize,
    settings: Settings,
    s_2: f64,
    rounds: usize,
}

/// Continuation from feasible settings at η = 1 down to the last grid
/// efficiency that keeps S ≥ target.
fn descend(
    ev: &mut StrengthEvaluator,
    grid: &Grid,
    start: &Settings,
    target: f64,
    config: &SearchConfig,
) -> Result<Descent> {
    let feasible = |ev: &mut StrengthEvaluator, settings: &Settings, m: usize| -> Result<bool> {
        Ok(ev.evaluate(settings, grid.eta(m))?.raw >= target)
    };
    let mut m = 0;
    let mut settings = *start;
    let mut rounds = 0;
    loop {
        rounds += 1;
        // the start is already optimal at η = 1
        if m > 0 {
            let (refined, value) = refine(ev, grid.eta(m), &settings, config)?;
            if value >= target {
                settings = refined;
            }
        }
        // lower η at fixed settings: gallop, then bisect
        let mut lo = m;
        let mut hi = None;
        let mut stride = 1;
        while lo < grid.last {
            let probe = (lo + stride).min(grid.last);
            if feasible(ev, &settings, probe)? {
                lo = probe;
                stride *= 2;
            } else {
                hi = Some(probe);
                break;
            }
        }
        if let Some(mut hi) = hi {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if feasible(ev, &settings, mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        if lo > m {
            m = lo;
            if rounds < MAX_ROUNDS {
                continue;
            }
        }
        if m >= grid.last {
            return Ok(Descent {
                m,
                settings,
                s_2: 0.0,
                rounds,
            });
        }
        // one grid step lower with re-optimized settings
        let (below, below_value) = refine(ev, grid.eta(m + 1), &settings, config)?;
        if below_value >= target && rounds < MAX_ROUNDS {
            m += 1;
            settings = below;
            continue;
        }
        return Ok(Descent {
            m,
            settings,
            s_2: below_value.max(0.0),
            rounds,
        });
    }
}

/// Strength with cold EM at the bracket's upper efficiency and settings.
pub fn verify_upper(
    state: &FockState,
    kind: DetectorKind,
    bracket: &EfficiencyBracket,
    config: &SearchConfig,
) -> Result<StrengthResult> {
    cold_strength(state, kind, &bracket.settings, bracket.eta_1, config)
}
