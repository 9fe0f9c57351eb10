//! Maximizing statistical strength over analyzer settings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::canonical::{align_joint_rotation, canonicalize};
use super::nelder_mead::{minimize, SimplexOptions};
use crate::error::{Error, Result};
use crate::lr::{EmConfig, StrengthConfig, StrengthEvaluator, StrengthResult, DEFAULT_TRUNCATION};
use crate::photonic::{DetectionModel, DetectorKind, FockState, MeasurementSetting, Settings};

/// Initial simplex edge (degrees) for searches from random points.
const COLD_STEP: f64 = 20.0;
/// Initial simplex edge (degrees) when refining known settings.
const WARM_STEP: f64 = 3.0;
/// Initial simplex edge (degrees) while following an optimum down in η.
/// Smaller than the narrowest basins seen near the boundary.
const CONTINUATION_STEP: f64 = 0.5;

/// Knobs for the settings search and the efficiency continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Random starting points for each cold optimization.
    pub restarts: usize,
    /// Keep every setting in the (x, z) plane of the Bloch sphere.
    pub planar_only: bool,
    /// Angle resolution (degrees) at which a local search stops.
    pub angle_tol: f64,
    /// Strength resolution (bits) for comparing optima.
    pub strength_tol: f64,
    /// Efficiency grid spacing for boundary searches.
    pub eta_resolution: f64,
    pub seed: u64,
    /// Cap on strength evaluations per local search.
    pub max_evals: usize,
    /// EM stopping rule and zero truncation used inside searches.
    pub strength: StrengthConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 6,
            planar_only: true,
            angle_tol: 1e-3,
            strength_tol: 1e-6,
            eta_resolution: 1e-4,
            seed: 1,
            max_evals: 1500,
            strength: StrengthConfig {
                em: EmConfig {
                    tol: 1e-14,
                    newton: false,
                    ..EmConfig::default()
                },
                truncation: DEFAULT_TRUNCATION,
            },
        }
    }
}

impl SearchConfig {
    /// Strength settings for final evaluations: the search's EM rule with the
    /// corrective finish switched on.
    pub fn finishing(&self) -> StrengthConfig {
        let mut strength = self.strength;
        strength.em.newton = true;
        strength
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| {
            Err(Error::Config {
                key: key.to_string(),
                message: message.to_string(),
            })
        };
        if self.restarts < 1 {
            return bad("restarts", "must be at least 1");
        }
        if !(self.angle_tol > 0.0) {
            return bad("angle_tol", "must be positive");
        }
        if !(self.strength_tol > 0.0) {
            return bad("strength_tol", "must be positive");
        }
        if !(self.eta_resolution > 0.0 && self.eta_resolution < 1.0) {
            return bad("eta_resolution", "must lie in (0, 1)");
        }
        if !(self.strength.truncation >= 0.0) {
            return bad("truncation", "must be nonnegative");
        }
        Ok(())
    }

    fn simplex(&self, step: f64) -> SimplexOptions {
        SimplexOptions {
            step,
            x_tol: self.angle_tol,
            f_tol: f64::INFINITY,
            max_evals: self.max_evals,
        }
    }
}

/// Outcome of one local search.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub index: usize,
    pub start: Settings,
    pub end: Settings,
    /// Raw strength at the end point (bits).
    pub strength: f64,
    pub evaluations: usize,
}

/// Best settings found plus the record of every restart.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    /// Strength at the canonical form of the best settings, recomputed with
    /// cold-started EM.
    pub best: StrengthResult,
    pub restarts: Vec<RestartRecord>,
}

fn to_params(settings: &Settings, planar: bool) -> Vec<f64> {
    if planar {
        settings.polars().to_vec()
    } else {
        settings
            .0
            .iter()
            .flat_map(|s| [s.polar(), s.azimuth()])
            .collect()
    }
}

fn from_params(x: &[f64], planar: bool) -> Settings {
    if planar {
        Settings::planar([x[0], x[1], x[2], x[3]])
    } else {
        Settings([0, 1, 2, 3].map(|i| MeasurementSetting::wrapped(x[2 * i], x[2 * i + 1])))
    }
}

/// Starting settings for cold restarts: polar angles uniform in [−90, 90],
/// azimuths uniform in [0, 360) when off-plane settings are allowed.
pub fn restart_points(config: &SearchConfig) -> Vec<Settings> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.restarts)
        .map(|_| {
            Settings([(); 4].map(|_| {
                let polar = rng.gen_range(-90.0..=90.0);
                let azimuth = if config.planar_only {
                    0.0
                } else {
                    rng.gen_range(0.0..360.0)
                };
                MeasurementSetting::wrapped(polar, azimuth)
            }))
        })
        .collect()
}

/// Local simplex ascent of the raw strength from `start` at efficiency
/// `eta`, reusing the evaluator's warm EM weights.
pub(crate) fn local_search(
    evaluator: &mut StrengthEvaluator,
    eta: f64,
    start: &Settings,
    step: f64,
    config: &SearchConfig,
) -> Result<(Settings, f64, usize)> {
    let planar = config.planar_only;
    let mut failure = None;
    let result = minimize(
        |x| match evaluator.evaluate(&from_params(x, planar), eta) {
            Ok(r) => -r.raw,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        &to_params(start, planar),
        &config.simplex(step),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((
        from_params(&result.x, planar),
        -result.value,
        result.evaluations,
    ))
}

const SCAN_INNER: [f64; 4] = [0.0, 1.0, 5.0, 15.0];
const SCAN_OUTER: [f64; 11] = [1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 24.0, 32.0, 45.0, 60.0, 75.0];
const SCAN_KEEP: usize = 2;

/// Coarse scan over the mirror-symmetric settings (x, −y, −x, y), best
/// first.
fn scan(
    state: &FockState,
    model: DetectionModel,
    config: &SearchConfig,
) -> Result<Vec<(f64, Settings)>> {
    let mut ev = StrengthEvaluator::new(state.clone(), model.kind, config.strength, true);
    let mut scored = Vec::with_capacity(SCAN_INNER.len() * SCAN_OUTER.len());
    for x in SCAN_INNER {
        for y in SCAN_OUTER {
            let settings = Settings::planar([x, -y, -x, y]);
            scored.push((ev.evaluate(&settings, model.efficiency())?.raw, settings));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(scored)
}

/// Best scan points that already show S above truncation. Catches small
/// S > 0 pockets that random starts tend to miss.
fn scan_seeds(
    state: &FockState,
    model: DetectionModel,
    config: &SearchConfig,
) -> Result<Vec<Settings>> {
    Ok(scan(state, model, config)?
        .into_iter()
        .filter(|(raw, _)| *raw > config.strength.truncation)
        .take(SCAN_KEEP)
        .map(|(_, s)| s)
        .collect())
}

const POLISH_STEPS: [f64; 3] = [0.25, 0.05, 0.01];
const POLISH_EM_TOL: f64 = 1e-16;

/// Final high-precision ascent at a boundary efficiency, where S is tiny
/// and flat: tighter EM, a quarter of the angle tolerance and restarted
/// simplices of shrinking size. Passes that lose strength are discarded.
pub(crate) fn polish(
    state: &FockState,
    kind: DetectorKind,
    eta: f64,
    start: &Settings,
    config: &SearchConfig,
) -> Result<(Settings, f64)> {
    let mut tight = *config;
    tight.strength.em.tol = config.strength.em.tol.min(POLISH_EM_TOL);
    tight.angle_tol = config.angle_tol / 4.0;
    tight.strength.em.newton = true;
    let mut ev = StrengthEvaluator::new(state.clone(), kind, tight.strength, true);
    let mut best = (*start, ev.evaluate(start, eta)?.raw);
    for step in POLISH_STEPS {
        let (end, value, _) = local_search(&mut ev, eta, &best.0, step, &tight)?;
        if value >= best.1 {
            best = (end, value);
        }
    }
    Ok(best)
}

/// Relative strength loss accepted when trading a point for its
/// mirror-symmetric counterpart.
const MIRROR_SLACK: f64 = 1e-6;

/// Polishes every candidate and keeps the strongest. When shifting all
/// polar angles by a common amount to reach A_1 = −B_1 keeps the strength
/// (and the target), the shifted point is returned instead.
pub(crate) fn polish_best(
    state: &FockState,
    kind: DetectorKind,
    eta: f64,
    target: f64,
    candidates: &[Settings],
    config: &SearchConfig,
) -> Result<Settings> {
    let mut best: Option<(Settings, f64)> = None;
    for start in candidates {
        let (end, value) = polish(state, kind, eta, start, config)?;
        if best.map_or(true, |(_, b)| value > b) {
            best = Some((end, value));
        }
    }
    let (settings, value) = best.expect("at least one candidate");
    if !settings.is_planar() {
        return Ok(settings);
    }
    let p = settings.polars();
    let shift = -(p[0] + p[2]) / 2.0;
    let mirrored = Settings::planar(p.map(|x| x + shift));
    let mut tight = config.finishing();
    tight.em.tol = tight.em.tol.min(POLISH_EM_TOL);
    let v = StrengthEvaluator::new(state.clone(), kind, tight, false)
        .evaluate(&mirrored, eta)?
        .raw;
    if v >= target && v >= value * (1.0 - MIRROR_SLACK) {
        Ok(mirrored)
    } else {
        Ok(settings)
    }
}

/// Refines `start` at `eta` with a small simplex.
pub(crate) fn refine(
    evaluator: &mut StrengthEvaluator,
    eta: f64,
    start: &Settings,
    config: &SearchConfig,
) -> Result<(Settings, f64)> {
    let (s, v, _) = local_search(evaluator, eta, start, CONTINUATION_STEP, config)?;
    Ok((s, v))
}

/// Cold multi-restart maximization of S over settings at a fixed
/// detection model, optionally seeded with extra starting points.
pub fn optimize_settings_from(
    state: &FockState,
    model: DetectionModel,
    config: &SearchConfig,
    extra: &[Settings],
) -> Result<OptimizeOutcome> {
    config.validate()?;
    let mut starts: Vec<(Settings, f64)> = restart_points(config)
        .into_iter()
        .map(|s| (s, COLD_STEP))
        .collect();
    starts.extend(extra.iter().map(|s| (*s, WARM_STEP)));
    starts.extend(
        scan_seeds(state, model, config)?
            .into_iter()
            .map(|s| (s, WARM_STEP)),
    );
    let eta = model.efficiency();
    let records: Vec<RestartRecord> = starts
        .par_iter()
        .enumerate()
        .map(|(index, &(start, step))| {
            let mut ev = StrengthEvaluator::new(state.clone(), model.kind, config.strength, true);
            let (end, strength, evaluations) = local_search(&mut ev, eta, &start, step, config)?;
            Ok(RestartRecord {
                index,
                start,
                end,
                strength,
                evaluations,
            })
        })
        .collect::<Result<_>>()?;
    // highest strength wins, ties go to the lowest restart index
    let best = records
        .iter()
        .fold(None::<&RestartRecord>, |acc, r| match acc {
            Some(b) if b.strength >= r.strength => Some(b),
            _ => Some(r),
        })
        .expect("at least one restart");
    let settings = canonicalize(&align_joint_rotation(state, &best.end));
    let best = cold_strength(state, model.kind, &settings, eta, config)?;
    Ok(OptimizeOutcome {
        best,
        restarts: records,
    })
}

/// Strength at fixed settings with cold-started EM under the search's EM
/// rule.
pub fn cold_strength(
    state: &FockState,
    kind: DetectorKind,
    settings: &Settings,
    eta: f64,
    config: &SearchConfig,
) -> Result<StrengthResult> {
    StrengthEvaluator::new(state.clone(), kind, config.finishing(), false).evaluate(settings, eta)
}

/// Multi-restart derivative-free maximization of the statistical strength
/// over the four analyzer settings.
pub fn optimize_settings(
    state: &FockState,
    model: DetectionModel,
    config: &SearchConfig,
) -> Result<OptimizeOutcome> {
    optimize_settings_from(state, model, config, &[])
}
