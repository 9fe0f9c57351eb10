//! Statistical strength of a fixed experiment and its asymptotic p-value.

use super::em::{em_project, em_project_from, EmConfig, LrModel, Projection};
use super::strategy::StrategySet;
use crate::error::Result;
use crate::photonic::{
    experiment_distribution, DetectionModel, ExperimentDistribution, FockState, Settings,
    UNIFORM_SETTINGS,
};

/// Strengths below this are reported as zero.
pub const DEFAULT_TRUNCATION: f64 = 1e-9;
/// Stricter truncation for runs where EM is driven harder.
pub const FINE_TRUNCATION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthConfig {
    pub em: EmConfig,
    pub truncation: f64,
}

impl Default for StrengthConfig {
    fn default() -> Self {
        Self {
            em: EmConfig::default(),
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

/// Strength of one experiment against its closest local-realistic model.
#[derive(Debug, Clone)]
pub struct StrengthResult {
    /// S in bits after truncation.
    pub strength: f64,
    /// Divergence returned by EM before truncation.
    pub raw: f64,
    pub settings: Settings,
    pub lr_model: LrModel,
    pub iterations: usize,
    pub converged: bool,
    pub truncated_to_zero: bool,
    /// Duality-gap bound on `raw` minus the true minimum.
    pub gap: f64,
}

impl StrengthResult {
    pub(crate) fn from_projection(
        projection: Projection,
        settings: Settings,
        truncation: f64,
    ) -> Self {
        let raw = projection.divergence;
        let truncated = raw < truncation;
        Self {
            strength: if truncated { 0.0 } else { raw },
            raw,
            settings,
            lr_model: projection.model,
            iterations: projection.iterations,
            converged: projection.converged,
            truncated_to_zero: truncated,
            gap: projection.gap,
        }
    }
}

/// Experiment table under uniformly random setting choices.
pub fn uniform_experiment(
    state: &FockState,
    settings: &Settings,
    model: DetectionModel,
) -> Result<ExperimentDistribution> {
    experiment_distribution(state, settings, model, UNIFORM_SETTINGS)
}

/// Minimum KL divergence (bits) from the experiment to the local-realistic
/// polytope, with uniform setting choices and cold-started EM.
pub fn strength_given_settings(
    state: &FockState,
    settings: &Settings,
    model: DetectionModel,
    config: &StrengthConfig,
) -> Result<StrengthResult> {
    let q = uniform_experiment(state, settings, model)?;
    let strategies = StrategySet::for_distribution(&q);
    let projection = em_project(&q, &strategies, &config.em)?;
    Ok(StrengthResult::from_projection(
        projection,
        *settings,
        config.truncation,
    ))
}

/// Reusable strength evaluation for one state and detector kind.
///
/// Keeps the strategy set and, when `warm` is on, starts each projection
/// from the previous weights blended with a small uniform share so that no
/// strategy starts at zero.
#[derive(Debug, Clone)]
pub struct StrengthEvaluator {
    state: FockState,
    kind: crate::photonic::DetectorKind,
    config: StrengthConfig,
    strategies: Option<StrategySet>,
    previous: Option<Vec<f64>>,
    warm: bool,
    evaluations: usize,
}

/// Share of the uniform distribution mixed into warm-start weights.
const WARM_UNIFORM_SHARE: f64 = 1e-3;

impl StrengthEvaluator {
    pub fn new(
        state: FockState,
        kind: crate::photonic::DetectorKind,
        config: StrengthConfig,
        warm: bool,
    ) -> Self {
        Self {
            state,
            kind,
            config,
            strategies: None,
            previous: None,
            warm,
            evaluations: 0,
        }
    }

    pub fn state(&self) -> &FockState {
        &self.state
    }

    pub fn kind(&self) -> crate::photonic::DetectorKind {
        self.kind
    }

    pub fn config(&self) -> &StrengthConfig {
        &self.config
    }

    /// Number of projections run so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn evaluate(&mut self, settings: &Settings, eta: f64) -> Result<StrengthResult> {
        let model = DetectionModel::new(self.kind, eta)?;
        let q = uniform_experiment(&self.state, settings, model)?;
        let strategies = self
            .strategies
            .get_or_insert_with(|| StrategySet::for_distribution(&q));
        self.evaluations += 1;
        let projection = match (&self.previous, self.warm) {
            (Some(prev), true) => {
                let n = prev.len() as f64;
                let init = prev
                    .iter()
                    .map(|w| (1.0 - WARM_UNIFORM_SHARE) * w + WARM_UNIFORM_SHARE / n)
                    .collect();
                em_project_from(&q, strategies, init, &self.config.em)?
            }
            _ => em_project(&q, strategies, &self.config.em)?,
        };
        if self.warm {
            self.previous = Some(projection.model.weights.clone());
        }
        Ok(StrengthResult::from_projection(
            projection,
            *settings,
            self.config.truncation,
        ))
    }
}

/// Leading-order p-value 2^(−N·S) after N trials at strength S (bits); the
/// data-dependent o(N) correction is dropped, so this is asymptotic only.
pub fn pvalue_bound(strength: f64, trials: u64) -> f64 {
    if strength <= 0.0 || trials == 0 {
        return 1.0;
    }
    (-(trials as f64) * strength).exp2()
}
