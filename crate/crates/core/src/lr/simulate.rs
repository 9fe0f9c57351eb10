//! Monte-Carlo check of the asymptotic p-value law.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::photonic::ExperimentDistribution;

/// Log-likelihood-ratio statistics of simulated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trials: u64,
    /// (1/N) Σ log₂(q/p) over the drawn records; +∞ once a record has p = 0.
    pub mean_llr: f64,
    /// Standard error of `mean_llr`.
    pub std_error: f64,
    /// Likelihood-ratio p-value bound 2^(−N·mean) against the model p,
    /// clamped to 1.
    pub pvalue: f64,
}

impl TrialSummary {
    /// −log₂(p-value)/N, the empirical rate at which evidence accumulates.
    pub fn exponent(&self) -> f64 {
        if self.mean_llr.is_infinite() {
            f64::INFINITY
        } else {
            self.mean_llr.max(0.0)
        }
    }
}

/// Draws `trials` independent (setting pair, outcome) records from q with a
/// seeded generator and averages log₂(q/p) over them.
pub fn simulate_trials(
    q: &ExperimentDistribution,
    prediction: &[f64],
    trials: u64,
    seed: u64,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::Contract("at least one trial is required".into()));
    }
    if prediction.len() != q.table().len() {
        return Err(Error::Shape(format!(
            "prediction has {} cells, experiment has {}",
            prediction.len(),
            q.table().len()
        )));
    }
    let cells: Vec<usize> = (0..q.table().len())
        .filter(|&c| q.table()[c] > 0.0)
        .collect();
    let weights: Vec<f64> = cells.iter().map(|&c| q.table()[c]).collect();
    let llr: Vec<f64> = cells
        .iter()
        .map(|&c| {
            let p = prediction[c];
            if p > 0.0 {
                (q.table()[c] / p).log2()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let sampler = WeightedIndex::new(&weights)
        .map_err(|e| Error::Contract(format!("cannot sample the experiment: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
    for n in 1..=trials {
        let x = llr[sampler.sample(&mut rng)];
        if x.is_infinite() {
            return Ok(TrialSummary {
                trials,
                mean_llr: f64::INFINITY,
                std_error: 0.0,
                pvalue: 0.0,
            });
        }
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    let variance = if trials > 1 {
        m2 / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(TrialSummary {
        trials,
        mean_llr: mean,
        std_error: (variance / trials as f64).sqrt(),
        pvalue: (-(trials as f64) * mean).exp2().min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(p: f64) -> ExperimentDistribution {
        ExperimentDistribution::from_table(1, 1, 1, 2, vec![1.0], vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn identical_model_has_zero_mean() {
        let q = coin(0.3);
        let s = simulate_trials(&q, &[0.3, 0.7], 10_000, 7).unwrap();
        assert_eq!(s.mean_llr, 0.0);
        assert_eq!(s.pvalue, 1.0);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let q = coin(0.5);
        let a = simulate_trials(&q, &[0.25, 0.75], 50_000, 11).unwrap();
        let b = simulate_trials(&q, &[0.25, 0.75], 50_000, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_trials(&q, &[0.25, 0.75], 50_000, 12).unwrap();
        assert_ne!(a.mean_llr, c.mean_llr);
    }

    #[test]
    fn mean_tracks_divergence() {
        let q = coin(0.5);
        let s = simulate_trials(&q, &[0.25, 0.75], 200_000, 3).unwrap();
        let d = 0.207_518_749_639_421_9;
        assert!((s.mean_llr - d).abs() < 4.0 * s.std_error, "{s:?}");
    }

    #[test]
    fn impossible_record_is_infinite() {
        let q = coin(0.5);
        let s = simulate_trials(&q, &[1.0, 0.0], 100, 1).unwrap();
        assert!(s.mean_llr.is_infinite());
        assert_eq!(s.pvalue, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let q = coin(0.5);
        assert!(simulate_trials(&q, &[0.5, 0.5], 0, 1).is_err());
        assert!(simulate_trials(&q, &[1.0], 10, 1).is_err());
    }
}
