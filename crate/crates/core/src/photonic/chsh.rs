//! CHSH diagnostics for two-setting experiment tables.

use super::distribution::ExperimentDistribution;
use super::measurement::OutcomeSpace;
use crate::error::{Error, Result};

/// ±1 value assigned to each of one party's outcome labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMap(pub Vec<i8>);

impl SignMap {
    /// +1 when only the reflected-port detector registers light, −1
    /// otherwise (including no detection).
    pub fn reflected_only(space: OutcomeSpace) -> Self {
        SignMap(
            space
                .labels()
                .iter()
                .map(|&(r, t)| if r > 0 && t == 0 { 1 } else { -1 })
                .collect(),
        )
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.0.len() != len {
            return Err(Error::Contract(format!(
                "sign map covers {} labels, the party has {len}",
                self.0.len()
            )));
        }
        if let Some(bad) = self.0.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Contract(format!("sign {bad} is not +1 or -1")));
        }
        Ok(())
    }
}

/// Correlators E(A_i, B_j) in row order (1,1), (1,2), (2,1), (2,2).
pub fn correlators(
    dist: &ExperimentDistribution,
    signs_a: &SignMap,
    signs_b: &SignMap,
) -> Result<[f64; 4]> {
    if dist.settings_a() != 2 || dist.settings_b() != 2 {
        return Err(Error::Shape("CHSH needs two settings per party".into()));
    }
    signs_a.check(dist.outcomes_a())?;
    signs_b.check(dist.outcomes_b())?;
    let db = dist.outcomes_b();
    let mut e = [0.0; 4];
    for (k, ek) in e.iter_mut().enumerate() {
        let sp = dist.setting_probs()[k];
        if sp <= 0.0 {
            return Err(Error::Contract(format!(
                "setting pair {k} has zero probability"
            )));
        }
        let sum: f64 = dist
            .row(k)
            .iter()
            .enumerate()
            .map(|(l, &p)| p * f64::from(signs_a.0[l / db] * signs_b.0[l % db]))
            .sum();
        *ek = sum / sp;
    }
    Ok(e)
}

/// CHSH value E₁₁ − E₁₂ + E₂₁ + E₂₂ maximized in magnitude over which
/// correlator carries the minus sign (the four forms differ only by
/// relabeling settings and outcomes, so each obeys |·| ≤ 2 under local
/// realism).
pub fn chsh_value(
    dist: &ExperimentDistribution,
    signs_a: &SignMap,
    signs_b: &SignMap,
) -> Result<f64> {
    let e = correlators(dist, signs_a, signs_b)?;
    let total: f64 = e.iter().sum();
    Ok(e.iter().map(|&x| total - 2.0 * x).fold(0.0_f64, |best, v| {
        if v.abs() > best.abs() {
            v
        } else {
            best
        }
    }))
}

/// Largest CHSH value over every binary coarse-graining of the outcomes,
/// chosen separately for each party and setting.
///
/// Bob's maps are enumerated over his reachable labels; for each of them the
/// best map for Alice follows outcome by outcome. Exceeds 2 only when the
/// table violates local realism.
pub fn max_chsh(dist: &ExperimentDistribution) -> Result<f64> {
    if dist.settings_a() != 2 || dist.settings_b() != 2 {
        return Err(Error::Shape("CHSH needs two settings per party".into()));
    }
    let da = dist.outcomes_a();
    let db = dist.outcomes_b();
    let support_a = dist.support_a();
    let support_b = dist.support_b();
    let nb = support_b.len();
    if nb > 16 {
        return Err(Error::Shape(format!(
            "{nb} outcomes are too many to enumerate"
        )));
    }
    // conditional tables q_k(a, b)
    let mut cond = Vec::with_capacity(4);
    for k in 0..4 {
        let sp = dist.setting_probs()[k];
        if sp <= 0.0 {
            return Err(Error::Contract(format!(
                "setting pair {k} has zero probability"
            )));
        }
        cond.push(dist.row(k).iter().map(|p| p / sp).collect::<Vec<f64>>());
    }
    // v[j][map][a] = Σ_b sign(b) q(a, b | i, j) for both i, flattened as [i][a]
    let maps = 1usize << nb;
    let mut v = vec![vec![0.0; 2 * da * maps]; 2];
    for (j, vj) in v.iter_mut().enumerate() {
        for map in 0..maps {
            for i in 0..2 {
                let row = &cond[2 * i + j];
                for &a in support_a {
                    let mut sum = 0.0;
                    for (bit, &b) in support_b.iter().enumerate() {
                        let sign = if map >> bit & 1 == 1 { 1.0 } else { -1.0 };
                        sum += sign * row[a * db + b];
                    }
                    vj[(map * 2 + i) * da + a] = sum;
                }
            }
        }
    }
    let mut best = 0.0_f64;
    for m1 in 0..maps {
        for m2 in 0..maps {
            for minus in 0..4 {
                let mut total = 0.0;
                for i in 0..2 {
                    let c1 = if minus == 2 * i { -1.0 } else { 1.0 };
                    let c2 = if minus == 2 * i + 1 { -1.0 } else { 1.0 };
                    let x1 = &v[0][(m1 * 2 + i) * da..(m1 * 2 + i + 1) * da];
                    let x2 = &v[1][(m2 * 2 + i) * da..(m2 * 2 + i + 1) * da];
                    for &a in support_a {
                        total += (c1 * x1[a] + c2 * x2[a]).abs();
                    }
                }
                best = best.max(total);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonic::distribution::{experiment_distribution, Settings, UNIFORM_SETTINGS};
    use crate::photonic::measurement::{DetectionModel, DetectorKind};
    use crate::photonic::state::build_unbalanced_bell;
    use approx::assert_abs_diff_eq;

    fn bell_table(eta: f64, polars: [f64; 4]) -> ExperimentDistribution {
        experiment_distribution(
            &build_unbalanced_bell(45.0).unwrap(),
            &Settings::planar(polars),
            DetectionModel::new(DetectorKind::Detector, eta).unwrap(),
            UNIFORM_SETTINGS,
        )
        .unwrap()
    }

    #[test]
    fn tsirelson_point() {
        let d = bell_table(1.0, [0.0, 90.0, 45.0, -45.0]);
        let s = SignMap::reflected_only(OutcomeSpace::new(DetectorKind::Detector));
        // E(a, b) = cos(a − b) for this state and planar settings
        let e = correlators(&d, &s, &s).unwrap();
        let expect = [-45f64, 45.0, 45.0, 135.0].map(|x| x.to_radians().cos());
        for (x, y) in e.iter().zip(expect) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            chsh_value(&d, &s, &s).unwrap(),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn no_detection_gives_two() {
        let d = bell_table(0.0, [0.0, 90.0, 45.0, -45.0]);
        let s = SignMap::reflected_only(OutcomeSpace::new(DetectorKind::Detector));
        assert_eq!(chsh_value(&d, &s, &s).unwrap().abs(), 2.0);
    }

    #[test]
    fn max_chsh_bounds() {
        let d = bell_table(1.0, [0.0, 90.0, 45.0, -45.0]);
        assert_abs_diff_eq!(max_chsh(&d).unwrap(), 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(
            max_chsh(&bell_table(0.0, [0.0, 90.0, 45.0, -45.0])).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        // product-state statistics never exceed 2
        let product = experiment_distribution(
            &build_unbalanced_bell(1e-9).unwrap(),
            &Settings::planar([10.0, 70.0, -30.0, 50.0]),
            DetectionModel::new(DetectorKind::Counter, 0.8).unwrap(),
            UNIFORM_SETTINGS,
        )
        .unwrap();
        assert!(max_chsh(&product).unwrap() <= 2.0 + 1e-12);
    }

    #[test]
    fn incomplete_sign_map_rejected() {
        let d = bell_table(1.0, [0.0, 90.0, 45.0, -45.0]);
        let short = SignMap(vec![1, -1]);
        let full = SignMap::reflected_only(OutcomeSpace::new(DetectorKind::Detector));
        assert!(chsh_value(&d, &short, &full).is_err());
        assert!(chsh_value(&d, &full, &SignMap(vec![1, 0, 1, 1])).is_err());
    }
}
