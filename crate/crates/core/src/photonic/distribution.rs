//! Outcome statistics for the two-party analyzers.

use num_complex::Complex64;

use super::measurement::{
    click_index_of_counts, count_index, DetectionModel, DetectorKind, MeasurementSetting,
    OutcomeSpace, COUNT_LABELS,
};
use super::state::FockState;
use crate::error::{check_range, Error, Result};

const ROW_TOL: f64 = 1e-10;
const COUNTS: usize = COUNT_LABELS.len();
/// Joint count outcomes for one setting pair.
pub const JOINT_COUNTS: usize = COUNTS * COUNTS;

/// The four analyzer settings in order (A_1, A_2, B_1, B_2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings(pub [MeasurementSetting; 4]);

impl Settings {
    /// All four settings in the (x, z) plane.
    pub fn planar(polars: [f64; 4]) -> Self {
        Settings(polars.map(|p| MeasurementSetting::wrapped(p, 0.0)))
    }

    pub fn alice(&self, i: usize) -> MeasurementSetting {
        self.0[i]
    }

    pub fn bob(&self, j: usize) -> MeasurementSetting {
        self.0[2 + j]
    }

    pub fn polars(&self) -> [f64; 4] {
        self.0.map(|s| s.polar())
    }

    pub fn is_planar(&self) -> bool {
        self.0.iter().all(|s| s.azimuth() == 0.0)
    }
}

/// Amplitudes of |m_r, m_t⟩ port states produced from |n_H, n_V⟩ at one
/// party, indexed `[input count label][output count label]`. Photon number
/// is conserved, so the matrix is block diagonal.
fn party_transfer(setting: &MeasurementSetting) -> [[Complex64; COUNTS]; COUNTS] {
    let [r, t] = setting.port_states();
    // a_X† = ⟨r|X⟩ c_r† + ⟨t|X⟩ c_t†
    let h = [r[0].conj(), t[0].conj()];
    let v = [r[1].conj(), t[1].conj()];
    let fact: [f64; 3] = [1.0, 1.0, 2.0];
    let mut out = [[Complex64::default(); COUNTS]; COUNTS];
    for (idx, &(nh, nv)) in COUNT_LABELS.iter().enumerate() {
        // poly[i][j] is the coefficient of (c_r†)^i (c_t†)^j
        let mut poly = [[Complex64::default(); 3]; 3];
        poly[0][0] = Complex64::new(1.0, 0.0);
        let factors = std::iter::repeat(h)
            .take(nh as usize)
            .chain(std::iter::repeat(v).take(nv as usize));
        for lin in factors {
            let mut next = [[Complex64::default(); 3]; 3];
            for i in 0..3 {
                for j in 0..3 - i {
                    let c = poly[i][j];
                    if c == Complex64::default() {
                        continue;
                    }
                    if i + 1 + j <= 2 {
                        next[i + 1][j] += c * lin[0];
                        next[i][j + 1] += c * lin[1];
                    }
                }
            }
            poly = next;
        }
        let norm_in = (fact[nh as usize] * fact[nv as usize]).sqrt();
        for i in 0..3 {
            for j in 0..3 - i {
                if i + j == (nh + nv) as usize {
                    let scale = (fact[i] * fact[j]).sqrt() / norm_in;
                    out[idx][count_index(i as u8, j as u8)] = poly[i][j] * scale;
                }
            }
        }
    }
    out
}

/// Exact joint photon-count distribution at unit efficiency, indexed
/// `a * 6 + b` over [`COUNT_LABELS`].
fn ideal_counts(
    state: &FockState,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
) -> [f64; JOINT_COUNTS] {
    let ta = party_transfer(a);
    let tb = party_transfer(b);
    let mut amps = [Complex64::default(); JOINT_COUNTS];
    for &(occ, amp) in state.terms() {
        let ia = count_index(occ[0], occ[1]);
        let ib = count_index(occ[2], occ[3]);
        for oa in 0..COUNTS {
            let xa = ta[ia][oa];
            if xa == Complex64::default() {
                continue;
            }
            for ob in 0..COUNTS {
                amps[oa * COUNTS + ob] += amp * xa * tb[ib][ob];
            }
        }
    }
    amps.map(|z| z.norm_sqr())
}

fn check_normalized(state: &FockState) -> Result<()> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("state norm {n} is not 1")));
    }
    Ok(())
}

/// Joint outcome probabilities for one setting pair at unit efficiency,
/// indexed `a * d + b` over the space's per-party labels.
pub fn ideal_outcome_distribution(
    state: &FockState,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
    space: OutcomeSpace,
) -> Result<Vec<f64>> {
    check_normalized(state)?;
    let counts = ideal_counts(state, a, b);
    Ok(match space.kind {
        DetectorKind::Counter => counts.to_vec(),
        DetectorKind::Detector => collapse_to_clicks(&counts),
    })
}

/// Per-party stochastic matrix of independent binomial loss on each of the
/// two detectors, `[input count][output count]`.
fn thinning_matrix(eta: f64) -> [[f64; COUNTS]; COUNTS] {
    let binom = |n: u8, k: u8| -> f64 {
        let choose = match (n, k) {
            (2, 1) => 2.0,
            _ => 1.0,
        };
        choose * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
    };
    let mut m = [[0.0; COUNTS]; COUNTS];
    for (i, &(n1, n2)) in COUNT_LABELS.iter().enumerate() {
        for k1 in 0..=n1 {
            for k2 in 0..=n2 {
                m[i][count_index(k1, k2)] += binom(n1, k1) * binom(n2, k2);
            }
        }
    }
    m
}

/// Keeps every photon at every detector independently with probability
/// `efficiency`. Input and output are joint count distributions over
/// [`COUNT_LABELS`]², length 36.
pub fn apply_loss(ideal: &[f64], efficiency: f64) -> Result<Vec<f64>> {
    if ideal.len() != JOINT_COUNTS {
        return Err(Error::Shape(format!(
            "loss expects a joint count table of {JOINT_COUNTS} entries, got {}",
            ideal.len()
        )));
    }
    check_range(
        "eta",
        efficiency,
        (0.0..=1.0).contains(&efficiency),
        "[0, 1]",
    )?;
    Ok(thin(ideal, &thinning_matrix(efficiency)))
}

fn thin(ideal: &[f64], m: &[[f64; COUNTS]; COUNTS]) -> Vec<f64> {
    // contract Alice's index, then Bob's
    let mut half = [0.0; JOINT_COUNTS];
    for a in 0..COUNTS {
        for b in 0..COUNTS {
            let p = ideal[a * COUNTS + b];
            if p == 0.0 {
                continue;
            }
            for (a2, &w) in m[a].iter().enumerate() {
                half[a2 * COUNTS + b] += p * w;
            }
        }
    }
    let mut out = vec![0.0; JOINT_COUNTS];
    for a in 0..COUNTS {
        for b in 0..COUNTS {
            let p = half[a * COUNTS + b];
            if p == 0.0 {
                continue;
            }
            for (b2, &w) in m[b].iter().enumerate() {
                out[a * COUNTS + b2] += p * w;
            }
        }
    }
    out
}

/// Relabels a joint count distribution as click patterns.
pub fn collapse_to_clicks(counts: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 16];
    for (a, &(a1, a2)) in COUNT_LABELS.iter().enumerate() {
        for (b, &(b1, b2)) in COUNT_LABELS.iter().enumerate() {
            let ca = click_index_of_counts(a1, a2);
            let cb = click_index_of_counts(b1, b2);
            out[ca * 4 + cb] += counts[a * COUNTS + b];
        }
    }
    out
}

/// Joint probabilities q_kl over setting pairs k and joint outcomes l.
///
/// Row k = i·n_B + j holds setting pair (A_{i+1}, B_{j+1}); column
/// l = a·d_B + b holds Alice's outcome a and Bob's outcome b. Rows sum to
/// the probability of their setting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDistribution {
    settings_a: usize,
    settings_b: usize,
    outcomes_a: usize,
    outcomes_b: usize,
    setting_probs: Vec<f64>,
    table: Vec<f64>,
    support_a: Vec<usize>,
    support_b: Vec<usize>,
    kind: Option<DetectorKind>,
}

impl ExperimentDistribution {
    /// Generic table with every label considered reachable. `table` is
    /// row-major with `settings_a * settings_b` rows.
    pub fn from_table(
        settings_a: usize,
        settings_b: usize,
        outcomes_a: usize,
        outcomes_b: usize,
        setting_probs: Vec<f64>,
        table: Vec<f64>,
    ) -> Result<Self> {
        let dist = Self {
            settings_a,
            settings_b,
            outcomes_a,
            outcomes_b,
            setting_probs,
            table,
            support_a: (0..outcomes_a).collect(),
            support_b: (0..outcomes_b).collect(),
            kind: None,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Restricts the labels an LR model may assign to the ones a party can
    /// structurally produce. Every label outside the support must carry
    /// zero probability in every row.
    pub fn with_support(mut self, support_a: Vec<usize>, support_b: Vec<usize>) -> Result<Self> {
        for k in 0..self.setting_pairs() {
            for a in 0..self.outcomes_a {
                for b in 0..self.outcomes_b {
                    let outside = !support_a.contains(&a) || !support_b.contains(&b);
                    if outside && self.get(k, a * self.outcomes_b + b) > 0.0 {
                        return Err(Error::Contract(format!(
                            "outcome ({a}, {b}) has mass in row {k} but lies outside the support"
                        )));
                    }
                }
            }
        }
        if support_a.is_empty() || support_b.is_empty() {
            return Err(Error::Contract("empty outcome support".into()));
        }
        self.support_a = support_a;
        self.support_b = support_b;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let k = self.setting_pairs();
        let l = self.joint_outcomes();
        if self.setting_probs.len() != k || self.table.len() != k * l {
            return Err(Error::Shape(format!(
                "expected {k} setting probabilities and {k}x{l} table, got {} and {}",
                self.setting_probs.len(),
                self.table.len()
            )));
        }
        if self.setting_probs.iter().any(|&p| !(p >= 0.0))
            || (self.setting_probs.iter().sum::<f64>() - 1.0).abs() > ROW_TOL
        {
            return Err(Error::Contract(
                "setting probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        for (row, &sp) in self.table.chunks(l).zip(&self.setting_probs) {
            if row.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::Contract("negative or NaN probability".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - sp).abs() > ROW_TOL {
                return Err(Error::Contract(format!(
                    "row sums to {sum}, expected setting probability {sp}"
                )));
            }
        }
        Ok(())
    }

    pub fn settings_a(&self) -> usize {
        self.settings_a
    }

    pub fn settings_b(&self) -> usize {
        self.settings_b
    }

    pub fn outcomes_a(&self) -> usize {
        self.outcomes_a
    }

    pub fn outcomes_b(&self) -> usize {
        self.outcomes_b
    }

    /// K, the number of setting pairs.
    pub fn setting_pairs(&self) -> usize {
        self.settings_a * self.settings_b
    }

    /// L, the number of joint outcomes per setting pair.
    pub fn joint_outcomes(&self) -> usize {
        self.outcomes_a * self.outcomes_b
    }

    pub fn setting_probs(&self) -> &[f64] {
        &self.setting_probs
    }

    /// Flat row-major K×L table.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let l = self.joint_outcomes();
        &self.table[k * l..(k + 1) * l]
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.table[k * self.joint_outcomes() + l]
    }

    pub fn support_a(&self) -> &[usize] {
        &self.support_a
    }

    pub fn support_b(&self) -> &[usize] {
        &self.support_b
    }

    /// Detector kind for photonic tables, `None` for generic ones.
    pub fn kind(&self) -> Option<DetectorKind> {
        self.kind
    }
}

/// Probability of each setting pair when both parties choose uniformly.
pub const UNIFORM_SETTINGS: [f64; 4] = [0.25; 4];

/// Full experiment table for a state, four settings and a detection model.
pub fn experiment_distribution(
    state: &FockState,
    settings: &Settings,
    model: DetectionModel,
    setting_probs: [f64; 4],
) -> Result<ExperimentDistribution> {
    check_normalized(state)?;
    let space = OutcomeSpace::new(model.kind);
    let d = space.party_size();
    let thinning = thinning_matrix(model.efficiency());
    let mut table = Vec::with_capacity(4 * d * d);
    for i in 0..2 {
        for j in 0..2 {
            let sp = setting_probs[i * 2 + j];
            let counts = ideal_counts(state, &settings.alice(i), &settings.bob(j));
            let lossy = thin(&counts, &thinning);
            let row = match model.kind {
                DetectorKind::Counter => lossy,
                DetectorKind::Detector => collapse_to_clicks(&lossy),
            };
            table.extend(row.into_iter().map(|p| p * sp));
        }
    }
    let (max_a, max_b) = state.max_party_photons();
    let mut dist = ExperimentDistribution::from_table(2, 2, d, d, setting_probs.to_vec(), table)?
        .with_support(space.reachable(max_a), space.reachable(max_b))?;
    dist.kind = Some(model.kind);
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonic::state::{build_pseudo_bell, build_unbalanced_bell};
    use approx::assert_abs_diff_eq;

    fn z() -> MeasurementSetting {
        MeasurementSetting::planar(0.0).unwrap()
    }

    #[test]
    fn pseudo_bell_computational_basis() {
        let s = build_pseudo_bell(45.0, 0.0).unwrap();
        let p =
            ideal_outcome_distribution(&s, &z(), &z(), OutcomeSpace::new(DetectorKind::Counter))
                .unwrap();
        let idx = |a: (u8, u8), b: (u8, u8)| count_index(a.0, a.1) * 6 + count_index(b.0, b.1);
        for (a, b) in [
            ((1, 0), (1, 0)),
            ((0, 1), (0, 1)),
            ((1, 1), (0, 0)),
            ((0, 0), (1, 1)),
        ] {
            assert_abs_diff_eq!(p[idx(a, b)], 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bell_state_z_basis_correlation() {
        let s = build_unbalanced_bell(45.0).unwrap();
        let p =
            ideal_outcome_distribution(&s, &z(), &z(), OutcomeSpace::new(DetectorKind::Counter))
                .unwrap();
        let r = count_index(1, 0);
        let t = count_index(0, 1);
        assert_abs_diff_eq!(p[r * 6 + r], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[t * 6 + t], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_photons_one_side_bunch_as_cos_squared() {
        let s = FockState::new([([1, 1, 0, 0], Complex64::new(1.0, 0.0))]).unwrap();
        for alpha in [0.0, 30.0, 77.0, -140.0] {
            let a = MeasurementSetting::planar(alpha).unwrap();
            let p =
                ideal_outcome_distribution(&s, &a, &z(), OutcomeSpace::new(DetectorKind::Counter))
                    .unwrap();
            let both = p[count_index(1, 1) * 6 + count_index(0, 0)];
            assert_abs_diff_eq!(both, alpha.to_radians().cos().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn single_photon_thinning() {
        let mut p = vec![0.0; 36];
        p[count_index(1, 0) * 6] = 1.0;
        let out = apply_loss(&p, 0.9).unwrap();
        assert_abs_diff_eq!(out[count_index(1, 0) * 6], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn zero_efficiency_keeps_nothing() {
        let s = build_pseudo_bell(30.0, 0.0).unwrap();
        let ideal = ideal_outcome_distribution(
            &s,
            &MeasurementSetting::planar(12.0).unwrap(),
            &MeasurementSetting::planar(-40.0).unwrap(),
            OutcomeSpace::new(DetectorKind::Counter),
        )
        .unwrap();
        let out = apply_loss(&ideal, 0.0).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn binomial_law_for_two_photons() {
        let eta = 0.7;
        let mut p = vec![0.0; 36];
        p[count_index(2, 0) * 6] = 1.0;
        let out = apply_loss(&p, eta).unwrap();
        assert_abs_diff_eq!(out[count_index(2, 0) * 6], eta * eta, epsilon = 1e-15);
        assert_abs_diff_eq!(
            out[count_index(1, 0) * 6],
            2.0 * eta * (1.0 - eta),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(out[0], (1.0 - eta).powi(2), epsilon = 1e-15);
    }

    #[test]
    fn loss_rejects_bad_input() {
        assert!(apply_loss(&[1.0; 16], 0.5).is_err());
        let mut p = vec![0.0; 36];
        p[0] = 1.0;
        assert!(apply_loss(&p, 1.5).is_err());
    }

    #[test]
    fn table_shapes() {
        let st = Settings::planar([10.0, 50.0, -20.0, 70.0]);
        let pb = build_pseudo_bell(40.0, 0.0).unwrap();
        let c = experiment_distribution(
            &pb,
            &st,
            DetectionModel::new(DetectorKind::Counter, 0.9).unwrap(),
            UNIFORM_SETTINGS,
        )
        .unwrap();
        assert_eq!((c.setting_pairs(), c.joint_outcomes()), (4, 36));
        let d = experiment_distribution(
            &pb,
            &st,
            DetectionModel::new(DetectorKind::Detector, 0.9).unwrap(),
            UNIFORM_SETTINGS,
        )
        .unwrap();
        assert_eq!((d.setting_pairs(), d.joint_outcomes()), (4, 16));
        for k in 0..4 {
            assert_abs_diff_eq!(c.row(k).iter().sum::<f64>(), 0.25, epsilon = 1e-10);
            assert_abs_diff_eq!(d.row(k).iter().sum::<f64>(), 0.25, epsilon = 1e-10);
        }
    }

    #[test]
    fn from_table_validates_rows() {
        assert!(ExperimentDistribution::from_table(1, 1, 1, 2, vec![1.0], vec![0.5, 0.4]).is_err());
        assert!(ExperimentDistribution::from_table(1, 1, 1, 2, vec![1.0], vec![0.5]).is_err());
        assert!(ExperimentDistribution::from_table(1, 1, 1, 2, vec![1.0], vec![0.5, 0.5]).is_ok());
    }
}
