//! Two-party photonic states over the modes (A_H, A_V, B_H, B_V).

use num_complex::Complex64;

use crate::error::{check_range, Error, Result};

/// Occupation numbers in mode order (A_H, A_V, B_H, B_V).
pub type Occupation = [u8; 4];

/// Largest total photon number a state may carry.
pub const MAX_PHOTONS: u8 = 2;

const NORM_TOL: f64 = 1e-12;

/// A pure state with at most two photons spread over Alice's and Bob's
/// horizontal/vertical modes.
///
/// Terms are kept sorted by occupation and never repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    terms: Vec<(Occupation, Complex64)>,
}

impl FockState {
    /// Builds a state from explicit terms. Repeated occupations are summed
    /// and zero amplitudes dropped; the result must be normalized.
    pub fn new(terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Result<Self> {
        let mut merged: Vec<(Occupation, Complex64)> = Vec::new();
        for (occ, amp) in terms {
            let total: u8 = occ.iter().sum();
            if total > MAX_PHOTONS || occ.iter().any(|&n| n > MAX_PHOTONS) {
                return Err(Error::Contract(format!(
                    "occupation {occ:?} exceeds {MAX_PHOTONS} photons"
                )));
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::Contract(format!("non-finite amplitude on {occ:?}")));
            }
            match merged.iter_mut().find(|(o, _)| *o == occ) {
                Some((_, a)) => *a += amp,
                None => merged.push((occ, amp)),
            }
        }
        merged.retain(|(_, a)| a.norm_sqr() > 0.0);
        merged.sort_by(|x, y| x.0.cmp(&y.0));
        let norm: f64 = merged.iter().map(|(_, a)| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!(
                "state norm {norm} differs from 1 by more than {NORM_TOL:e}"
            )));
        }
        Ok(Self { terms: merged })
    }

    /// Like [`FockState::new`] but rescales the amplitudes to unit norm.
    pub fn normalized(terms: impl IntoIterator<Item = (Occupation, Complex64)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        let norm: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Contract("cannot normalize a zero state".into()));
        }
        Self::new(terms.into_iter().map(|(o, a)| (o, a / norm)))
    }

    /// |1,0,1,0⟩: one horizontally polarized photon at each party.
    pub fn product_hh() -> Self {
        Self {
            terms: vec![([1, 0, 1, 0], Complex64::new(1.0, 0.0))],
        }
    }

    pub fn terms(&self) -> &[(Occupation, Complex64)] {
        &self.terms
    }

    pub fn amplitude(&self, occ: Occupation) -> Complex64 {
        self.terms
            .iter()
            .find(|(o, _)| *o == occ)
            .map(|(_, a)| *a)
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Largest photon number found at Alice's and at Bob's side.
    pub fn max_party_photons(&self) -> (u8, u8) {
        self.terms.iter().fold((0, 0), |(a, b), (o, _)| {
            (a.max(o[0] + o[1]), b.max(o[2] + o[3]))
        })
    }

    /// Splits the state into sectors of fixed (Alice, Bob) photon number.
    ///
    /// Local polarization analysis followed by counting cannot see
    /// coherences between sectors, so the outcome statistics of the state
    /// equal the weighted mixture of the returned normalized components.
    pub fn photon_number_sectors(&self) -> Vec<(f64, FockState)> {
        let mut keys: Vec<(u8, u8)> = self
            .terms
            .iter()
            .map(|(o, _)| (o[0] + o[1], o[2] + o[3]))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|key| {
                let part: Vec<_> = self
                    .terms
                    .iter()
                    .filter(|(o, _)| (o[0] + o[1], o[2] + o[3]) == key)
                    .copied()
                    .collect();
                let weight: f64 = part.iter().map(|(_, a)| a.norm_sqr()).sum();
                let comp = FockState::normalized(part).expect("nonzero sector");
                (weight, comp)
            })
            .collect()
    }
}

/// cos θ |H⟩_A|H⟩_B + sin θ |V⟩_A|V⟩_B with θ in degrees, θ ∈ (0, 45].
pub fn build_unbalanced_bell(theta_deg: f64) -> Result<FockState> {
    check_range(
        "theta",
        theta_deg,
        theta_deg > 0.0 && theta_deg <= 45.0,
        "(0, 45] degrees",
    )?;
    let t = theta_deg.to_radians();
    FockState::new([
        ([1, 0, 1, 0], Complex64::new(t.cos(), 0.0)),
        ([0, 1, 0, 1], Complex64::new(t.sin(), 0.0)),
    ])
}

/// The state two independent photons polarized as cos γ|H⟩ + e^{iφ} sin γ|V⟩
/// leave behind after a polarizing beam splitter, without postselection.
/// Both angles in degrees; γ ∈ (0, 45], φ ∈ [0, 360).
pub fn build_pseudo_bell(gamma_deg: f64, phi_deg: f64) -> Result<FockState> {
    check_range(
        "gamma",
        gamma_deg,
        gamma_deg > 0.0 && gamma_deg <= 45.0,
        "(0, 45] degrees",
    )?;
    check_range(
        "phi",
        phi_deg,
        (0.0..360.0).contains(&phi_deg),
        "[0, 360) degrees",
    )?;
    let (s, c) = gamma_deg.to_radians().sin_cos();
    let phase = Complex64::from_polar(1.0, phi_deg.to_radians());
    FockState::new([
        ([1, 0, 1, 0], Complex64::new(c * c, 0.0)),
        ([0, 1, 0, 1], phase * phase * (s * s)),
        ([1, 1, 0, 0], phase * (c * s)),
        ([0, 0, 1, 1], phase * (c * s)),
    ])
}

/// Family of states the search and reporting layers trace over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateFamily {
    Unbalanced { theta: f64 },
    PseudoBell { gamma: f64, phi: f64 },
}

impl StateFamily {
    pub fn build(&self) -> Result<FockState> {
        match *self {
            StateFamily::Unbalanced { theta } => build_unbalanced_bell(theta),
            StateFamily::PseudoBell { gamma, phi } => build_pseudo_bell(gamma, phi),
        }
    }

    /// Family member with the same kind but a different main parameter.
    pub fn with_parameter(&self, value: f64) -> Self {
        match *self {
            StateFamily::Unbalanced { .. } => StateFamily::Unbalanced { theta: value },
            StateFamily::PseudoBell { phi, .. } => StateFamily::PseudoBell { gamma: value, phi },
        }
    }

    /// θ for the unbalanced family, γ for the pseudo-Bell family.
    pub fn parameter(&self) -> f64 {
        match *self {
            StateFamily::Unbalanced { theta } => theta,
            StateFamily::PseudoBell { gamma, .. } => gamma,
        }
    }

    /// Column name used in tables.
    pub fn parameter_name(&self) -> &'static str {
        match self {
            StateFamily::Unbalanced { .. } => "theta",
            StateFamily::PseudoBell { .. } => "gamma",
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            StateFamily::Unbalanced { .. } => "unbalanced",
            StateFamily::PseudoBell { .. } => "pseudo",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn unbalanced_symmetric_point() {
        let s = build_unbalanced_bell(45.0).unwrap();
        assert_abs_diff_eq!(s.amplitude([1, 0, 1, 0]).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude([0, 1, 0, 1]).re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn unbalanced_thirty_degrees() {
        let s = build_unbalanced_bell(30.0).unwrap();
        assert_abs_diff_eq!(
            s.amplitude([1, 0, 1, 0]).re,
            0.75f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(s.amplitude([0, 1, 0, 1]).re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unbalanced_small_theta_approaches_product() {
        let s = build_unbalanced_bell(1e-6).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
        assert!(s.amplitude([1, 0, 1, 0]).re > 1.0 - 1e-12);
    }

    #[test]
    fn unbalanced_rejects_out_of_range() {
        for bad in [0.0, -1.0, 45.1, f64::NAN] {
            assert!(matches!(
                build_unbalanced_bell(bad),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn pseudo_bell_balanced_amplitudes() {
        let s = build_pseudo_bell(45.0, 0.0).unwrap();
        for occ in [[1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0], [0, 0, 1, 1]] {
            let a = s.amplitude(occ);
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pseudo_bell_phase_ninety() {
        let s = build_pseudo_bell(45.0, 90.0).unwrap();
        let expect = [
            ([1, 0, 1, 0], Complex64::new(0.5, 0.0)),
            ([0, 1, 0, 1], Complex64::new(-0.5, 0.0)),
            ([1, 1, 0, 0], Complex64::new(0.0, 0.5)),
            ([0, 0, 1, 1], Complex64::new(0.0, 0.5)),
        ];
        for (occ, amp) in expect {
            let a = s.amplitude(occ);
            assert_abs_diff_eq!(a.re, amp.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, amp.im, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pseudo_bell_rejects_out_of_range() {
        assert!(build_pseudo_bell(0.0, 0.0).is_err());
        assert!(build_pseudo_bell(30.0, 360.0).is_err());
        assert!(build_pseudo_bell(30.0, -0.1).is_err());
    }

    #[test]
    fn new_rejects_unnormalized_and_overfull() {
        assert!(FockState::new([([1, 0, 1, 0], Complex64::new(0.9, 0.0))]).is_err());
        assert!(FockState::new([([2, 1, 0, 0], Complex64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn sectors_split_pseudo_bell() {
        let s = build_pseudo_bell(30.0, 0.0).unwrap();
        let sectors = s.photon_number_sectors();
        assert_eq!(sectors.len(), 3);
        let total: f64 = sectors.iter().map(|(w, _)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        let (c, sn) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
        let entangled = sectors
            .iter()
            .find(|(_, st)| st.max_party_photons() == (1, 1))
            .unwrap();
        assert_abs_diff_eq!(entangled.0, c.powi(4) + sn.powi(4), epsilon = 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn pseudo_bell_always_normalized(g in 0.01f64..=45.0, p in 0.0f64..360.0) {
            let s = build_pseudo_bell(g, p).unwrap();
            proptest::prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
