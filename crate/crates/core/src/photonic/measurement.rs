//! Polarization analysis settings, detection models and outcome labels.

use num_complex::Complex64;

use crate::error::{check_range, Result};

/// One party's polarization analysis, given by the Bloch-sphere direction
/// (degrees) of the single-photon state sent to the reflected port.
///
/// |H⟩ is the +z direction and (|H⟩+|V⟩)/√2 the +x direction, so the
/// reflected port selects cos(polar/2)|H⟩ + e^{i·azimuth} sin(polar/2)|V⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    polar: f64,
    azimuth: f64,
}

impl MeasurementSetting {
    /// polar ∈ [−180, 180], azimuth ∈ [0, 360).
    pub fn new(polar: f64, azimuth: f64) -> Result<Self> {
        check_range(
            "polar",
            polar,
            (-180.0..=180.0).contains(&polar),
            "[-180, 180] degrees",
        )?;
        check_range(
            "azimuth",
            azimuth,
            (0.0..360.0).contains(&azimuth),
            "[0, 360) degrees",
        )?;
        Ok(Self { polar, azimuth })
    }

    /// A setting in the (x, z) plane of the Bloch sphere.
    pub fn planar(polar: f64) -> Result<Self> {
        Self::new(polar, 0.0)
    }

    /// Wraps arbitrary finite angles onto the admissible ranges without
    /// changing the Bloch direction.
    pub fn wrapped(polar: f64, azimuth: f64) -> Self {
        let polar = wrap_signed(polar, 360.0);
        let mut azimuth = azimuth.rem_euclid(360.0);
        if azimuth >= 360.0 {
            azimuth = 0.0;
        }
        Self { polar, azimuth }
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    /// Bloch vector (x, y, z) of the reflected-port state.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.to_radians().sin_cos();
        let (sa, ca) = self.azimuth.to_radians().sin_cos();
        [sp * ca, sp * sa, cp]
    }

    /// Polarization states (in the H, V basis) that exit at the reflected
    /// and at the transmitted port.
    pub fn port_states(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = (self.polar.to_radians() / 2.0).sin_cos();
        let e = Complex64::from_polar(1.0, self.azimuth.to_radians());
        let reflected = [Complex64::new(c, 0.0), e * s];
        let transmitted = [-e.conj() * s, Complex64::new(c, 0.0)];
        [reflected, transmitted]
    }
}

/// Maps `x` into (−period/2, period/2].
pub(crate) fn wrap_signed(x: f64, period: f64) -> f64 {
    let half = period / 2.0;
    let mut y = (x + half).rem_euclid(period) - half;
    if y <= -half {
        y += period;
    }
    y
}

/// What the two detectors behind each analyzer report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// Photon-number-resolving counters.
    Counter,
    /// Click/no-click detectors.
    Detector,
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Counter => "counter",
            DetectorKind::Detector => "detector",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "counter" => Ok(DetectorKind::Counter),
            "detector" => Ok(DetectorKind::Detector),
            other => Err(format!(
                "unknown detection kind `{other}` (counter|detector)"
            )),
        }
    }
}

/// Detector kind plus a common efficiency η ∈ [0, 1] for all four detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub kind: DetectorKind,
    efficiency: f64,
}

impl DetectionModel {
    pub fn new(kind: DetectorKind, efficiency: f64) -> Result<Self> {
        check_range(
            "eta",
            efficiency,
            (0.0..=1.0).contains(&efficiency),
            "[0, 1]",
        )?;
        Ok(Self { kind, efficiency })
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

/// Photon counts (reflected, transmitted) at one party, lexicographic order.
pub const COUNT_LABELS: [(u8, u8); 6] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)];

/// Clicks (reflected, transmitted) at one party, binary order.
pub const CLICK_LABELS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Index of a count pair in [`COUNT_LABELS`].
pub fn count_index(n1: u8, n2: u8) -> usize {
    COUNT_LABELS
        .iter()
        .position(|&l| l == (n1, n2))
        .unwrap_or_else(|| panic!("count pair ({n1}, {n2}) exceeds two photons"))
}

/// Index in [`CLICK_LABELS`] reached by a count pair.
pub fn click_index_of_counts(n1: u8, n2: u8) -> usize {
    2 * usize::from(n1 > 0) + usize::from(n2 > 0)
}

/// Per-party outcome labels for a detector kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeSpace {
    pub kind: DetectorKind,
}

impl OutcomeSpace {
    pub fn new(kind: DetectorKind) -> Self {
        Self { kind }
    }

    pub fn labels(&self) -> &'static [(u8, u8)] {
        match self.kind {
            DetectorKind::Counter => &COUNT_LABELS,
            DetectorKind::Detector => &CLICK_LABELS,
        }
    }

    /// Outcomes per party.
    pub fn party_size(&self) -> usize {
        self.labels().len()
    }

    /// Joint outcomes per setting pair.
    pub fn joint_size(&self) -> usize {
        self.party_size() * self.party_size()
    }

    /// Labels a party holding at most `photons` photons can produce at any
    /// setting and efficiency.
    pub fn reachable(&self, photons: u8) -> Vec<usize> {
        self.labels()
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| match self.kind {
                DetectorKind::Counter => a + b <= photons,
                DetectorKind::Detector => a + b <= photons.min(2),
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn format_label(&self, index: usize) -> String {
        let (a, b) = self.labels()[index];
        format!("({a},{b})")
    }
}
