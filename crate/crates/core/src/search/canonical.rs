//! Representative settings under the symmetries that leave S unchanged.

use crate::photonic::{
    ideal_outcome_distribution, wrap_signed, DetectorKind, FockState, OutcomeSpace, Settings,
};

const SAME_STATISTICS: f64 = 1e-12;

/// Maps planar settings to a fixed representative.
///
/// Used symmetries: a polar shift by 180° swaps a party's two ports; the
/// order of a party's two settings is a relabeling; negating every polar
/// angle is the basis flip |V⟩ → −|V⟩ at both parties, which only touches
/// phases between photon-number sectors. The representative has every
/// polar angle in (−90, 90], each party's settings ordered by magnitude, and
/// A_1 ≥ 0. Off-plane settings are returned unchanged.
pub fn canonicalize(settings: &Settings) -> Settings {
    if !settings.is_planar() {
        return *settings;
    }
    let mut p = settings.polars().map(|x| wrap_signed(x, 180.0));
    if p[0].abs() > p[1].abs() {
        p.swap(0, 1);
    }
    if p[2].abs() > p[3].abs() {
        p.swap(2, 3);
    }
    if p[0] < 0.0 || (p[0] == 0.0 && p[1] < 0.0) {
        p = p.map(|x| wrap_signed(-x, 180.0));
    }
    Settings::planar(p)
}

/// Fixes the gauge of states invariant under a common polarization rotation
/// of both parties (e.g. |HH⟩ + |VV⟩). When shifting all four polar angles by
/// the same amount leaves every ideal outcome distribution unchanged, the
/// shift that makes A_1 = −B_1 is applied. Other settings are returned
/// unchanged.
pub fn align_joint_rotation(state: &FockState, settings: &Settings) -> Settings {
    if !settings.is_planar() {
        return *settings;
    }
    let p = settings.polars();
    let shift = -(p[0] + p[2]) / 2.0;
    let candidate = Settings::planar(p.map(|x| x + shift));
    let space = OutcomeSpace::new(DetectorKind::Counter);
    for i in 0..2 {
        for j in 0..2 {
            let before =
                ideal_outcome_distribution(state, &settings.alice(i), &settings.bob(j), space);
            let after =
                ideal_outcome_distribution(state, &candidate.alice(i), &candidate.bob(j), space);
            let (Ok(before), Ok(after)) = (before, after) else {
                return *settings;
            };
            let same = before
                .iter()
                .zip(&after)
                .all(|(x, y)| (x - y).abs() <= SAME_STATISTICS);
            if !same {
                return *settings;
            }
        }
    }
    candidate
}
