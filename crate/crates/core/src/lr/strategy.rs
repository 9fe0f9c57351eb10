//! Deterministic local strategies: one fixed outcome per setting per party.

use crate::photonic::ExperimentDistribution;

/// All deterministic local strategies compatible with a table's shape and
/// outcome support.
///
/// A strategy is the tuple (a_1..a_{n_A}; b_1..b_{n_B}) of outcomes, stored
/// as a mixed-radix index with a_1 most significant. For each strategy the
/// table cell it fills at every setting pair is precomputed.
#[derive(Debug, Clone)]
pub struct StrategySet {
    settings_a: usize,
    settings_b: usize,
    support_a: Vec<usize>,
    support_b: Vec<usize>,
    outcomes_b: usize,
    joint_outcomes: usize,
    cells: Vec<u32>,
}

impl StrategySet {
    pub fn for_distribution(q: &ExperimentDistribution) -> Self {
        Self::new(
            q.settings_a(),
            q.settings_b(),
            q.support_a().to_vec(),
            q.support_b().to_vec(),
            q.outcomes_b(),
            q.joint_outcomes(),
        )
    }

    fn new(
        settings_a: usize,
        settings_b: usize,
        support_a: Vec<usize>,
        support_b: Vec<usize>,
        outcomes_b: usize,
        joint_outcomes: usize,
    ) -> Self {
        let mut set = Self {
            settings_a,
            settings_b,
            support_a,
            support_b,
            outcomes_b,
            joint_outcomes,
            cells: Vec::new(),
        };
        let k = settings_a * settings_b;
        let size = set.len();
        let mut cells = Vec::with_capacity(size * k);
        for s in 0..size {
            let (a, b) = set.assignment(s);
            for i in 0..settings_a {
                for j in 0..settings_b {
                    let row = i * settings_b + j;
                    let col = a[i] * outcomes_b + b[j];
                    cells.push((row * joint_outcomes + col) as u32);
                }
            }
        }
        set.cells = cells;
        set
    }

    /// d_A^{n_A} · d_B^{n_B}.
    pub fn len(&self) -> usize {
        self.support_a.len().pow(self.settings_a as u32)
            * self.support_b.len().pow(self.settings_b as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of setting pairs each strategy answers.
    pub fn setting_pairs(&self) -> usize {
        self.settings_a * self.settings_b
    }

    /// Outcome labels (a_1..a_{n_A}) and (b_1..b_{n_B}) of strategy `s`.
    pub fn assignment(&self, s: usize) -> (Vec<usize>, Vec<usize>) {
        let da = self.support_a.len();
        let db = self.support_b.len();
        let mut rest = s;
        let mut b = vec![0; self.settings_b];
        for slot in b.iter_mut().rev() {
            *slot = self.support_b[rest % db];
            rest /= db;
        }
        let mut a = vec![0; self.settings_a];
        for slot in a.iter_mut().rev() {
            *slot = self.support_a[rest % da];
            rest /= da;
        }
        (a, b)
    }

    /// Flat table cells filled by strategy `s`, one per setting pair.
    pub fn cells(&self, s: usize) -> &[u32] {
        let k = self.setting_pairs();
        &self.cells[s * k..(s + 1) * k]
    }

    pub(crate) fn all_cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn table_len(&self) -> usize {
        self.setting_pairs() * self.joint_outcomes
    }

    pub fn outcomes_b(&self) -> usize {
        self.outcomes_b
    }
}
