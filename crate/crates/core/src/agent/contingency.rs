use serde::{Deserialize, Serialize};

use crate::rl::StateId;

/// Dense index into the instruction-signal alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalId(pub usize);

impl SignalId {
    /// Signals index the rows of instruction-model tables.
    pub fn row(self) -> StateId {
        StateId(self.0)
    }
}

/// Co-occurrence counts `c(s, i)` between task states and observed signals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyMatrix {
    signals: usize,
    counts: Vec<u32>,
    totals: Vec<u32>,
}

impl ContingencyMatrix {
    pub fn new(states: usize, signals: usize) -> Self {
        Self {
            signals,
            counts: vec![0; states * signals],
            totals: vec![0; states],
        }
    }

    pub fn signals(&self) -> usize {
        self.signals
    }

    pub fn count(&self, s: StateId, i: SignalId) -> u32 {
        self.counts[s.0 * self.signals + i.0]
    }

    pub fn row(&self, s: StateId) -> &[u32] {
        &self.counts[s.0 * self.signals..(s.0 + 1) * self.signals]
    }

    pub fn observe(&mut self, s: StateId, i: SignalId) {
        self.counts[s.0 * self.signals + i.0] += 1;
        self.totals[s.0] += 1;
    }

    /// `Pr(i | s) = c(s,i) / Σ_j c(s,j)`, or `None` for an empty row.
    pub fn probability(&self, s: StateId, i: SignalId) -> Option<f64> {
        let total = self.totals[s.0];
        (total > 0).then(|| f64::from(self.count(s, i)) / f64::from(total))
    }

    /// Most frequently observed signal for `s` and its probability; ties go
    /// to the lowest id.
    pub fn best_signal(&self, s: StateId) -> Option<(SignalId, f64)> {
        let total = self.totals[s.0];
        if total == 0 {
            return None;
        }
        let row = self.row(s);
        let mut best = 0;
        for (i, &c) in row.iter().enumerate().skip(1) {
            if c > row[best] {
                best = i;
            }
        }
        Some((SignalId(best), f64::from(row[best]) / f64::from(total)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_accumulate_per_row() {
        let mut cm = ContingencyMatrix::new(3, 2);
        cm.observe(StateId(1), SignalId(0));
        assert_eq!(cm.count(StateId(1), SignalId(0)), 1);
        cm.observe(StateId(1), SignalId(0));
        cm.observe(StateId(1), SignalId(0));
        assert_eq!(cm.count(StateId(1), SignalId(0)), 3);
        assert_eq!(cm.row(StateId(0)), &[0, 0]);
        assert_eq!(cm.row(StateId(2)), &[0, 0]);
    }

    #[test]
    fn best_signal_cases() {
        let mut cm = ContingencyMatrix::new(1, 2);
        assert_eq!(cm.best_signal(StateId(0)), None);
        cm.observe(StateId(0), SignalId(1));
        cm.observe(StateId(0), SignalId(0));
        assert_eq!(cm.best_signal(StateId(0)), Some((SignalId(0), 0.5)));
        cm.observe(StateId(0), SignalId(0));
        let (i, p) = cm.best_signal(StateId(0)).unwrap();
        assert_eq!(i, SignalId(0));
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rows_normalise(obs in prop::collection::vec((0usize..4, 0usize..5), 0..60)) {
            let mut cm = ContingencyMatrix::new(4, 5);
            for &(s, i) in &obs {
                cm.observe(StateId(s), SignalId(i));
            }
            for s in 0..4 {
                let total: f64 = (0..5)
                    .filter_map(|i| cm.probability(StateId(s), SignalId(i)))
                    .sum();
                if cm.row(StateId(s)).iter().any(|&c| c > 0) {
                    prop_assert!((total - 1.0).abs() < 1e-12);
                    let (best, p) = cm.best_signal(StateId(s)).unwrap();
                    let max = *cm.row(StateId(s)).iter().max().unwrap();
                    prop_assert_eq!(cm.count(StateId(s), best), max);
                    prop_assert!(cm.row(StateId(s))[..best.0].iter().all(|&c| c < max));
                    prop_assert!(p > 0.0);
                } else {
                    prop_assert!(cm.best_signal(StateId(s)).is_none());
                }
            }
        }
    }
}
