use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::session::EpisodeTally;
use crate::domains::DomainKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("percentile of an empty sample")]
    Empty,
    #[error("quantile {0} outside (0, 1]")]
    Quantile(f64),
}

/// Per-episode step bound that a converged session must keep to the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "sorting-4")]
    Sorting4,
    #[serde(rename = "sorting-5")]
    Sorting5,
    #[serde(rename = "maze-24")]
    Maze24,
}

impl Criterion {
    pub fn max_steps(self) -> u32 {
        match self {
            Criterion::Sorting4 => 4,
            Criterion::Sorting5 => 5,
            Criterion::Maze24 => 24,
        }
    }

    pub fn for_domain(kind: DomainKind) -> Self {
        if kind.is_maze() {
            Criterion::Maze24
        } else {
            Criterion::Sorting4
        }
    }
}

/// Index of the first episode of the criterion-satisfying suffix, or `None`
/// when the last episode fails (or there are no episodes).
pub fn convergence_episode(steps: &[u32], criterion: Criterion) -> Option<usize> {
    let bound = criterion.max_steps();
    if steps.last().map_or(true, |&s| s > bound) {
        return None;
    }
    let start = steps
        .iter()
        .rposition(|&s| s > bound)
        .map_or(0, |last_bad| last_bad + 1);
    Some(start)
}

/// Steps taken before the criterion-satisfying suffix starts.
pub fn convergence_point(steps: &[u32], criterion: Criterion) -> Option<u64> {
    let e = convergence_episode(steps, criterion)?;
    Some(steps[..e].iter().map(|&s| u64::from(s)).sum())
}

/// Nearest-rank percentile: the `ceil(q·n)`-th smallest sample.
pub fn percentile(samples: &[u64], q: f64) -> Result<u64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(StatsError::Quantile(q));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // Guard against q·n landing a hair above an integer, e.g. 0.29·100.
    let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sorted[rank - 1])
}

/// Teaching signals a session needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionLoad {
    /// Feedback until convergence (whole session if it never converged).
    pub feedback: u64,
    /// Instructions over the whole session.
    pub instructions: u64,
    pub total: u64,
}

pub fn interaction_load(tallies: &[EpisodeTally], converged_episode: Option<usize>) -> InteractionLoad {
    let until = converged_episode.unwrap_or(tallies.len());
    let feedback = tallies[..until].iter().map(|t| u64::from(t.feedback)).sum();
    let instructions = tallies.iter().map(|t| u64::from(t.instructions)).sum();
    InteractionLoad {
        feedback,
        instructions,
        total: feedback + instructions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn convergence_examples() {
        assert_eq!(convergence_point(&[10, 4, 4, 4], Criterion::Sorting4), Some(10));
        assert_eq!(convergence_point(&[4, 9, 4], Criterion::Sorting4), Some(13));
        assert_eq!(convergence_point(&[4, 4, 9], Criterion::Sorting4), None);
        assert_eq!(convergence_point(&[4, 4], Criterion::Sorting4), Some(0));
        assert_eq!(convergence_point(&[], Criterion::Sorting4), None);
        assert_eq!(convergence_point(&[6, 5, 5], Criterion::Sorting5), Some(6));
        assert_eq!(convergence_point(&[30, 24, 3], Criterion::Maze24), Some(30));
    }

    #[test]
    fn percentile_examples() {
        let hundred: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&hundred, 0.99), Ok(99));
        assert_eq!(percentile(&[7], 0.99), Ok(7));
        assert_eq!(percentile(&[7], 0.01), Ok(7));
        assert_eq!(percentile(&[5, 1, 3], 0.5), Ok(3));
        assert_eq!(percentile(&[], 0.5), Err(StatsError::Empty));
        assert!(percentile(&[1], 0.0).is_err());
        // 0.29 · 100 is 28.999999999999996 in binary; rank must be 29.
        assert_eq!(percentile(&hundred, 0.29), Ok(29));
        let two_hundred: Vec<u64> = (1..=200).collect();
        assert_eq!(percentile(&two_hundred, 0.99), Ok(198));
    }

    fn tally(steps: u32, feedback: u32, instructions: u32) -> EpisodeTally {
        EpisodeTally {
            steps,
            feedback,
            instructions,
            success: None,
        }
    }

    #[test]
    fn load_examples() {
        let t = [tally(10, 10, 3), tally(4, 4, 1), tally(4, 4, 0)];
        let e = convergence_episode(&[10, 4, 4], Criterion::Sorting4);
        assert_eq!(
            interaction_load(&t, e),
            InteractionLoad { feedback: 10, instructions: 4, total: 14 }
        );
        assert_eq!(
            interaction_load(&t[..1], None),
            InteractionLoad { feedback: 10, instructions: 3, total: 13 }
        );
        assert_eq!(interaction_load(&[], None), InteractionLoad::default());
    }

    proptest! {
        #[test]
        fn appending_good_episode_never_increases_point(
            steps in prop::collection::vec(1u32..12, 0..40),
            extra in 1u32..=4,
        ) {
            let before = convergence_point(&steps, Criterion::Sorting4);
            let mut longer = steps.clone();
            longer.push(extra);
            let after = convergence_point(&longer, Criterion::Sorting4).unwrap();
            if let Some(b) = before {
                prop_assert!(after <= b);
            }
        }

        #[test]
        fn suffix_rule_matches_definition(steps in prop::collection::vec(1u32..8, 1..30)) {
            let got = convergence_episode(&steps, Criterion::Sorting4);
            let want = (0..steps.len()).find(|&e| steps[e..].iter().all(|&s| s <= 4));
            prop_assert_eq!(got, want);
        }

        #[test]
        fn percentile_is_a_sample_with_enough_mass_below(
            samples in prop::collection::vec(0u64..1000, 1..300),
            q in 0.01f64..=1.0,
        ) {
            let p = percentile(&samples, q).unwrap();
            prop_assert!(samples.contains(&p));
            let at_most = samples.iter().filter(|&&s| s <= p).count() as f64;
            let below = samples.iter().filter(|&&s| s < p).count() as f64;
            let n = samples.len() as f64;
            prop_assert!(at_most >= q * n - 1e-6);
            prop_assert!(below < q * n + 1e-6);
        }
    }
}
