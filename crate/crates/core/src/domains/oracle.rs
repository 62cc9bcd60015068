use serde::Serialize;

use super::Domain;
use crate::rl::{ActionId, StateId};

/// Actions whose value lies within this distance of the best one are all
/// counted as optimal.
pub const ORACLE_TOLERANCE: f64 = 1e-9;
const CONVERGENCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 100_000;

/// Optimal values and policies of a domain, indexed by `StateId`.
///
/// Entries for terminal or unused ids hold value 0, an empty optimal set
/// and action 0.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalPolicy {
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub optimal_sets: Vec<Vec<ActionId>>,
    /// Lowest-id optimal action per state.
    pub canonical: Vec<ActionId>,
    pub decision_states: Vec<StateId>,
    pub sweeps: usize,
}

impl OptimalPolicy {
    pub fn action(&self, s: StateId) -> ActionId {
        self.canonical[s.0]
    }

    pub fn is_optimal(&self, s: StateId, a: ActionId) -> bool {
        self.optimal_sets[s.0].contains(&a)
    }
}

/// Value iteration over the domain's decision states.
pub fn optimal_policy<D: Domain>(domain: &D, gamma: f64) -> OptimalPolicy {
    let n = domain.num_states();
    let k = domain.num_actions();
    let states = domain.decision_states();
    // Transitions are deterministic, so tabulate them once.
    let table: Vec<(StateId, Vec<(f64, bool, StateId)>)> = states
        .iter()
        .map(|s| {
            let id = domain.state_id(s);
            let row = (0..k)
                .map(|a| {
                    let o = domain
                        .step(s, ActionId(a))
                        .expect("decision states are non-terminal");
                    (o.reward, o.terminal, domain.state_id(&o.next))
                })
                .collect();
            (id, row)
        })
        .collect();

    let backup = |values: &[f64], row: &[(f64, bool, StateId)]| -> Vec<f64> {
        row.iter()
            .map(|&(r, terminal, next)| if terminal { r } else { r + gamma * values[next.0] })
            .collect()
    };

    let mut values = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        for (id, row) in &table {
            let best = backup(&values, row)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - values[id.0]).abs());
            values[id.0] = best;
        }
        if delta < CONVERGENCE || sweeps >= MAX_SWEEPS {
            break;
        }
    }

    let mut q = vec![Vec::new(); n];
    let mut optimal_sets = vec![Vec::new(); n];
    let mut canonical = vec![ActionId(0); n];
    for (id, row) in &table {
        let qs = backup(&values, row);
        let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let set: Vec<ActionId> = qs
            .iter()
            .enumerate()
            .filter(|(_, &v)| best - v <= ORACLE_TOLERANCE)
            .map(|(a, _)| ActionId(a))
            .collect();
        canonical[id.0] = set[0];
        optimal_sets[id.0] = set;
        q[id.0] = qs;
    }
    OptimalPolicy {
        values,
        q,
        optimal_sets,
        canonical,
        decision_states: table.iter().map(|(id, _)| *id).collect(),
        sweeps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{
        DescriptorMode, MazeAction, MazeDomain, MazeMap, SortingDomain, ROSTER,
    };

    #[test]
    fn corridor_values() {
        let d = MazeDomain::new("c", MazeMap::parse("G..").unwrap());
        let p = optimal_policy(&d, 0.9);
        assert_eq!(p.canonical[1], MazeAction::West.id());
        assert_eq!(p.canonical[2], MazeAction::West.id());
        assert_eq!(p.optimal_sets[1], vec![MazeAction::West.id()]);
        assert!((p.values[1] - 1.0).abs() < 1e-9);
        assert!((p.values[2] - 0.89).abs() < 1e-9);
    }

    #[test]
    fn maze_variants_differ_in_optimal_multiplicity() {
        let std = optimal_policy(&MazeDomain::standard(), 0.9);
        assert!(std
            .decision_states
            .iter()
            .any(|s| std.optimal_sets[s.0].len() > 1));
        let simple = optimal_policy(&MazeDomain::simple(), 0.9);
        for s in &simple.decision_states {
            assert_eq!(simple.optimal_sets[s.0].len(), 1, "state {s:?}");
        }
    }

    #[test]
    fn sorting_canonical_plan() {
        let d = SortingDomain::new(DescriptorMode::Full);
        let p = optimal_policy(&d, 0.9);
        let mut s = d.reset_with(ROSTER[1]);
        let mut plan = vec![];
        loop {
            let a = p.action(d.state_id(&s));
            plan.push(a.0);
            let o = d.step(&s, a).unwrap();
            s = o.next;
            if o.terminal {
                assert_eq!(o.success, Some(true));
                break;
            }
        }
        assert_eq!(plan, vec![0, 4, 2, 6]);
    }
}
