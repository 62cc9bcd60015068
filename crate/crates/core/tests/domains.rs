use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tics_core::domains::{
    optimal_policy, AnyDomain, Domain, DomainKind, MazeDomain, ObjectLocation, SortingDomain,
    SortingState, Zone, ROSTER,
};
use tics_core::domains::maze::{GOAL_REWARD, STEP_REWARD};
use tics_core::rl::ActionId;

fn sorting() -> SortingDomain {
    match AnyDomain::build(DomainKind::Sorting) {
        AnyDomain::Sorting(d) => d,
        _ => unreachable!(),
    }
}

fn maze(kind: DomainKind) -> MazeDomain {
    match AnyDomain::build(kind) {
        AnyDomain::Maze(d) => d,
        _ => unreachable!(),
    }
}

/// Fewest steps from `start` to any terminal state, and to a successful one.
fn shortest_episodes(d: &SortingDomain, start: SortingState) -> (usize, usize) {
    let mut seen = HashSet::from([d.state_id(&start)]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    let (mut any, mut success) = (None, None);
    while let Some((s, depth)) = queue.pop_front() {
        for a in 0..d.num_actions() {
            let o = d.step(&s, ActionId(a)).unwrap();
            if o.terminal {
                any.get_or_insert(depth + 1);
                if o.success == Some(true) {
                    success.get_or_insert(depth + 1);
                }
            } else if seen.insert(d.state_id(&o.next)) {
                queue.push_back((o.next, depth + 1));
            }
        }
    }
    (any.unwrap(), success.unwrap())
}

#[test]
fn sorting_needs_four_steps_from_every_reset() {
    let d = sorting();
    for object in ROSTER {
        assert_eq!(shortest_episodes(&d, d.reset_with(object)), (4, 4), "{object:?}");
    }
}

#[test]
fn canonical_policy_takes_four_steps() {
    let d = sorting();
    let policy = optimal_policy(&d, 0.9);
    for object in ROSTER {
        let mut s = d.reset_with(object);
        let mut steps = 0;
        loop {
            let o = d.step(&s, policy.action(d.state_id(&s))).unwrap();
            steps += 1;
            if o.terminal {
                assert_eq!(o.success, Some(true));
                break;
            }
            s = o.next;
            assert!(steps < 4);
        }
        assert_eq!(steps, 4);
    }
}

#[test]
fn maze_std_horizon_is_24() {
    let d = maze(DomainKind::MazeStd);
    assert_eq!((d.map().width(), d.map().height()), (20, 20));
    let dist = d.map().goal_distances();
    assert_eq!(dist.iter().flatten().max(), Some(&24));
    assert_eq!(d.map().goal_horizon(), 24);
}

#[test]
fn maze_optimal_multiplicity() {
    let std = maze(DomainKind::MazeStd);
    let p = optimal_policy(&std, 0.9);
    assert!(p.decision_states.iter().any(|s| p.optimal_sets[s.0].len() > 1));

    let simple = maze(DomainKind::MazeSimple);
    assert_eq!(simple.map().goal_horizon(), 24);
    let p = optimal_policy(&simple, 0.9);
    for s in &p.decision_states {
        assert_eq!(p.optimal_sets[s.0].len(), 1, "{s:?}");
    }
}

fn terminal_only_by_placement(prev: &SortingState, a: ActionId, next: &SortingState, terminal: bool) {
    let placed = matches!(next.object, ObjectLocation::Zone(Zone::Z1 | Zone::Z3));
    assert_eq!(terminal, placed, "{prev:?} --{a:?}--> {next:?}");
    if let ObjectLocation::Zone(z) = next.object {
        assert!(z == Zone::Z2 || terminal);
    }
}

proptest! {
    #[test]
    fn domains_are_deterministic(kind in 0usize..3, pick in any::<prop::sample::Index>(), a in 0usize..8) {
        fn check<D: Domain>(d: &D, pick: prop::sample::Index, a: usize) {
            let states = d.decision_states();
            let s = &states[pick.index(states.len())];
            let a = ActionId(a % d.num_actions());
            assert_eq!(d.step(s, a).unwrap(), d.step(s, a).unwrap());
        }
        match kind {
            0 => check(&sorting(), pick, a),
            1 => check(&maze(DomainKind::MazeStd), pick, a),
            _ => check(&maze(DomainKind::MazeSimple), pick, a),
        }
    }

    #[test]
    fn sorting_episodes_end_only_by_placement(seed in any::<u64>(), episode in 0usize..8) {
        let d = sorting();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = d.reset(episode, &mut rng);
        for _ in 0..500 {
            let a = ActionId(rand::Rng::gen_range(&mut rng, 0..d.num_actions()));
            let o = d.step(&s, a).unwrap();
            terminal_only_by_placement(&s, a, &o.next, o.terminal);
            if o.terminal {
                prop_assert!(d.is_terminal(&o.next));
                break;
            }
            s = o.next;
        }
    }

    #[test]
    fn maze_pays_goal_reward_once(seed in any::<u64>()) {
        let d = maze(DomainKind::MazeSimple);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = d.reset(0, &mut rng);
        let mut goal_rewards = 0;
        for _ in 0..1_000_000 {
            let a = ActionId(rand::Rng::gen_range(&mut rng, 0..d.num_actions()));
            let o = d.step(&s, a).unwrap();
            if o.reward == GOAL_REWARD {
                goal_rewards += 1;
                prop_assert!(o.terminal);
            } else {
                prop_assert_eq!(o.reward, STEP_REWARD);
                prop_assert!(!o.terminal);
            }
            if o.terminal {
                break;
            }
            s = o.next;
        }
        prop_assert_eq!(goal_rewards, 1);
    }
}
