use std::sync::Arc;

use proptest::prelude::*;

use tics_core::agent::{ContingencyMatrix, SignalId};
use tics_core::rl::{ActionId, Feedback, StateId};
use tics_core::teacher::{build_teacher, Channels, SimulatedTeacher, TeacherConfig};

const BOTH: Channels = Channels {
    feedback: true,
    instructions: true,
};

fn teacher(preferred: &[usize], actions: usize, config: TeacherConfig, seed: u64) -> SimulatedTeacher {
    let preferred: Arc<[ActionId]> = preferred.iter().map(|&a| ActionId(a)).collect();
    build_teacher(preferred, actions, config, BOTH, seed).unwrap()
}

fn policy(states: usize, actions: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..actions, states)
}

fn noisy() -> TeacherConfig {
    TeacherConfig {
        p_feedback: 0.6,
        p_instruction: 0.4,
        e_feedback: 0.2,
        e_instruction: 0.3,
        shuffle_signals: true,
        ..TeacherConfig::default()
    }
}

proptest! {
    #[test]
    fn identical_seeds_answer_identically(
        preferred in policy(30, 4),
        queries in prop::collection::vec((0usize..30, 0usize..4, prop::option::of(0usize..4)), 0..300),
        seed in any::<u64>(),
    ) {
        let mut a = teacher(&preferred, 4, noisy(), seed);
        let mut b = teacher(&preferred, 4, noisy(), seed);
        prop_assert_eq!(a.masks(), b.masks());
        prop_assert_eq!(&a.spec().signal_of, &b.spec().signal_of);
        for &(s, act, display) in &queries {
            let (s, act, display) = (StateId(s), ActionId(act), display.map(SignalId));
            prop_assert_eq!(a.give_instruction(s, display), b.give_instruction(s, display));
            prop_assert_eq!(a.give_feedback(s, act), b.give_feedback(s, act));
        }
    }

    #[test]
    fn ideal_feedback_is_the_preferred_policy_indicator(preferred in policy(20, 5), seed in any::<u64>()) {
        let mut t = teacher(&preferred, 5, TeacherConfig::default(), seed);
        for (s, &p) in preferred.iter().enumerate() {
            for a in 0..5 {
                let want = if a == p { Feedback::Positive } else { Feedback::Negative };
                prop_assert_eq!(t.give_feedback(StateId(s), ActionId(a)), Some(want));
            }
        }
    }

    #[test]
    fn erroneous_instructions_are_never_correct(preferred in policy(20, 4), seed in any::<u64>()) {
        let config = TeacherConfig { e_instruction: 1.0, shuffle_signals: true, ..TeacherConfig::default() };
        let mut t = teacher(&preferred, 4, config, seed);
        for s in 0..20 {
            let s = StateId(s);
            let correct = t.spec().correct_signal(s);
            let given = t.give_instruction(s, None).unwrap();
            prop_assert_ne!(given, correct);
        }
    }

    /// Under the transparency rule an ideal teacher instructs each state
    /// once, on its first visit, and then stays silent.
    #[test]
    fn ideal_teacher_instructs_once_per_state(
        preferred in policy(15, 4),
        visits in prop::collection::vec(0usize..15, 1..200),
        seed in any::<u64>(),
    ) {
        let mut t = teacher(&preferred, 4, TeacherConfig { shuffle_signals: true, ..TeacherConfig::default() }, seed);
        let mut cm = ContingencyMatrix::new(15, 4);
        let mut seen = [false; 15];
        for &s in &visits {
            let s_id = StateId(s);
            let display = cm.best_signal(s_id).map(|(i, _)| i);
            let given = t.give_instruction(s_id, display);
            prop_assert_eq!(given.is_some(), !seen[s]);
            if let Some(i) = given {
                prop_assert_eq!(i, t.spec().correct_signal(s_id));
                cm.observe(s_id, i);
            }
            seen[s] = true;
        }
    }
}

#[test]
fn instruction_mask_rate_within_three_sigma() {
    let n = 20_000;
    let preferred = vec![0; n];
    for seed in 0..5 {
        let config = TeacherConfig { p_instruction: 0.5, ..TeacherConfig::default() };
        let t = teacher(&preferred, 2, config, seed);
        let hits = t.masks().instruction.iter().filter(|&&b| b).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((hits - n as f64 * 0.5).abs() < 3.0 * sigma, "seed {seed}: {hits}");
    }
}

#[test]
fn coin_flip_feedback_is_uncorrelated_with_correctness() {
    let states = 50_000;
    let preferred: Vec<usize> = (0..states).map(|s| s % 4).collect();
    let config = TeacherConfig { e_feedback: 0.5, ..TeacherConfig::default() };
    let mut t = teacher(&preferred, 4, config, 7);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for s in 0..states {
        for a in 0..4 {
            let f = t.give_feedback(StateId(s), ActionId(a)).unwrap();
            x.push(if a == s % 4 { 1.0 } else { -1.0 });
            y.push(f64::from(f.sign()));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&x), mean(&y));
    let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let corr = cov / (vx * vy).sqrt();
    assert!(corr.abs() < 0.02, "{corr}");
}
