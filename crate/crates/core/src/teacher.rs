//! Simulated teacher.
//!
//! The teacher follows one preferred policy, the canonical optimal policy of
//! the domain. It evaluates every eligible action against that policy and,
//! seeing the contingency model's display, instructs a state only when no
//! signal is shown for it or the shown signal is wrong. Both channels can be
//! made sparse and noisy.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::session::TeachingSource;
use crate::agent::SignalId;
use crate::domains::{optimal_policy, Domain};
use crate::rl::{ActionId, Feedback, StateId};

/// Discount used to derive the preferred policy, whatever the learner's.
pub const ORACLE_GAMMA: f64 = 0.9;

const INSTRUCTION_MASK_STREAM: u64 = 2;
const FEEDBACK_MASK_STREAM: u64 = 3;
const FEEDBACK_ERROR_STREAM: u64 = 4;
const INSTRUCTION_ERROR_STREAM: u64 = 5;
const SIGNAL_MAP_STREAM: u64 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeacherError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
}

/// How sparsity is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityMode {
    /// One eligibility draw per state (instructions) or state-action pair
    /// (feedback), fixed for the session.
    #[default]
    Fixed,
    /// A fresh draw on every query.
    PerEncounter,
}

/// Teacher parameters as they appear in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherConfig {
    pub p_feedback: f64,
    pub p_instruction: f64,
    pub e_feedback: f64,
    pub e_instruction: f64,
    pub sparsity: SparsityMode,
    /// Map actions to signals through a per-session random permutation
    /// instead of the identity.
    pub shuffle_signals: bool,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            p_feedback: 1.0,
            p_instruction: 1.0,
            e_feedback: 0.0,
            e_instruction: 0.0,
            sparsity: SparsityMode::Fixed,
            shuffle_signals: false,
        }
    }
}

impl TeacherConfig {
    pub fn validate(&self) -> Result<(), TeacherError> {
        for (name, value) in [
            ("p_feedback", self.p_feedback),
            ("p_instruction", self.p_instruction),
            ("e_feedback", self.e_feedback),
            ("e_instruction", self.e_instruction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(TeacherError::Probability { name, value });
            }
        }
        Ok(())
    }
}

/// Preferred action per `StateId`: the lowest-id optimal action.
pub fn preferred_policy<D: Domain>(domain: &D) -> Arc<[ActionId]> {
    optimal_policy(domain, ORACLE_GAMMA).canonical.into()
}

/// Which channels the teacher uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channels {
    pub feedback: bool,
    pub instructions: bool,
}

/// Immutable part of a teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherSpec {
    pub preferred: Arc<[ActionId]>,
    /// `signal_of[a]` is the signal meaning "do `a`".
    pub signal_of: Vec<SignalId>,
    pub config: TeacherConfig,
    pub seed: u64,
}

impl TeacherSpec {
    pub fn preferred_action(&self, s: StateId) -> ActionId {
        self.preferred[s.0]
    }

    pub fn correct_signal(&self, s: StateId) -> SignalId {
        self.signal_of[self.preferred_action(s).0]
    }

    pub fn num_actions(&self) -> usize {
        self.signal_of.len()
    }
}

/// Session-fixed eligibility draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibilityMasks {
    /// Indexed by `StateId`.
    pub instruction: Vec<bool>,
    /// Indexed by `StateId * actions + ActionId`.
    pub feedback: Vec<bool>,
}

/// `n` independent Bernoulli(`p`) draws.
pub fn bernoulli_mask<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.gen_bool(p)).collect()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone)]
pub struct SimulatedTeacher {
    spec: TeacherSpec,
    masks: EligibilityMasks,
    channels: Channels,
    instruction_mask_rng: ChaCha8Rng,
    feedback_mask_rng: ChaCha8Rng,
    feedback_error_rng: ChaCha8Rng,
    instruction_error_rng: ChaCha8Rng,
}

/// Builds the teacher of one session. Deterministic in `(config, seed)`.
pub fn build_teacher(
    preferred: Arc<[ActionId]>,
    num_actions: usize,
    config: TeacherConfig,
    channels: Channels,
    seed: u64,
) -> Result<SimulatedTeacher, TeacherError> {
    config.validate()?;
    let states = preferred.len();
    let mut signal_of: Vec<SignalId> = (0..num_actions).map(SignalId).collect();
    if config.shuffle_signals {
        signal_of.shuffle(&mut stream(seed, SIGNAL_MAP_STREAM));
    }
    let mut instruction_mask_rng = stream(seed, INSTRUCTION_MASK_STREAM);
    let mut feedback_mask_rng = stream(seed, FEEDBACK_MASK_STREAM);
    let masks = match config.sparsity {
        SparsityMode::Fixed => EligibilityMasks {
            instruction: bernoulli_mask(states, config.p_instruction, &mut instruction_mask_rng),
            feedback: bernoulli_mask(
                states * num_actions,
                config.p_feedback,
                &mut feedback_mask_rng,
            ),
        },
        SparsityMode::PerEncounter => EligibilityMasks {
            instruction: Vec::new(),
            feedback: Vec::new(),
        },
    };
    Ok(SimulatedTeacher {
        spec: TeacherSpec {
            preferred,
            signal_of,
            config,
            seed,
        },
        masks,
        channels,
        instruction_mask_rng,
        feedback_mask_rng,
        feedback_error_rng: stream(seed, FEEDBACK_ERROR_STREAM),
        instruction_error_rng: stream(seed, INSTRUCTION_ERROR_STREAM),
    })
}

impl SimulatedTeacher {
    pub fn spec(&self) -> &TeacherSpec {
        &self.spec
    }

    pub fn masks(&self) -> &EligibilityMasks {
        &self.masks
    }

    fn instruction_eligible(&mut self, s: StateId) -> bool {
        match self.spec.config.sparsity {
            SparsityMode::Fixed => self.masks.instruction[s.0],
            SparsityMode::PerEncounter => self
                .instruction_mask_rng
                .gen_bool(self.spec.config.p_instruction),
        }
    }

    fn feedback_eligible(&mut self, s: StateId, a: ActionId) -> bool {
        match self.spec.config.sparsity {
            SparsityMode::Fixed => self.masks.feedback[s.0 * self.spec.num_actions() + a.0],
            SparsityMode::PerEncounter => {
                self.feedback_mask_rng.gen_bool(self.spec.config.p_feedback)
            }
        }
    }

    /// Evaluation of `a` in `s` against the preferred policy, possibly
    /// withheld or sign-flipped.
    pub fn give_feedback(&mut self, s: StateId, a: ActionId) -> Option<Feedback> {
        if !self.channels.feedback || !self.feedback_eligible(s, a) {
            return None;
        }
        let base = if a == self.spec.preferred_action(s) {
            Feedback::Positive
        } else {
            Feedback::Negative
        };
        if self.feedback_error_rng.gen_bool(self.spec.config.e_feedback) {
            Some(base.flipped())
        } else {
            Some(base)
        }
    }

    /// Instruction for `s` under the transparency rule: silent when the
    /// display already shows the correct signal.
    pub fn give_instruction(&mut self, s: StateId, display: Option<SignalId>) -> Option<SignalId> {
        if !self.channels.instructions || !self.instruction_eligible(s) {
            return None;
        }
        let correct = self.spec.correct_signal(s);
        if display == Some(correct) {
            return None;
        }
        let n = self.spec.num_actions();
        if n > 1 && self.instruction_error_rng.gen_bool(self.spec.config.e_instruction) {
            let k = self.instruction_error_rng.gen_range(0..n - 1);
            let wrong = if k >= correct.0 { k + 1 } else { k };
            return Some(SignalId(wrong));
        }
        Some(correct)
    }
}

impl TeachingSource for SimulatedTeacher {
    fn instruction(&mut self, s: StateId, display: Option<SignalId>) -> Option<SignalId> {
        self.give_instruction(s, display)
    }

    fn feedback(&mut self, s: StateId, a: ActionId) -> Option<Feedback> {
        self.give_feedback(s, a)
    }
}
