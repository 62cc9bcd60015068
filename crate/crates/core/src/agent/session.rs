//! Drives one agent through episodes of a domain.
//!
//! A step has three phases: [`Session::teach`] (instruction for the current
//! pre-action state), [`Session::act`] (decision and environment step) and
//! [`Session::learn`] (reward and feedback for the action just taken). The
//! simulated path runs all three in [`Session::step`]; a live teacher calls
//! them separately so feedback can arrive after the action is shown.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Agent, DecisionSource, SignalId, Transition};
use crate::domains::{Domain, DomainError};
use crate::rl::{ActionId, Feedback, StateId};
use crate::Scalar;

/// RNG stream for exploration draws.
pub const AGENT_STREAM: u64 = 0;
/// RNG stream for episode resets.
pub const ENV_STREAM: u64 = 1;

/// A teacher queried once per step.
pub trait TeachingSource {
    /// Instruction for the pre-action state `s`, given the signal the
    /// contingency model currently displays for it.
    fn instruction(&mut self, s: StateId, display: Option<SignalId>) -> Option<SignalId>;

    /// Evaluation of action `a` taken in `s`.
    fn feedback(&mut self, s: StateId, a: ActionId) -> Option<Feedback>;
}

/// A teacher that never says anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl TeachingSource for Silent {
    fn instruction(&mut self, _: StateId, _: Option<SignalId>) -> Option<SignalId> {
        None
    }

    fn feedback(&mut self, _: StateId, _: ActionId) -> Option<Feedback> {
        None
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("an action is awaiting its evaluation")]
    AwaitingLearn,
    #[error("no action to evaluate")]
    NothingToLearn,
    #[error("instruction already given for this step")]
    AlreadyTaught,
    #[error("signal {0} outside the alphabet")]
    UnknownSignal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionOptions {
    /// Learn from the domain reward (`RL` models).
    pub use_reward: bool,
    /// Episode length cap.
    pub max_steps: usize,
}

/// Per-episode counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EpisodeTally {
    pub steps: u32,
    pub feedback: u32,
    pub instructions: u32,
    /// Sorting only: whether the final placement was correct.
    pub success: Option<bool>,
}

/// One environment step as seen by the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Global step index, from 0.
    pub step: u64,
    /// Episode index, from 0.
    pub episode: usize,
    pub state: StateId,
    pub action: ActionId,
    pub source: DecisionSource,
    pub reward: Option<f64>,
    pub feedback: Option<Feedback>,
    pub signal: Option<SignalId>,
    pub td_error: Option<f64>,
    pub terminal: bool,
    /// Whether this step closed its episode (terminal state or step cap).
    pub episode_end: bool,
}

#[derive(Debug, Clone)]
struct Pending {
    record: StepRecord,
    next: StateId,
    truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Session<D: Domain, T> {
    domain: D,
    agent: Agent<T>,
    options: SessionOptions,
    state: D::State,
    rng: ChaCha8Rng,
    env_rng: ChaCha8Rng,
    step: u64,
    episode_steps: usize,
    tallies: Vec<EpisodeTally>,
    signal: Option<SignalId>,
    taught: bool,
    pending: Option<Pending>,
}

impl<D: Domain, T: Scalar> Session<D, T> {
    pub fn new(domain: D, agent: Agent<T>, options: SessionOptions, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(AGENT_STREAM);
        let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
        env_rng.set_stream(ENV_STREAM);
        let state = domain.reset(0, &mut env_rng);
        Self {
            domain,
            agent,
            options,
            state,
            rng,
            env_rng,
            step: 0,
            episode_steps: 0,
            tallies: vec![EpisodeTally::default()],
            signal: None,
            taught: false,
            pending: None,
        }
    }

    pub fn domain(&self) -> &D {
        &self.domain
    }

    pub fn agent(&self) -> &Agent<T> {
        &self.agent
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn state(&self) -> &D::State {
        &self.state
    }

    pub fn state_id(&self) -> StateId {
        self.domain.state_id(&self.state)
    }

    /// Current episode index.
    pub fn episode(&self) -> usize {
        self.tallies.len() - 1
    }

    /// Total environment steps so far.
    pub fn total_steps(&self) -> u64 {
        self.step
    }

    pub fn completed_episodes(&self) -> usize {
        self.tallies.len() - 1
    }

    /// Tallies of every finished episode.
    pub fn completed_tallies(&self) -> &[EpisodeTally] {
        &self.tallies[..self.tallies.len() - 1]
    }

    /// Tallies including the episode in progress.
    pub fn tallies(&self) -> &[EpisodeTally] {
        &self.tallies
    }

    /// The step awaiting [`Session::learn`], if any.
    pub fn pending(&self) -> Option<&StepRecord> {
        self.pending.as_ref().map(|p| &p.record)
    }

    /// Signal the contingency model shows for the current state.
    pub fn display(&self) -> Option<(SignalId, f64)> {
        self.agent.display(self.state_id())
    }

    /// Phase 1: instruction for the current state.
    pub fn teach(&mut self, signal: Option<SignalId>) -> Result<(), SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::AwaitingLearn);
        }
        if self.taught {
            return Err(SessionError::AlreadyTaught);
        }
        let Some(i) = signal else {
            return Ok(());
        };
        if i.0 >= self.agent.contingency().signals() {
            return Err(SessionError::UnknownSignal(i.0));
        }
        self.taught = true;
        self.signal = Some(i);
        self.agent.observe_signal(self.state_id(), i);
        self.current_tally().instructions += 1;
        Ok(())
    }

    /// Phase 2: decide and step the environment. Starts the next episode
    /// when this step ends the current one.
    pub fn act(&mut self) -> Result<&StepRecord, SessionError> {
        if self.pending.is_some() {
            return Err(SessionError::AwaitingLearn);
        }
        let s = self.state_id();
        let decision = self.agent.decide(s, &mut self.rng);
        let outcome = self.domain.step(&self.state, decision.action)?;
        let next = self.domain.state_id(&outcome.next);
        self.episode_steps += 1;
        let truncated = !outcome.terminal && self.episode_steps >= self.options.max_steps;
        let episode_end = outcome.terminal || truncated;
        let record = StepRecord {
            step: self.step,
            episode: self.episode(),
            state: s,
            action: decision.action,
            source: decision.source,
            reward: self.options.use_reward.then_some(outcome.reward),
            feedback: None,
            signal: self.signal.take(),
            td_error: None,
            terminal: outcome.terminal,
            episode_end,
        };
        self.step += 1;
        self.taught = false;
        let tally = self.current_tally();
        tally.steps += 1;
        if episode_end {
            tally.success = outcome.success;
            self.tallies.push(EpisodeTally::default());
            self.episode_steps = 0;
            self.state = self.domain.reset(self.episode(), &mut self.env_rng);
            self.agent.start_episode();
        } else {
            self.state = outcome.next;
        }
        self.pending = Some(Pending {
            record,
            next,
            truncated,
        });
        Ok(&self.pending.as_ref().unwrap().record)
    }

    /// Phase 3: learn from the last action's reward and `feedback`.
    pub fn learn(&mut self, feedback: Option<Feedback>) -> Result<StepRecord, SessionError> {
        let Pending {
            mut record,
            next,
            truncated,
        } = self.pending.take().ok_or(SessionError::NothingToLearn)?;
        record.feedback = feedback;
        let learned = self.agent.learn(&Transition {
            state: record.state,
            action: record.action,
            reward: record.reward.map(T::lit),
            next,
            terminal: record.terminal,
            feedback,
        });
        if truncated {
            self.agent.interrupt();
        }
        record.td_error = learned.td_error.map(|d| d.to_f64_lossy());
        if feedback.is_some() {
            self.tallies[record.episode].feedback += 1;
        }
        Ok(record)
    }

    /// One full teach, act, learn cycle against a simulated teacher.
    pub fn step<S: TeachingSource + ?Sized>(
        &mut self,
        teacher: &mut S,
    ) -> Result<StepRecord, SessionError> {
        let s = self.state_id();
        let display = self.display().map(|(i, _)| i);
        let signal = teacher.instruction(s, display);
        self.teach(signal)?;
        let a = self.act()?.action;
        let feedback = teacher.feedback(s, a);
        self.learn(feedback)
    }

    /// Steps until `episodes` episodes have finished.
    pub fn run_episodes<S: TeachingSource + ?Sized>(
        &mut self,
        teacher: &mut S,
        episodes: usize,
    ) -> Result<(), SessionError> {
        while self.completed_episodes() < episodes {
            self.step(teacher)?;
        }
        Ok(())
    }

    pub fn into_agent(self) -> Agent<T> {
        self.agent
    }

    fn current_tally(&mut self) -> &mut EpisodeTally {
        self.tallies.last_mut().expect("tallies never empty")
    }
}
