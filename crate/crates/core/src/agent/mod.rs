//! The interactive agent: task model, contingency model, instruction model
//! and shaping component.
//!
//! One step of the pipeline is split in three calls so that a live teacher
//! can interleave inputs:
//!
//! 1. [`Agent::observe_signal`] records an instruction for the pre-action state,
//! 2. [`Agent::decide`] picks the action (arbitration or Q-pull, then ε-greedy),
//! 3. [`Agent::learn`] applies the reward and/or feedback of the transition and
//!    updates the instruction model.
//!
//! [`session::Session`] drives these calls against a domain.

mod contingency;
mod instruction;
pub mod session;
mod shaping;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contingency::{ContingencyMatrix, SignalId};
pub use instruction::{InstructionModel, Interpretation, SignalSuccessor};
pub use shaping::{arbitrate, qpull_shape, DecisionSource, ShapingConfig, ShapingStrategy};

use crate::rl::{
    actor_update, critic_update, feedback_update, q_update, select_action, softmax, td_error,
    ActionId, Epsilon, Feedback, LearnerConfig, PreferenceTable, QTable, RlError, StateId,
    ValueTable,
};
use crate::Scalar;
use instruction::PendingTransition;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("operation requires {expected:?} interpretation, agent uses {actual:?}")]
    WrongInterpretation {
        expected: Interpretation,
        actual: Interpretation,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Learner(#[from] RlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskVariant {
    ActorCritic,
    QLearner,
}

/// Task-state learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TaskModel<T> {
    ActorCritic {
        prefs: PreferenceTable<T>,
        values: ValueTable<T>,
    },
    QLearner {
        q: QTable<T>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct AgentConfig<T> {
    pub learner: LearnerConfig<T>,
    pub task: TaskVariant,
    /// `None` disables the contingency and instruction models' influence.
    pub interpretation: Option<Interpretation>,
    pub shaping: ShapingConfig<T>,
}

impl<T: Scalar> AgentConfig<T> {
    pub fn actor_critic(interpretation: Option<Interpretation>) -> Self {
        Self {
            learner: LearnerConfig::default(),
            task: TaskVariant::ActorCritic,
            interpretation,
            shaping: ShapingConfig::arbitration(),
        }
    }

    /// Myopic Q-learner with RU-q interpretation and Q-pull shaping when
    /// instructions are used.
    pub fn q_learner(with_instructions: bool) -> Self {
        let learner = LearnerConfig::q_variant();
        Self {
            learner,
            task: TaskVariant::QLearner,
            interpretation: with_instructions.then_some(Interpretation::RewardQ),
            shaping: ShapingConfig::qpull(learner.alpha),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        self.learner.validate()?;
        let rate = self.shaping.qpull_rate;
        match (self.task, self.shaping.strategy) {
            (TaskVariant::ActorCritic, ShapingStrategy::ConfidenceArbitration) => {}
            (TaskVariant::QLearner, ShapingStrategy::QPull) => {
                if !(rate > T::zero() && rate <= T::one()) {
                    return Err(AgentError::Config(format!(
                        "qpull_rate must lie in (0, 1], got {rate}"
                    )));
                }
            }
            (task, strategy) => {
                return Err(AgentError::Config(format!(
                    "{strategy:?} shaping cannot drive a {task:?} task model"
                )))
            }
        }
        match (self.task, self.interpretation) {
            (_, None)
            | (TaskVariant::ActorCritic, Some(Interpretation::PolicyUpdate))
            | (TaskVariant::ActorCritic, Some(Interpretation::RewardActor))
            | (TaskVariant::QLearner, Some(Interpretation::RewardQ)) => Ok(()),
            (task, Some(i)) => Err(AgentError::Config(format!(
                "{i:?} interpretation is not available with a {task:?} task model"
            ))),
        }
    }
}

/// A chosen action and where it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub action: ActionId,
    pub source: DecisionSource,
}

/// One transition handed to [`Agent::learn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub state: StateId,
    pub action: ActionId,
    /// Environment reward, present only when the reward source is enabled.
    pub reward: Option<T>,
    pub next: StateId,
    pub terminal: bool,
    pub feedback: Option<Feedback>,
}

/// What [`Agent::learn`] changed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Learned<T> {
    pub td_error: Option<T>,
    /// Total increment applied to the task policy parameter of the
    /// transition (actor-critic only).
    pub increment: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct Agent<T> {
    config: AgentConfig<T>,
    actions: usize,
    task: TaskModel<T>,
    contingency: ContingencyMatrix,
    instruction: Option<InstructionModel<T>>,
    #[serde(skip, default = "none_epsilon")]
    epsilon: Option<Epsilon<T>>,
}

fn none_epsilon<T>() -> Option<Epsilon<T>> {
    None
}

impl<T: Scalar> Agent<T> {
    pub fn new(
        config: AgentConfig<T>,
        states: usize,
        actions: usize,
        signals: usize,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        if actions < 2 {
            return Err(RlError::TooFewActions(actions).into());
        }
        let task = match config.task {
            TaskVariant::ActorCritic => TaskModel::ActorCritic {
                prefs: PreferenceTable::zeros(states, actions),
                values: ValueTable::zeros(states),
            },
            TaskVariant::QLearner => TaskModel::QLearner {
                q: QTable::zeros(states, actions),
            },
        };
        let instruction = config
            .interpretation
            .map(|mode| InstructionModel::new(mode, signals, actions));
        // Q-learner acts greedily: the teacher guides exploration.
        let epsilon = match config.task {
            TaskVariant::ActorCritic => {
                Epsilon::new(config.learner.epsilon0, config.learner.epsilon_decay)
            }
            TaskVariant::QLearner => Epsilon::new(T::zero(), T::zero()),
        };
        Ok(Self {
            config,
            actions,
            task,
            contingency: ContingencyMatrix::new(states, signals),
            instruction,
            epsilon: Some(epsilon),
        })
    }

    pub fn config(&self) -> &AgentConfig<T> {
        &self.config
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn task_model(&self) -> &TaskModel<T> {
        &self.task
    }

    pub fn contingency(&self) -> &ContingencyMatrix {
        &self.contingency
    }

    pub fn instruction_model(&self) -> Option<&InstructionModel<T>> {
        self.instruction.as_ref()
    }

    /// Current exploration rate; the initial one before the first decision.
    pub fn epsilon(&self) -> T {
        self.epsilon
            .map_or(self.config.learner.epsilon0, |e| e.value())
    }

    /// Restores ε when the per-episode schedule is configured.
    pub fn start_episode(&mut self) {
        if self.config.learner.epsilon_reset_per_episode {
            if let Some(e) = self.epsilon.as_mut() {
                e.reset();
            }
        }
    }

    /// Drops a deferred signal-space backup, e.g. when an episode is cut at
    /// the step cap and the successor state will never be decided on.
    pub fn interrupt(&mut self) {
        if let Some(im) = self.instruction.as_mut() {
            im.pending = None;
        }
    }

    /// Records an instruction signal perceived in task state `s`. Signals
    /// are ignored by agents without an instruction model.
    pub fn observe_signal(&mut self, s: StateId, i: SignalId) {
        if self.instruction.is_some() && i.0 < self.contingency.signals() {
            self.contingency.observe(s, i);
        }
    }

    /// The contingency model's current signal for `s` and its probability,
    /// as shown to a teacher.
    pub fn display(&self, s: StateId) -> Option<(SignalId, f64)> {
        self.instruction.as_ref()?;
        self.contingency.best_signal(s)
    }

    /// Task policy `π(s, ·)`: softmax over preferences or Q-values.
    pub fn task_dist(&self, s: StateId) -> Vec<T> {
        match &self.task {
            TaskModel::ActorCritic { prefs, .. } => softmax(prefs.row(s)),
            TaskModel::QLearner { q } => softmax(q.row(s)),
        }
    }

    /// Signal policy of the signal associated with `s`, if any.
    pub fn signal_dist(&self, s: StateId) -> Option<Vec<T>> {
        let (i, _) = self.display(s)?;
        self.instruction.as_ref().map(|im| im.signal_dist(i))
    }

    /// Chooses the action for state `s` and decays ε.
    pub fn decide<R: Rng + ?Sized>(&mut self, s: StateId, rng: &mut R) -> Decision {
        self.resolve_pending(s);
        let signal = self.display(s).map(|(i, _)| i);
        let (source, dist) = match self.config.shaping.strategy {
            ShapingStrategy::QPull => {
                if let (Some(i), Some(im), TaskModel::QLearner { q }) =
                    (signal, self.instruction.as_ref(), &mut self.task)
                {
                    qpull_shape(q, s, im.q_table(), i, self.config.shaping.qpull_rate);
                }
                (DecisionSource::TaskModel, self.task_dist(s))
            }
            ShapingStrategy::ConfidenceArbitration => {
                arbitrate(self.task_dist(s), self.signal_dist(s))
            }
        };
        let epsilon = self.epsilon.get_or_insert_with(|| {
            Epsilon::new(
                self.config.learner.epsilon0,
                self.config.learner.epsilon_decay,
            )
        });
        let selection = select_action(&dist, epsilon.value(), rng);
        epsilon.decay();
        Decision {
            action: selection.action,
            source: if selection.explored {
                DecisionSource::Explore
            } else {
                source
            },
        }
    }

    /// Applies one transition's evaluation to the task and instruction
    /// models.
    pub fn learn(&mut self, t: &Transition<T>) -> Learned<T> {
        let cfg = self.config.learner;
        let signal = self.display(t.state).map(|(i, _)| i);
        let mirror = |im: &mut Option<InstructionModel<T>>, delta: T| {
            if let (Some(im), Some(i)) = (im.as_mut(), signal) {
                if im.mode() == Interpretation::PolicyUpdate {
                    // Mode checked above.
                    let _ = im.mirror(i, t.action, delta);
                }
            }
        };
        let mut learned = Learned {
            td_error: None,
            increment: T::zero(),
        };
        match &mut self.task {
            TaskModel::ActorCritic { prefs, values } => {
                if let Some(r) = t.reward {
                    let v_next = values.get(t.next);
                    let delta = td_error(r, v_next, values.get(t.state), cfg.gamma, t.terminal);
                    critic_update(values, t.state, delta, cfg.alpha);
                    let inc = actor_update(prefs, t.state, t.action, delta, cfg.beta);
                    mirror(&mut self.instruction, inc);
                    learned.td_error = Some(delta);
                    learned.increment = learned.increment + inc;
                }
                if let Some(f) = t.feedback {
                    let inc = feedback_update(prefs, t.state, t.action, f, cfg.beta);
                    mirror(&mut self.instruction, inc);
                    learned.increment = learned.increment + inc;
                }
            }
            TaskModel::QLearner { q } => {
                if let Some(r) = evaluation(t) {
                    let td = q_update(q, t.state, t.action, r, t.next, cfg.gamma, cfg.alpha, t.terminal);
                    learned.td_error = Some(td);
                }
            }
        }

        let Some(im) = self.instruction.as_mut() else {
            return learned;
        };
        match im.mode() {
            Interpretation::PolicyUpdate => {}
            Interpretation::RewardQ => {
                if let (Some(i), Some(r)) = (signal, evaluation(t)) {
                    let _ = im.update_ru_q(i, t.action, r, cfg.alpha);
                }
            }
            Interpretation::RewardActor => {
                im.pending = None;
                if let (Some(i), Some(r)) = (signal, evaluation(t)) {
                    if t.terminal {
                        let _ = im.update_ru_actor(
                            Some(i),
                            SignalSuccessor::Terminal,
                            t.action,
                            r,
                            &cfg,
                        );
                    } else {
                        im.pending = Some(PendingTransition {
                            signal: i,
                            action: t.action,
                            reward: r,
                        });
                    }
                }
            }
        }
        learned
    }

    /// Completes a deferred signal-space backup once the successor state's
    /// signal is known.
    fn resolve_pending(&mut self, s: StateId) {
        let next = self.contingency.best_signal(s).map(|(i, _)| i);
        let cfg = self.config.learner;
        let Some(im) = self.instruction.as_mut() else {
            return;
        };
        if let Some(p) = im.pending.take() {
            if let Some(next) = next {
                let _ = im.update_ru_actor(
                    Some(p.signal),
                    SignalSuccessor::Signal(next),
                    p.action,
                    p.reward,
                    &cfg,
                );
            }
        }
    }
}

/// Scalar evaluation of a transition for reward-based learners: the
/// environment reward plus feedback converted to ±1.
fn evaluation<T: Scalar>(t: &Transition<T>) -> Option<T> {
    match (t.reward, t.feedback) {
        (None, None) => None,
        (r, f) => Some(r.unwrap_or_else(T::zero) + f.map(|f| f.value()).unwrap_or_else(T::zero)),
    }
}
