//! Tabular learning primitives shared by the task model and the instruction
//! model.
//!
//! Rows of every table are indexed either by task states or by instruction
//! signals; a single table never mixes the two index spaces.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Dense index of a task state (or of a signal, when a table is built over the
/// instruction alphabet).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

/// Dense index into a domain's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("confidence needs at least two actions, got {0}")]
    TooFewActions(usize),
    #[error("invalid learner parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Binary evaluative feedback about the last performed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Feedback {
    Positive,
    Negative,
}

impl Feedback {
    pub fn sign(self) -> i8 {
        match self {
            Feedback::Positive => 1,
            Feedback::Negative => -1,
        }
    }

    pub fn value<T: Scalar>(self) -> T {
        match self {
            Feedback::Positive => T::one(),
            Feedback::Negative => -T::one(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Feedback::Positive => Feedback::Negative,
            Feedback::Negative => Feedback::Positive,
        }
    }
}

impl From<Feedback> for i8 {
    fn from(f: Feedback) -> i8 {
        f.sign()
    }
}

impl TryFrom<i8> for Feedback {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Feedback::Positive),
            -1 => Ok(Feedback::Negative),
            other => Err(format!("feedback must be +1 or -1, got {other}")),
        }
    }
}

/// Row-major `[row × action]` table. Used for actor preferences and for
/// action values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTable<T> {
    rows: usize,
    actions: usize,
    data: Vec<T>,
}

/// Actor preferences `p(x, a)`.
pub type PreferenceTable<T> = ActionTable<T>;
/// Action values `Q(x, a)`.
pub type QTable<T> = ActionTable<T>;

impl<T: Scalar> ActionTable<T> {
    /// All entries start at zero.
    pub fn zeros(rows: usize, actions: usize) -> Self {
        Self {
            rows,
            actions,
            data: vec![T::zero(); rows * actions],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, x: StateId) -> &[T] {
        let start = x.0 * self.actions;
        &self.data[start..start + self.actions]
    }

    pub fn row_mut(&mut self, x: StateId) -> &mut [T] {
        let start = x.0 * self.actions;
        &mut self.data[start..start + self.actions]
    }

    pub fn get(&self, x: StateId, a: ActionId) -> T {
        self.row(x)[a.0]
    }

    pub fn set(&mut self, x: StateId, a: ActionId, v: T) {
        self.row_mut(x)[a.0] = v;
    }

    pub fn add(&mut self, x: StateId, a: ActionId, delta: T) {
        self.row_mut(x)[a.0] = self.row(x)[a.0] + delta;
    }

    pub fn max_in_row(&self, x: StateId) -> T {
        self.row(x)
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// State (or signal) values `V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable<T> {
    v: Vec<T>,
}

impl<T: Scalar> ValueTable<T> {
    pub fn zeros(len: usize) -> Self {
        Self {
            v: vec![T::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn get(&self, x: StateId) -> T {
        self.v[x.0]
    }

    pub fn set(&mut self, x: StateId, value: T) {
        self.v[x.0] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.v
    }
}

/// Discount, learning rates and the ε schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig<T> {
    pub gamma: T,
    pub alpha: T,
    pub beta: T,
    pub epsilon0: T,
    pub epsilon_decay: T,
    /// Restore ε to `epsilon0` at the start of every episode instead of
    /// decaying it once over the whole session.
    pub epsilon_reset_per_episode: bool,
}

impl<T: Scalar> Default for LearnerConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.9),
            alpha: T::lit(0.1),
            beta: T::lit(0.1),
            epsilon0: T::lit(0.1),
            epsilon_decay: T::lit(0.001),
            epsilon_reset_per_episode: false,
        }
    }
}

impl<T: Scalar> LearnerConfig<T> {
    /// Myopic Q-learning preset: no discounting, faster learning rate, no
    /// exploration.
    pub fn q_variant() -> Self {
        Self {
            gamma: T::zero(),
            alpha: T::lit(0.3),
            epsilon0: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let unit = |name, v: T| {
            if v.is_finite() && v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(RlError::InvalidParameter {
                    name,
                    value: v.to_f64_lossy(),
                })
            }
        };
        let positive = |name, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(RlError::InvalidParameter {
                    name,
                    value: v.to_f64_lossy(),
                })
            }
        };
        unit("gamma", self.gamma)?;
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        unit("epsilon0", self.epsilon0)?;
        if !(self.epsilon_decay.is_finite() && self.epsilon_decay >= T::zero()) {
            return Err(RlError::InvalidParameter {
                name: "epsilon_decay",
                value: self.epsilon_decay.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// Softmax over a preference row, `e^{p(x,a)} / Σ_b e^{p(x,b)}`.
///
/// The row maximum is subtracted before exponentiating so large preferences
/// cannot overflow; the result is unchanged.
pub fn softmax<T: Scalar>(prefs: &[T]) -> Vec<T> {
    let max = prefs.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = prefs.iter().map(|&p| (p - max).exp()).collect();
    let total = exps.iter().copied().fold(T::zero(), |acc, e| acc + e);
    exps.into_iter().map(|e| e / total).collect()
}

/// Policy `π(x, ·)` of row `x`.
pub fn softmax_dist<T: Scalar>(prefs: &PreferenceTable<T>, x: StateId) -> Vec<T> {
    softmax(prefs.row(x))
}

/// `δ = r + γ·V(s') − V(s)`, with `V(s') = 0` on terminal transitions.
pub fn td_error<T: Scalar>(reward: T, v_next: T, v_cur: T, gamma: T, terminal: bool) -> T {
    let bootstrap = if terminal { T::zero() } else { gamma * v_next };
    reward + bootstrap - v_cur
}

/// Critic step `V(s) += α·δ`.
pub fn critic_update<T: Scalar>(values: &mut ValueTable<T>, s: StateId, td: T, alpha: T) {
    let v = values.get(s);
    values.set(s, v + alpha * td);
}

/// Actor step `p(s,a) += β·δ`; returns the applied increment.
pub fn actor_update<T: Scalar>(
    prefs: &mut PreferenceTable<T>,
    s: StateId,
    a: ActionId,
    td: T,
    beta: T,
) -> T {
    let delta = beta * td;
    prefs.add(s, a, delta);
    delta
}

/// Policy shaping with feedback, `p(s,a) += β·f`; returns the applied
/// increment. Values are never touched.
pub fn feedback_update<T: Scalar>(
    prefs: &mut PreferenceTable<T>,
    s: StateId,
    a: ActionId,
    feedback: Feedback,
    beta: T,
) -> T {
    let delta = beta * feedback.value::<T>();
    prefs.add(s, a, delta);
    delta
}

/// One Q-learning backup. Returns the TD error that was applied.
#[allow(clippy::too_many_arguments)]
pub fn q_update<T: Scalar>(
    q: &mut QTable<T>,
    s: StateId,
    a: ActionId,
    reward: T,
    s_next: StateId,
    gamma: T,
    alpha: T,
    terminal: bool,
) -> T {
    let bootstrap = if terminal || gamma == T::zero() {
        T::zero()
    } else {
        gamma * q.max_in_row(s_next)
    };
    let td = reward + bootstrap - q.get(s, a);
    q.add(s, a, alpha * td);
    td
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> ActionId {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    ActionId(best)
}

/// Outcome of ε-greedy selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub action: ActionId,
    pub explored: bool,
}

/// ε-greedy: with probability ε a uniformly random action, otherwise the
/// argmax of `dist` (lowest id on ties). No randomness is consumed when
/// `epsilon` is zero.
pub fn select_action<T: Scalar, R: Rng + ?Sized>(dist: &[T], epsilon: T, rng: &mut R) -> Selection {
    if epsilon > T::zero() && rng.gen::<f64>() < epsilon.to_f64_lossy() {
        return Selection {
            action: ActionId(rng.gen_range(0..dist.len())),
            explored: true,
        };
    }
    Selection {
        action: argmax(dist),
        explored: false,
    }
}

/// Gap between the largest and the second largest probability of a policy
/// row, in `[0, 1]`.
pub fn confidence<T: Scalar>(dist: &[T]) -> Result<T, RlError> {
    if dist.len() < 2 {
        return Err(RlError::TooFewActions(dist.len()));
    }
    let (mut first, mut second) = (T::neg_infinity(), T::neg_infinity());
    for &p in dist {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    Ok((first - second).max(T::zero()).min(T::one()))
}

/// Linearly decaying exploration rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon<T> {
    initial: T,
    decay: T,
    current: T,
}

impl<T: Scalar> Epsilon<T> {
    pub fn new(initial: T, decay: T) -> Self {
        Self {
            initial,
            decay,
            current: initial,
        }
    }

    pub fn value(&self) -> T {
        self.current
    }

    /// `ε ← max(0, ε − δ_ε)`.
    pub fn decay(&mut self) {
        self.current = (self.current - self.decay).max(T::zero());
    }

    pub fn reset(&mut self) {
        self.current = self.initial;
    }
}
