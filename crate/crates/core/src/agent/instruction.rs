use serde::{Deserialize, Serialize};

use super::{AgentError, SignalId};
use crate::rl::{
    actor_update, critic_update, softmax, td_error, ActionId, LearnerConfig, PreferenceTable,
    QTable, ValueTable,
};
use crate::Scalar;

/// How the meaning of instruction signals is learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interpretation {
    /// Policy-based updating: every increment applied to `p(s, a)` is
    /// mirrored onto `p(i*(s), a)`.
    #[serde(rename = "PU")]
    PolicyUpdate,
    /// Reward-based updating with an actor-critic over the signal space.
    #[serde(rename = "RU")]
    RewardActor,
    /// Reward-based updating with myopic Q-learning over the signal space.
    #[serde(rename = "RU-q")]
    RewardQ,
}

/// Successor of a signal-space transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalSuccessor {
    Signal(SignalId),
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PendingTransition<T> {
    pub signal: SignalId,
    pub action: ActionId,
    pub reward: T,
}

/// The signal policy: preferences (PU, RU) or action values (RU-q) over
/// the instruction alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::de::DeserializeOwned"))]
pub struct InstructionModel<T> {
    mode: Interpretation,
    /// `p(i, a)` for PU and RU, `Q(i, a)` for RU-q.
    table: PreferenceTable<T>,
    /// `V(i)`, RU only.
    values: ValueTable<T>,
    #[serde(skip)]
    pub(crate) pending: Option<PendingTransition<T>>,
}

impl<T: Scalar> InstructionModel<T> {
    pub fn new(mode: Interpretation, signals: usize, actions: usize) -> Self {
        let value_len = if mode == Interpretation::RewardActor { signals } else { 0 };
        Self {
            mode,
            table: PreferenceTable::zeros(signals, actions),
            values: ValueTable::zeros(value_len),
            pending: None,
        }
    }

    pub fn mode(&self) -> Interpretation {
        self.mode
    }

    pub fn table(&self) -> &PreferenceTable<T> {
        &self.table
    }

    pub fn values(&self) -> &ValueTable<T> {
        &self.values
    }

    pub fn q_table(&self) -> &QTable<T> {
        &self.table
    }

    /// Signal policy `π(i, ·)`.
    pub fn signal_dist(&self, i: SignalId) -> Vec<T> {
        softmax(self.table.row(i.row()))
    }

    /// PU: `p(i, a) += Δ`.
    pub fn mirror(&mut self, i: SignalId, a: ActionId, delta: T) -> Result<(), AgentError> {
        if self.mode != Interpretation::PolicyUpdate {
            return Err(AgentError::WrongInterpretation {
                expected: Interpretation::PolicyUpdate,
                actual: self.mode,
            });
        }
        self.table.add(i.row(), a, delta);
        Ok(())
    }

    /// RU: actor-critic backup of `(i_prev, a_prev)` on the signal MDP.
    /// A missing predecessor (a gap in the signal sequence) means no update.
    pub fn update_ru_actor(
        &mut self,
        prev: Option<SignalId>,
        next: SignalSuccessor,
        action: ActionId,
        reward: T,
        cfg: &LearnerConfig<T>,
    ) -> Result<Option<T>, AgentError> {
        if self.mode != Interpretation::RewardActor {
            return Err(AgentError::WrongInterpretation {
                expected: Interpretation::RewardActor,
                actual: self.mode,
            });
        }
        let Some(prev) = prev else {
            return Ok(None);
        };
        let (v_next, terminal) = match next {
            SignalSuccessor::Signal(i) => (self.values.get(i.row()), false),
            SignalSuccessor::Terminal => (T::zero(), true),
        };
        let delta = td_error(reward, v_next, self.values.get(prev.row()), cfg.gamma, terminal);
        critic_update(&mut self.values, prev.row(), delta, cfg.alpha);
        actor_update(&mut self.table, prev.row(), action, delta, cfg.beta);
        Ok(Some(delta))
    }

    /// RU-q: `Q(i, a) += α (r − Q(i, a))`.
    pub fn update_ru_q(
        &mut self,
        i: SignalId,
        a: ActionId,
        reward: T,
        alpha: T,
    ) -> Result<(), AgentError> {
        if self.mode != Interpretation::RewardQ {
            return Err(AgentError::WrongInterpretation {
                expected: Interpretation::RewardQ,
                actual: self.mode,
            });
        }
        let q = self.table.get(i.row(), a);
        self.table.set(i.row(), a, q + alpha * (reward - q));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const I0: SignalId = SignalId(0);
    const I1: SignalId = SignalId(1);
    const A0: ActionId = ActionId(0);

    #[test]
    fn mirror_adds_increment() {
        let mut im = InstructionModel::<f64>::new(Interpretation::PolicyUpdate, 2, 3);
        im.mirror(I0, A0, 0.1).unwrap();
        assert_eq!(im.table().get(I0.row(), A0), 0.1);
        im.mirror(I0, A0, 0.0).unwrap();
        assert_eq!(im.table().get(I0.row(), A0), 0.1);
        // Increments from two states sharing the signal accumulate.
        im.mirror(I0, A0, 0.1).unwrap();
        assert!((im.table().get(I0.row(), A0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mirror_rejected_outside_pu() {
        let mut im = InstructionModel::<f64>::new(Interpretation::RewardActor, 2, 3);
        assert!(im.mirror(I0, A0, 0.1).is_err());
    }

    #[test]
    fn ru_actor_terminal_backup() {
        let cfg = LearnerConfig::<f64>::default();
        let mut im = InstructionModel::<f64>::new(Interpretation::RewardActor, 2, 3);
        let d = im
            .update_ru_actor(Some(I0), SignalSuccessor::Terminal, A0, 1.0, &cfg)
            .unwrap();
        assert_eq!(d, Some(1.0));
        assert!((im.table().get(I0.row(), A0) - 0.1).abs() < 1e-12);
        assert!((im.values().get(I0.row()) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ru_actor_bootstraps_on_next_signal() {
        let cfg = LearnerConfig::<f64>::default();
        let mut im = InstructionModel::<f64>::new(Interpretation::RewardActor, 2, 3);
        im.values.set(I1.row(), 1.0);
        let d = im
            .update_ru_actor(Some(I0), SignalSuccessor::Signal(I1), A0, -0.01, &cfg)
            .unwrap()
            .unwrap();
        assert!((d - 0.89).abs() < 1e-12);
    }

    #[test]
    fn ru_actor_gap_is_a_no_op() {
        let cfg = LearnerConfig::<f64>::default();
        let mut im = InstructionModel::<f64>::new(Interpretation::RewardActor, 2, 3);
        let before = im.clone();
        let d = im
            .update_ru_actor(None, SignalSuccessor::Signal(I1), A0, 1.0, &cfg)
            .unwrap();
        assert_eq!(d, None);
        assert_eq!(im, before);
    }

    #[test]
    fn ru_q_cases() {
        let mut im = InstructionModel::<f64>::new(Interpretation::RewardQ, 1, 2);
        im.update_ru_q(I0, A0, 1.0, 0.3).unwrap();
        assert!((im.q_table().get(I0.row(), A0) - 0.3).abs() < 1e-12);
        let mut last = 0.3;
        for _ in 0..50 {
            im.update_ru_q(I0, A0, 1.0, 0.3).unwrap();
            let q = im.q_table().get(I0.row(), A0);
            assert!(q > last && q <= 1.0);
            last = q;
        }
        assert!((1.0 - last).abs() < 1e-6);
        im.update_ru_q(I0, ActionId(1), -1.0, 0.3).unwrap();
        assert!((im.q_table().get(I0.row(), ActionId(1)) + 0.3).abs() < 1e-12);
    }
}
