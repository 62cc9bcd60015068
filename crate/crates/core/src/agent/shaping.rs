use serde::{Deserialize, Serialize};

use super::SignalId;
use crate::rl::{confidence, QTable, StateId};
use crate::Scalar;

/// Which model a decision came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionSource {
    #[serde(rename = "TM")]
    TaskModel,
    #[serde(rename = "IM")]
    InstructionModel,
    #[serde(rename = "explore")]
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapingStrategy {
    /// Follow whichever of the task and signal policies is more confident.
    ConfidenceArbitration,
    /// Pull task Q-values toward the signal Q-values, then act greedily.
    QPull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig<T> {
    pub strategy: ShapingStrategy,
    /// Pull rate in `(0, 1]`, QPull only.
    pub qpull_rate: T,
}

impl<T: Scalar> ShapingConfig<T> {
    pub fn arbitration() -> Self {
        Self {
            strategy: ShapingStrategy::ConfidenceArbitration,
            qpull_rate: T::lit(0.3),
        }
    }

    pub fn qpull(rate: T) -> Self {
        Self {
            strategy: ShapingStrategy::QPull,
            qpull_rate: rate,
        }
    }
}

/// Picks the instruction model's policy only when it is strictly more
/// confident than the task policy.
pub fn arbitrate<T: Scalar>(task: Vec<T>, signal: Option<Vec<T>>) -> (DecisionSource, Vec<T>) {
    let Some(signal) = signal else {
        return (DecisionSource::TaskModel, task);
    };
    // Both distributions range over the same action set; confidence only
    // fails for fewer than two actions, in which case there is nothing to
    // arbitrate.
    let (Ok(k_task), Ok(k_signal)) = (confidence(&task), confidence(&signal)) else {
        return (DecisionSource::TaskModel, task);
    };
    if k_task < k_signal {
        (DecisionSource::InstructionModel, signal)
    } else {
        (DecisionSource::TaskModel, task)
    }
}

/// `Q_T(s, a) += rate · (Q_I(i, a) − Q_T(s, a))` for every action.
pub fn qpull_shape<T: Scalar>(
    q_task: &mut QTable<T>,
    s: StateId,
    q_signal: &QTable<T>,
    i: SignalId,
    rate: T,
) {
    let target = q_signal.row(i.row());
    for (q, &t) in q_task.row_mut(s).iter_mut().zip(target) {
        *q = *q + rate * (t - *q);
    }
}
