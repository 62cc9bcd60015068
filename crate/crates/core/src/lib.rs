//! Interactive task learning shaped by a predefined reward, binary evaluative
//! feedback and unlabeled instruction signals whose meaning is grounded online.
//!
//! The crate is organised bottom-up:
//!
//! * [`rl`] holds the tabular primitives (softmax policies, actor-critic and
//!   Q-learning updates, ε-greedy selection, policy confidence).
//! * [`domains`] provides the object-sorting and maze-navigation MDPs plus a
//!   value-iteration oracle.
//! * [`agent`] wires the task model, contingency model, instruction model and
//!   shaping component into a per-step pipeline.
//! * [`teacher`] is the configurable simulated teacher.
//! * [`harness`] runs seeded batches and computes convergence and
//!   interaction-load statistics.
//!
//! The learning code is generic over a floating point [`Scalar`]; the aliases
//! at the crate root fix it to `f64`, which is what the harness uses.

pub mod agent;
pub mod domains;
pub mod harness;
pub mod rl;
pub mod scalar;
pub mod teacher;

pub use scalar::Scalar;

/// Action preferences over task states or signals, in double precision.
pub type PreferenceTable = rl::PreferenceTable<f64>;
/// State (or signal) values in double precision.
pub type ValueTable = rl::ValueTable<f64>;
/// Action values in double precision.
pub type QTable = rl::QTable<f64>;
/// Learner hyper-parameters in double precision.
pub type LearnerConfig = rl::LearnerConfig<f64>;
/// The TICS agent in double precision.
pub type Agent = agent::Agent<f64>;
/// Agent construction parameters in double precision.
pub type AgentConfig = agent::AgentConfig<f64>;
