//! Benchmark MDPs. Both domains are deterministic; stepping is a pure
//! function of `(state, action)` so one domain value can be shared by many
//! concurrent sessions.

pub mod maze;
mod oracle;
pub mod sorting;

use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rl::{ActionId, StateId};

pub use maze::{MazeAction, MazeCell, MazeDomain, MazeMap, MazeState, MAZE_SIMPLE, MAZE_STD};
pub use oracle::{optimal_policy, OptimalPolicy, ORACLE_TOLERANCE};
pub use sorting::{
    Color, DescriptorMode, Hand, ObjectDescriptor, ObjectLocation, ObjectType, Size,
    SortingAction, SortingDomain, SortingState, SortingVerb, Zone, ROSTER,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("step requested on a terminal state")]
    TerminalState,
    #[error("action {0} out of range")]
    InvalidAction(usize),
    #[error("map: {0}")]
    Map(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
}

/// Result of one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome<S> {
    pub next: S,
    pub reward: f64,
    pub terminal: bool,
    /// Sorting only: whether a terminal placement was correct.
    pub success: Option<bool>,
}

/// A finite deterministic episodic MDP.
pub trait Domain: Send + Sync {
    type State: Clone + PartialEq + Debug + Send + Sync + Serialize;

    fn name(&self) -> &str;

    /// Width of every task-state table built for this domain.
    fn num_states(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn state_id(&self, s: &Self::State) -> StateId;

    /// Initial state of episode `episode` (0-based).
    fn reset<R: Rng + ?Sized>(&self, episode: usize, rng: &mut R) -> Self::State;

    fn step(&self, s: &Self::State, a: ActionId)
        -> Result<StepOutcome<Self::State>, DomainError>;

    fn is_terminal(&self, s: &Self::State) -> bool;

    /// Every non-terminal state, in ascending `StateId` order.
    fn decision_states(&self) -> Vec<Self::State>;

    fn action_name(&self, a: ActionId) -> &'static str;
}

/// Named domains available to the harness and the teaching service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    /// Object sorting with the full `(type, color, size)` descriptor.
    #[serde(rename = "sorting")]
    Sorting,
    /// Object sorting where the descriptor only carries the object type.
    #[serde(rename = "sorting-type")]
    SortingTypeOnly,
    #[serde(rename = "maze-std")]
    MazeStd,
    #[serde(rename = "maze-simple")]
    MazeSimple,
}

impl DomainKind {
    pub const ALL: [DomainKind; 4] = [
        DomainKind::Sorting,
        DomainKind::SortingTypeOnly,
        DomainKind::MazeStd,
        DomainKind::MazeSimple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Sorting => "sorting",
            DomainKind::SortingTypeOnly => "sorting-type",
            DomainKind::MazeStd => "maze-std",
            DomainKind::MazeSimple => "maze-simple",
        }
    }

    pub fn is_maze(self) -> bool {
        matches!(self, DomainKind::MazeStd | DomainKind::MazeSimple)
    }
}

impl std::str::FromStr for DomainKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DomainError::UnknownDomain(s.to_string()))
    }
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A constructed domain of either family.
#[derive(Debug, Clone)]
pub enum AnyDomain {
    Sorting(SortingDomain),
    Maze(MazeDomain),
}

impl AnyDomain {
    pub fn build(kind: DomainKind) -> Self {
        match kind {
            DomainKind::Sorting => AnyDomain::Sorting(SortingDomain::new(DescriptorMode::Full)),
            DomainKind::SortingTypeOnly => {
                AnyDomain::Sorting(SortingDomain::new(DescriptorMode::TypeOnly))
            }
            DomainKind::MazeStd => AnyDomain::Maze(MazeDomain::standard()),
            DomainKind::MazeSimple => AnyDomain::Maze(MazeDomain::simple()),
        }
    }
}
