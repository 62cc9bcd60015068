//! Wire types. Every payload is JSON; field names are the public contract.

use serde::{Deserialize, Serialize};

use tics_core::agent::session::StepRecord;
use tics_core::agent::{DecisionSource, TaskVariant};
use tics_core::domains::{DomainKind, ObjectDescriptor, ObjectLocation, Zone};
use tics_core::harness::{ExperimentConfig, ModelSpec};
use tics_core::rl::Feedback;
use tics_core::LearnerConfig;

/// Largest signal alphabet a session accepts.
pub const MAX_SIGNALS: usize = 35;

fn default_episodes() -> usize {
    50
}

fn default_max_steps() -> usize {
    1000
}

fn default_variant() -> TaskVariant {
    TaskVariant::ActorCritic
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub domain: DomainKind,
    pub model: ModelSpec,
    #[serde(default = "default_variant")]
    pub tm_variant: TaskVariant,
    /// Labels of the instruction signals, indexed from 0.
    pub signals: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Episode budget; the session finishes after this many episodes.
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub learner: Option<LearnerConfig>,
    #[serde(default)]
    pub qpull_rate: Option<f64>,
    /// Auto-run waits for a teaching submission before every step.
    #[serde(default)]
    pub blocking: bool,
}

impl CreateSession {
    pub fn new(domain: DomainKind, model: ModelSpec, signals: Vec<String>) -> Self {
        Self {
            domain,
            model,
            tm_variant: TaskVariant::ActorCritic,
            signals,
            seed: 0,
            episodes: default_episodes(),
            max_steps: default_max_steps(),
            learner: None,
            qpull_rate: None,
            blocking: false,
        }
    }

    /// The equivalent batch configuration, used to build the agent.
    pub fn experiment(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.domain, self.model);
        cfg.tm_variant = self.tm_variant;
        cfg.sessions = 1;
        cfg.episodes = self.episodes;
        cfg.max_steps = self.max_steps;
        cfg.learner = self.learner;
        cfg.qpull_rate = self.qpull_rate;
        cfg.base_seed = self.seed;
        cfg
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let n = self.signals.len();
        if n == 0 || n > MAX_SIGNALS {
            return Err(FieldError::new(
                "signals",
                format!("expected 1 to {MAX_SIGNALS} labels, got {n}"),
            ));
        }
        if let Some(i) = self.signals.iter().position(|l| l.trim().is_empty()) {
            return Err(FieldError::new("signals", format!("label {i} is empty")));
        }
        if self.episodes == 0 {
            return Err(FieldError::new("episodes", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(FieldError::new("max_steps", "must be positive"));
        }
        self.experiment()
            .agent_config()
            .validate()
            .map_err(|e| FieldError::new("model", e.to_string()))
    }
}

/// A rejected field and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Body of `POST /sessions/{id}/teaching`. Feedback is about the last
/// performed action, the instruction about the current state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teaching {
    #[serde(default)]
    pub feedback: Option<Feedback>,
    #[serde(default)]
    pub instruction: Option<usize>,
}

impl Teaching {
    pub fn is_empty(&self) -> bool {
        self.feedback.is_none() && self.instruction.is_none()
    }
}

/// How the session advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// One step per `POST /sessions/{id}/step`.
    Manual,
    /// One step every `interval_ms`.
    Auto { interval_ms: u64 },
    /// Auto-run suspended; explicit steps still work.
    Paused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    AwaitingInput,
    Stepping,
    Paused,
    Finished,
}

/// The signal the contingency model shows for the current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmDisplay {
    pub signal: usize,
    pub label: String,
    pub probability: f64,
}

/// Domain-specific view of the current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenderedState {
    Maze {
        width: usize,
        height: usize,
        /// Map rows using `#` for walls, `.` for free cells and `G` for the goal.
        rows: Vec<String>,
        agent: [usize; 2],
        goal: [usize; 2],
    },
    Sorting {
        left_hand: Zone,
        right_hand: Zone,
        object: ObjectLocation,
        descriptor: ObjectDescriptor,
    },
}

/// Everything a teaching console shows, taken between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub domain: DomainKind,
    pub model: ModelSpec,
    pub status: Status,
    pub mode: Mode,
    pub state: RenderedState,
    pub cm_display: Option<CmDisplay>,
    /// Current episode, from 0.
    pub episode: usize,
    /// Steps taken so far.
    pub step: u64,
    pub last_action: Option<String>,
    pub last_source: Option<DecisionSource>,
    pub epsilon: f64,
    /// Step count of every finished episode.
    pub steps_per_episode: Vec<u32>,
    pub episode_budget: usize,
    pub actions: Vec<String>,
    pub signals: Vec<String>,
    /// Teaching waiting for the next step.
    pub queued: Option<Teaching>,
}

/// One learned step of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    #[serde(flatten)]
    pub record: StepRecord,
    /// The submission carrying this step's feedback also carried an
    /// instruction for the following state.
    pub combined_submission: bool,
}

/// Body of `GET /sessions/{id}/log`: enough to replay the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub id: String,
    pub config: CreateSession,
    pub entries: Vec<LogEntry>,
}

/// Error body of every rejected request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
    /// The same request may succeed after the next step.
    #[serde(default)]
    pub retry: bool,
}
