//! Seeded experiment batches, convergence statistics and sweeps.

mod output;
mod stats;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use output::{write_batch, write_sessions_csv, write_sweep, OutputError};
pub use stats::{
    convergence_episode, convergence_point, interaction_load, percentile, Criterion,
    InteractionLoad, StatsError,
};

use crate::agent::session::{EpisodeTally, Session, SessionError, SessionOptions};
use crate::agent::{Agent, AgentConfig, AgentError, Interpretation, ShapingConfig, TaskVariant};
use crate::domains::{AnyDomain, Domain, DomainKind};
use crate::rl::{ActionId, LearnerConfig};
use crate::teacher::{build_teacher, preferred_policy, Channels, TeacherConfig, TeacherError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid model `{0}`: use `+`-joined RL, FB and at most one of PU, RU, RU-q")]
    Model(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Teacher(#[from] TeacherError),
    #[error("session {session}: {source}")]
    Session {
        session: usize,
        source: SessionError,
    },
    #[error("unknown sweep axis `{0}`")]
    Axis(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Evaluation sources and interpretation method, written like `FB+PU` or
/// `RL+FB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ModelSpec {
    pub reward: bool,
    pub feedback: bool,
    pub interpretation: Option<Interpretation>,
}

impl ModelSpec {
    pub const fn new(reward: bool, feedback: bool, interpretation: Option<Interpretation>) -> Self {
        Self {
            reward,
            feedback,
            interpretation,
        }
    }

    /// The same model without instructions.
    pub fn without_instructions(self) -> Self {
        Self {
            interpretation: None,
            ..self
        }
    }
}

impl FromStr for ModelSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Model(s.to_string());
        let mut spec = ModelSpec::new(false, false, None);
        for token in s.split('+').map(str::trim) {
            let slot = match token {
                "RL" => &mut spec.reward,
                "FB" => &mut spec.feedback,
                "PU" | "RU" | "RU-q" => {
                    if spec.interpretation.is_some() {
                        return Err(bad());
                    }
                    spec.interpretation = Some(match token {
                        "PU" => Interpretation::PolicyUpdate,
                        "RU" => Interpretation::RewardActor,
                        _ => Interpretation::RewardQ,
                    });
                    continue;
                }
                _ => return Err(bad()),
            };
            if *slot {
                return Err(bad());
            }
            *slot = true;
        }
        if !spec.reward && !spec.feedback {
            return Err(bad());
        }
        Ok(spec)
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.to_string()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.reward {
            parts.push("RL");
        }
        if self.feedback {
            parts.push("FB");
        }
        match self.interpretation {
            Some(Interpretation::PolicyUpdate) => parts.push("PU"),
            Some(Interpretation::RewardActor) => parts.push("RU"),
            Some(Interpretation::RewardQ) => parts.push("RU-q"),
            None => {}
        }
        f.write_str(&parts.join("+"))
    }
}

fn default_count() -> usize {
    1000
}

fn default_variant() -> TaskVariant {
    TaskVariant::ActorCritic
}

/// One batch of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub model: ModelSpec,
    #[serde(default = "default_variant")]
    pub tm_variant: TaskVariant,
    #[serde(default = "default_count")]
    pub sessions: usize,
    #[serde(default = "default_count")]
    pub episodes: usize,
    #[serde(default = "default_count")]
    pub max_steps: usize,
    /// Defaults to the task variant's preset.
    #[serde(default)]
    pub learner: Option<LearnerConfig<f64>>,
    #[serde(default)]
    pub teacher: TeacherConfig,
    #[serde(default)]
    pub base_seed: u64,
    /// Defaults to the domain's criterion.
    #[serde(default)]
    pub criterion: Option<Criterion>,
    /// Q-pull rate of the Q-learner; defaults to its learning rate.
    #[serde(default)]
    pub qpull_rate: Option<f64>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(domain: DomainKind, model: ModelSpec) -> Self {
        Self {
            domain,
            model,
            tm_variant: TaskVariant::ActorCritic,
            sessions: 1000,
            episodes: 1000,
            max_steps: 1000,
            learner: None,
            teacher: TeacherConfig::default(),
            base_seed: 0,
            criterion: None,
            qpull_rate: None,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
            .unwrap_or_else(|| Criterion::for_domain(self.domain))
    }

    pub fn learner(&self) -> LearnerConfig<f64> {
        self.learner.unwrap_or_else(|| match self.tm_variant {
            TaskVariant::ActorCritic => LearnerConfig::default(),
            TaskVariant::QLearner => LearnerConfig::q_variant(),
        })
    }

    pub fn agent_config(&self) -> AgentConfig<f64> {
        let learner = self.learner();
        let shaping = match self.tm_variant {
            TaskVariant::ActorCritic => ShapingConfig::arbitration(),
            TaskVariant::QLearner => ShapingConfig::qpull(self.qpull_rate.unwrap_or(learner.alpha)),
        };
        AgentConfig {
            learner,
            task: self.tm_variant,
            interpretation: self.model.interpretation,
            shaping,
        }
    }

    pub fn channels(&self) -> Channels {
        Channels {
            feedback: self.model.feedback,
            instructions: self.model.interpretation.is_some(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sessions == 0 || self.episodes == 0 || self.max_steps == 0 {
            return Err(HarnessError::Config(
                "sessions, episodes and max_steps must be positive".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Config("workers must be positive".into()));
        }
        self.agent_config().validate()?;
        self.teacher.validate()?;
        Ok(())
    }
}

/// Everything recorded about one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub session: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeTally>,
    pub converged_episode: Option<usize>,
    pub converged_at: Option<u64>,
    pub load: InteractionLoad,
}

impl SessionResult {
    pub fn from_tallies(session: usize, seed: u64, episodes: Vec<EpisodeTally>, criterion: Criterion) -> Self {
        let steps: Vec<u32> = episodes.iter().map(|t| t.steps).collect();
        let converged_episode = convergence_episode(&steps, criterion);
        let converged_at = convergence_point(&steps, criterion);
        let load = interaction_load(&episodes, converged_episode);
        Self {
            session,
            seed,
            episodes,
            converged_episode,
            converged_at,
            load,
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.episodes.iter().map(|t| u64::from(t.steps)).sum()
    }

    pub fn row(&self) -> SessionRow {
        SessionRow {
            session: self.session,
            converged: self.converged_at.is_some(),
            steps_to_convergence: self.converged_at,
            feedback_count: self.load.feedback,
            instruction_count: self.load.instructions,
            total_signals: self.load.total,
        }
    }
}

/// One line of `sessions.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRow {
    pub session: usize,
    pub converged: bool,
    pub steps_to_convergence: Option<u64>,
    pub feedback_count: u64,
    pub instruction_count: u64,
    pub total_signals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub domain: DomainKind,
    pub model: ModelSpec,
    pub sessions: usize,
    pub base_seed: u64,
    pub criterion: Criterion,
    /// Over converged sessions only; `None` when none converged.
    pub p99_steps_to_convergence: Option<u64>,
    pub converged_count: usize,
    pub non_converged_count: usize,
    pub max_total_teaching_signals: u64,
    pub max_feedback_count: u64,
    pub max_instruction_count: u64,
    pub rows: Vec<SessionRow>,
}

impl BatchSummary {
    pub fn from_results(config: &ExperimentConfig, results: &[SessionResult]) -> Self {
        let converged: Vec<u64> = results.iter().filter_map(|r| r.converged_at).collect();
        let max = |f: fn(&SessionResult) -> u64| results.iter().map(f).max().unwrap_or(0);
        Self {
            domain: config.domain,
            model: config.model,
            sessions: results.len(),
            base_seed: config.base_seed,
            criterion: config.criterion(),
            p99_steps_to_convergence: percentile(&converged, 0.99).ok(),
            converged_count: converged.len(),
            non_converged_count: results.len() - converged.len(),
            max_total_teaching_signals: max(|r| r.load.total),
            max_feedback_count: max(|r| r.load.feedback),
            max_instruction_count: max(|r| r.load.instructions),
            rows: results.iter().map(SessionResult::row).collect(),
        }
    }

    /// p99 for comparisons: a batch where nothing converged ranks last.
    pub fn p99_or_inf(&self) -> f64 {
        self.p99_steps_to_convergence.map_or(f64::INFINITY, |p| p as f64)
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub summary: BatchSummary,
    pub sessions: Vec<SessionResult>,
}

/// Runs one session of `config` with index `k` on `domain`.
pub fn run_session<D: Domain + Clone>(
    config: &ExperimentConfig,
    domain: &D,
    preferred: &Arc<[ActionId]>,
    k: usize,
) -> Result<SessionResult, HarnessError> {
    let seed = config.base_seed.wrapping_add(k as u64);
    let n_actions = domain.num_actions();
    let agent = Agent::new(config.agent_config(), domain.num_states(), n_actions, n_actions)?;
    let mut teacher = build_teacher(
        Arc::clone(preferred),
        n_actions,
        config.teacher,
        config.channels(),
        seed,
    )?;
    let options = SessionOptions {
        use_reward: config.model.reward,
        max_steps: config.max_steps,
    };
    let mut session = Session::new(domain.clone(), agent, options, seed);
    session
        .run_episodes(&mut teacher, config.episodes)
        .map_err(|source| HarnessError::Session { session: k, source })?;
    let tallies = session.completed_tallies().to_vec();
    Ok(SessionResult::from_tallies(k, seed, tallies, config.criterion()))
}

fn run_sessions<D: Domain + Clone>(
    config: &ExperimentConfig,
    domain: &D,
) -> Result<Vec<SessionResult>, HarnessError> {
    let preferred = preferred_policy(domain);
    (0..config.sessions)
        .into_par_iter()
        .map(|k| run_session(config, domain, &preferred, k))
        .collect()
}

/// Runs every session of `config`, in parallel, and summarises them.
/// Output depends only on the config, never on scheduling.
pub fn run_batch(config: &ExperimentConfig) -> Result<BatchResult, HarnessError> {
    config.validate()?;
    let run = || match AnyDomain::build(config.domain) {
        AnyDomain::Sorting(d) => run_sessions(config, &d),
        AnyDomain::Maze(d) => run_sessions(config, &d),
    };
    let sessions = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(BatchResult {
        summary: BatchSummary::from_results(config, &sessions),
        sessions,
    })
}

/// Teacher parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PInstruction,
    PFeedback,
    EInstruction,
    EFeedback,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::PInstruction => "p_instruction",
            SweepAxis::PFeedback => "p_feedback",
            SweepAxis::EInstruction => "e_instruction",
            SweepAxis::EFeedback => "e_feedback",
        }
    }

    pub fn apply(self, teacher: &mut TeacherConfig, value: f64) {
        match self {
            SweepAxis::PInstruction => teacher.p_instruction = value,
            SweepAxis::PFeedback => teacher.p_feedback = value,
            SweepAxis::EInstruction => teacher.e_instruction = value,
            SweepAxis::EFeedback => teacher.e_feedback = value,
        }
    }

    /// Whether the axis only touches the instruction channel, so an
    /// instruction-free baseline is the same at every value.
    pub fn instruction_only(self) -> bool {
        matches!(self, SweepAxis::PInstruction | SweepAxis::EInstruction)
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SweepAxis::PInstruction,
            SweepAxis::PFeedback,
            SweepAxis::EInstruction,
            SweepAxis::EFeedback,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| HarnessError::Axis(s.to_string()))
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub summary: BatchSummary,
    /// Instruction-free model under the same teacher parameters and seeds.
    pub baseline: BatchSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub entries: Vec<SweepEntry>,
}

/// One batch per value with the same base seed, each paired with an
/// instruction-free baseline.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepTable, HarnessError> {
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(HarnessError::Config(format!("{axis} value {v} outside [0, 1]")));
        }
    }
    let mut shared_baseline: Option<BatchSummary> = None;
    let mut entries = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = config.clone();
        axis.apply(&mut cfg.teacher, value);
        let summary = run_batch(&cfg)?.summary;
        let mut base_cfg = cfg.clone();
        base_cfg.model = cfg.model.without_instructions();
        let baseline = match (&shared_baseline, axis.instruction_only()) {
            (Some(b), true) => b.clone(),
            _ => {
                let b = run_batch(&base_cfg)?.summary;
                if axis.instruction_only() {
                    shared_baseline = Some(b.clone());
                }
                b
            }
        };
        entries.push(SweepEntry {
            value,
            summary,
            baseline,
        });
    }
    Ok(SweepTable { axis, entries })
}
