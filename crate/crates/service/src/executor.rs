//! One task per session owns its state; everything else talks to it
//! through a command queue, so steps and teaching never interleave.

use std::time::Duration;

use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::{interval, Interval, MissedTickBehavior};

use tics_core::agent::SignalId;

use crate::api::{CmDisplay, CreateSession, EventLog, LogEntry, Mode, Snapshot, Status, Teaching};
use crate::error::ApiError;
use crate::live::{Live, LastAction};

type Reply<T> = oneshot::Sender<Result<T, ApiError>>;

pub(crate) enum Command {
    Snapshot(oneshot::Sender<Snapshot>),
    Teach(Teaching, Reply<Snapshot>),
    Step(Reply<Snapshot>),
    SetMode(Mode, Reply<Snapshot>),
    Log(oneshot::Sender<EventLog>),
}

pub(crate) struct Executor {
    id: String,
    config: CreateSession,
    live: Box<dyn Live>,
    mode: Mode,
    queued: Option<Teaching>,
    log: Vec<LogEntry>,
    last: LastAction,
    finished: bool,
    events: broadcast::Sender<Snapshot>,
    ticker: Option<Interval>,
}

impl Executor {
    pub fn new(
        id: String,
        config: CreateSession,
        live: Box<dyn Live>,
        events: broadcast::Sender<Snapshot>,
    ) -> Self {
        Self {
            id,
            config,
            live,
            mode: Mode::Manual,
            queued: None,
            log: Vec::new(),
            last: LastAction::default(),
            finished: false,
            events,
            ticker: None,
        }
    }

    pub async fn run(mut self, mut commands: mpsc::Receiver<Command>) {
        loop {
            let ticking = self.ticker.is_some();
            tokio::select! {
                cmd = commands.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = async { self.ticker.as_mut().expect("guarded").tick().await }, if ticking => {
                    self.tick();
                }
            }
        }
    }

    fn handle(&mut self, cmd: Command) {
        // A dropped reply means the client went away; the state change
        // stands either way.
        match cmd {
            Command::Snapshot(reply) => {
                let _ = reply.send(self.snapshot());
            }
            Command::Teach(t, reply) => {
                let _ = reply.send(self.teach(t));
            }
            Command::Step(reply) => {
                let _ = reply.send(self.step());
            }
            Command::SetMode(m, reply) => {
                let _ = reply.send(self.set_mode(m));
            }
            Command::Log(reply) => {
                let _ = reply.send(self.event_log());
            }
        }
    }

    fn tick(&mut self) {
        if self.config.blocking && self.queued.is_none() {
            return;
        }
        // Errors only arise on a finished session, which stops the ticker.
        let _ = self.step();
    }

    pub fn status(&self) -> Status {
        if self.finished {
            return Status::Finished;
        }
        match self.mode {
            Mode::Manual => Status::AwaitingInput,
            Mode::Paused => Status::Paused,
            Mode::Auto { .. } if self.config.blocking && self.queued.is_none() => {
                Status::AwaitingInput
            }
            Mode::Auto { .. } => Status::Stepping,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let live = &self.live;
        Snapshot {
            id: self.id.clone(),
            domain: self.config.domain,
            model: self.config.model,
            status: self.status(),
            mode: self.mode,
            state: live.render(),
            cm_display: live.display().map(|(i, p)| CmDisplay {
                signal: i.0,
                label: self.config.signals[i.0].clone(),
                probability: p,
            }),
            episode: live.episode(),
            step: live.total_steps(),
            last_action: self.last.name.clone(),
            last_source: self.last.source,
            epsilon: live.agent().epsilon(),
            steps_per_episode: live.completed_steps(),
            episode_budget: self.config.episodes,
            actions: live.action_names(),
            signals: self.config.signals.clone(),
            queued: self.queued,
        }
    }

    fn publish(&self) -> Snapshot {
        let snap = self.snapshot();
        // No subscribers is fine.
        let _ = self.events.send(snap.clone());
        snap
    }

    fn teach(&mut self, t: Teaching) -> Result<Snapshot, ApiError> {
        if self.finished {
            return Err(ApiError::conflict("session finished", false));
        }
        if self.queued.is_some() {
            return Err(ApiError::conflict(
                "teaching already queued for this step",
                true,
            ));
        }
        if let Some(i) = t.instruction {
            if i >= self.config.signals.len() {
                return Err(ApiError::Invalid(crate::api::FieldError::new(
                    "instruction",
                    format!("signal {i} outside the {} labels", self.config.signals.len()),
                )));
            }
        }
        if t.feedback.is_some() && !self.live.has_pending() {
            return Err(ApiError::conflict("no action to evaluate yet", true));
        }
        if !t.is_empty() {
            self.queued = Some(t);
        }
        Ok(self.publish())
    }

    /// Learn the last action with the queued feedback, take the queued
    /// instruction for the current state, then act.
    fn step(&mut self) -> Result<Snapshot, ApiError> {
        if self.finished {
            return Err(ApiError::conflict("session finished", false));
        }
        let batch = self.queued.take().unwrap_or_default();
        let internal = |e: tics_core::agent::session::SessionError| ApiError::Internal(e.to_string());
        if self.live.has_pending() {
            let record = self.live.learn(batch.feedback).map_err(internal)?;
            self.log.push(LogEntry {
                record,
                combined_submission: batch.feedback.is_some() && batch.instruction.is_some(),
            });
        }
        self.live.teach(batch.instruction.map(SignalId)).map_err(internal)?;
        let record = self.live.act().map_err(internal)?;
        self.last = LastAction {
            name: Some(self.live.action_name(record.action)),
            source: Some(record.source),
        };
        if self.live.episode() >= self.config.episodes {
            // Nothing follows the last action, so it learns from the
            // reward alone.
            let record = self.live.learn(None).map_err(internal)?;
            self.log.push(LogEntry {
                record,
                combined_submission: false,
            });
            self.finished = true;
            self.ticker = None;
        }
        Ok(self.publish())
    }

    fn set_mode(&mut self, mode: Mode) -> Result<Snapshot, ApiError> {
        if self.finished {
            return Err(ApiError::conflict("session finished", false));
        }
        self.ticker = match mode {
            Mode::Auto { interval_ms: 0 } => {
                return Err(ApiError::Invalid(crate::api::FieldError::new(
                    "interval_ms",
                    "must be positive",
                )))
            }
            Mode::Auto { interval_ms } => {
                let mut t = interval(Duration::from_millis(interval_ms));
                t.set_missed_tick_behavior(MissedTickBehavior::Delay);
                // The first tick completes immediately; skip it so the
                // first step lands one interval from now.
                t.reset();
                Some(t)
            }
            Mode::Manual | Mode::Paused => None,
        };
        self.mode = mode;
        Ok(self.publish())
    }

    fn event_log(&self) -> EventLog {
        EventLog {
            id: self.id.clone(),
            config: self.config.clone(),
            entries: self.log.clone(),
        }
    }
}
