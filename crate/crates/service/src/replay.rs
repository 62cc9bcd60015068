use tics_core::agent::session::SessionError;
use tics_core::Agent;

use crate::api::EventLog;
use crate::live;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot rebuild the session: {0}")]
    Config(String),
    #[error("step {step}: logged action {logged} but replay chose {replayed}")]
    Diverged { step: u64, logged: usize, replayed: usize },
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Feed the logged human inputs through a fresh agent with the same seed
/// and return it. Matches the live agent once the session has finished.
pub fn replay(log: &EventLog) -> Result<Agent, ReplayError> {
    log.config.validate().map_err(|e| ReplayError::Config(e.message))?;
    let mut session = live::build(&log.config).map_err(ReplayError::Config)?;
    for entry in &log.entries {
        let logged = &entry.record;
        session.teach(logged.signal)?;
        let record = session.act()?;
        if record.action != logged.action {
            return Err(ReplayError::Diverged {
                step: logged.step,
                logged: logged.action.0,
                replayed: record.action.0,
            });
        }
        session.learn(logged.feedback)?;
    }
    Ok(session.agent().clone())
}
