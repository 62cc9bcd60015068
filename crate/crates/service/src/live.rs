//! Domain-erased wrapper around a core session.

use tics_core::agent::session::{Session, SessionError, SessionOptions, StepRecord};
use tics_core::agent::{DecisionSource, SignalId};
use tics_core::domains::{AnyDomain, Domain, MazeDomain, SortingDomain};
use tics_core::rl::{ActionId, Feedback};
use tics_core::Agent;

use crate::api::{CreateSession, RenderedState};

pub(crate) trait Render: Domain {
    fn render(&self, s: &Self::State) -> RenderedState;
}

impl Render for MazeDomain {
    fn render(&self, s: &Self::State) -> RenderedState {
        let map = self.map();
        let goal = map.goal();
        RenderedState::Maze {
            width: map.width(),
            height: map.height(),
            rows: map.render().lines().map(str::to_string).collect(),
            agent: [s.x, s.y],
            goal: [goal.x, goal.y],
        }
    }
}

impl Render for SortingDomain {
    fn render(&self, s: &Self::State) -> RenderedState {
        RenderedState::Sorting {
            left_hand: s.left_hand,
            right_hand: s.right_hand,
            object: s.object,
            descriptor: s.descriptor,
        }
    }
}

/// The operations the executor needs, independent of the domain type.
pub(crate) trait Live: Send {
    fn teach(&mut self, signal: Option<SignalId>) -> Result<(), SessionError>;
    fn act(&mut self) -> Result<StepRecord, SessionError>;
    fn learn(&mut self, feedback: Option<Feedback>) -> Result<StepRecord, SessionError>;
    fn has_pending(&self) -> bool;
    fn agent(&self) -> &Agent;
    fn render(&self) -> RenderedState;
    fn display(&self) -> Option<(SignalId, f64)>;
    fn episode(&self) -> usize;
    fn total_steps(&self) -> u64;
    fn completed_steps(&self) -> Vec<u32>;
    fn action_names(&self) -> Vec<String>;
    fn action_name(&self, a: ActionId) -> String;
}

impl<D: Render + Clone + 'static> Live for Session<D, f64> {
    fn teach(&mut self, signal: Option<SignalId>) -> Result<(), SessionError> {
        Session::teach(self, signal)
    }

    fn act(&mut self) -> Result<StepRecord, SessionError> {
        Session::act(self).cloned()
    }

    fn learn(&mut self, feedback: Option<Feedback>) -> Result<StepRecord, SessionError> {
        Session::learn(self, feedback)
    }

    fn has_pending(&self) -> bool {
        self.pending().is_some()
    }

    fn agent(&self) -> &Agent {
        Session::agent(self)
    }

    fn render(&self) -> RenderedState {
        self.domain().render(self.state())
    }

    fn display(&self) -> Option<(SignalId, f64)> {
        Session::display(self)
    }

    fn episode(&self) -> usize {
        Session::episode(self)
    }

    fn total_steps(&self) -> u64 {
        Session::total_steps(self)
    }

    fn completed_steps(&self) -> Vec<u32> {
        self.completed_tallies().iter().map(|t| t.steps).collect()
    }

    fn action_names(&self) -> Vec<String> {
        (0..self.domain().num_actions())
            .map(|a| self.domain().action_name(ActionId(a)).to_string())
            .collect()
    }

    fn action_name(&self, a: ActionId) -> String {
        self.domain().action_name(a).to_string()
    }
}

/// A fresh session for `req`; the request must already be validated.
pub(crate) fn build(req: &CreateSession) -> Result<Box<dyn Live>, String> {
    let options = SessionOptions {
        use_reward: req.model.reward,
        max_steps: req.max_steps,
    };
    fn boxed<D: Render + Clone + 'static>(
        domain: D,
        req: &CreateSession,
        options: SessionOptions,
    ) -> Result<Box<dyn Live>, String> {
        let n = domain.num_actions();
        let agent = Agent::new(
            req.experiment().agent_config(),
            domain.num_states(),
            n,
            req.signals.len(),
        )
        .map_err(|e| e.to_string())?;
        Ok(Box::new(Session::new(domain, agent, options, req.seed)))
    }
    match AnyDomain::build(req.domain) {
        AnyDomain::Sorting(d) => boxed(d, req, options),
        AnyDomain::Maze(d) => boxed(d, req, options),
    }
}

/// What the last performed action was and who chose it.
#[derive(Debug, Clone, Default)]
pub(crate) struct LastAction {
    pub name: Option<String>,
    pub source: Option<DecisionSource>,
}
