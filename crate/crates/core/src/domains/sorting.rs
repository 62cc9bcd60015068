use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, DomainError, StepOutcome};
use crate::rl::{ActionId, StateId};

pub const STEP_REWARD: f64 = -0.1;
pub const SUCCESS_REWARD: f64 = 1.0;
pub const FAILURE_REWARD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    Z1,
    Z2,
    Z3,
}

impl Zone {
    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Zone {
        [Zone::Z1, Zone::Z2, Zone::Z3][i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectType {
    Plain,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Green,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Size {
    Large,
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectDescriptor {
    #[serde(rename = "type")]
    pub kind: ObjectType,
    pub color: Color,
    pub size: Size,
}

impl ObjectDescriptor {
    pub const fn new(kind: ObjectType, color: Color, size: Size) -> Self {
        Self { kind, color, size }
    }

    /// Zone the object belongs in.
    pub fn target(&self) -> Zone {
        match self.kind {
            ObjectType::Plain => Zone::Z1,
            ObjectType::Pattern => Zone::Z3,
        }
    }

    fn full_index(&self) -> usize {
        (self.kind as usize * 3 + self.color as usize) * 2 + self.size as usize
    }
}

/// How much of the descriptor is visible in the task state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescriptorMode {
    /// `(type, color, size)`: 12 descriptor values.
    Full,
    /// Type only: 2 descriptor values.
    TypeOnly,
}

impl DescriptorMode {
    fn cardinality(self) -> usize {
        match self {
            DescriptorMode::Full => 12,
            DescriptorMode::TypeOnly => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectLocation {
    Zone(Zone),
    LeftHand,
    RightHand,
}

impl ObjectLocation {
    fn index(self) -> usize {
        match self {
            ObjectLocation::Zone(z) => z.index(),
            ObjectLocation::LeftHand => 3,
            ObjectLocation::RightHand => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SortingState {
    /// Left hand, over `Z2` or `Z3`.
    pub left_hand: Zone,
    /// Right hand, over `Z1` or `Z2`.
    pub right_hand: Zone,
    pub object: ObjectLocation,
    pub descriptor: ObjectDescriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    fn range(self) -> (Zone, Zone) {
        match self {
            Hand::Left => (Zone::Z2, Zone::Z3),
            Hand::Right => (Zone::Z1, Zone::Z2),
        }
    }

    fn holding(self) -> ObjectLocation {
        match self {
            Hand::Left => ObjectLocation::LeftHand,
            Hand::Right => ObjectLocation::RightHand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SortingVerb {
    MoveLeft,
    MoveRight,
    Pick,
    Place,
}

/// One of the eight hand actions. Ids enumerate verbs first, each verb for
/// the left hand then the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SortingAction {
    pub hand: Hand,
    pub verb: SortingVerb,
}

const VERBS: [SortingVerb; 4] = [
    SortingVerb::MoveLeft,
    SortingVerb::MoveRight,
    SortingVerb::Pick,
    SortingVerb::Place,
];

const ACTION_NAMES: [&str; 8] = [
    "LeftHand.MoveLeft",
    "RightHand.MoveLeft",
    "LeftHand.MoveRight",
    "RightHand.MoveRight",
    "LeftHand.Pick",
    "RightHand.Pick",
    "LeftHand.Place",
    "RightHand.Place",
];

impl SortingAction {
    pub const COUNT: usize = 8;

    pub fn from_id(a: ActionId) -> Option<Self> {
        if a.0 >= Self::COUNT {
            return None;
        }
        let hand = if a.0 % 2 == 0 { Hand::Left } else { Hand::Right };
        Some(Self {
            hand,
            verb: VERBS[a.0 / 2],
        })
    }

    pub fn id(self) -> ActionId {
        let h = match self.hand {
            Hand::Left => 0,
            Hand::Right => 1,
        };
        ActionId(self.verb as usize * 2 + h)
    }
}

/// The eight objects presented across episodes: every type/size combination
/// in red and in blue.
pub const ROSTER: [ObjectDescriptor; 8] = {
    use Color::*;
    use ObjectType::*;
    use Size::*;
    [
        ObjectDescriptor::new(Plain, Red, Large),
        ObjectDescriptor::new(Pattern, Red, Large),
        ObjectDescriptor::new(Plain, Red, Small),
        ObjectDescriptor::new(Pattern, Red, Small),
        ObjectDescriptor::new(Plain, Blue, Large),
        ObjectDescriptor::new(Pattern, Blue, Large),
        ObjectDescriptor::new(Plain, Blue, Small),
        ObjectDescriptor::new(Pattern, Blue, Small),
    ]
};

/// Object sorting: pick the object presented in `Z2` and place plain objects
/// in `Z1`, patterned ones in `Z3`.
#[derive(Debug, Clone)]
pub struct SortingDomain {
    mode: DescriptorMode,
    roster: Vec<ObjectDescriptor>,
}

impl SortingDomain {
    pub fn new(mode: DescriptorMode) -> Self {
        Self {
            mode,
            roster: ROSTER.to_vec(),
        }
    }

    pub fn with_roster(mode: DescriptorMode, roster: Vec<ObjectDescriptor>) -> Self {
        assert!(!roster.is_empty(), "object roster must not be empty");
        Self { mode, roster }
    }

    pub fn mode(&self) -> DescriptorMode {
        self.mode
    }

    pub fn roster(&self) -> &[ObjectDescriptor] {
        &self.roster
    }

    /// Episode start: object in `Z2`, hands at their outer home zones.
    pub fn reset_with(&self, object: ObjectDescriptor) -> SortingState {
        SortingState {
            left_hand: Zone::Z3,
            right_hand: Zone::Z1,
            object: ObjectLocation::Zone(Zone::Z2),
            descriptor: object,
        }
    }

    fn descriptor_index(&self, d: &ObjectDescriptor) -> usize {
        match self.mode {
            DescriptorMode::Full => d.full_index(),
            DescriptorMode::TypeOnly => d.kind as usize,
        }
    }

    fn all_descriptors(&self) -> Vec<ObjectDescriptor> {
        use Color::*;
        use ObjectType::*;
        use Size::*;
        match self.mode {
            DescriptorMode::TypeOnly => vec![
                ObjectDescriptor::new(Plain, Red, Large),
                ObjectDescriptor::new(Pattern, Red, Large),
            ],
            DescriptorMode::Full => {
                let mut out = Vec::with_capacity(12);
                for kind in [Plain, Pattern] {
                    for color in [Red, Green, Blue] {
                        for size in [Large, Small] {
                            out.push(ObjectDescriptor::new(kind, color, size));
                        }
                    }
                }
                out
            }
        }
    }
}

impl Domain for SortingDomain {
    type State = SortingState;

    fn name(&self) -> &str {
        match self.mode {
            DescriptorMode::Full => "sorting",
            DescriptorMode::TypeOnly => "sorting-type",
        }
    }

    fn num_states(&self) -> usize {
        2 * 2 * 5 * self.mode.cardinality()
    }

    fn num_actions(&self) -> usize {
        SortingAction::COUNT
    }

    fn state_id(&self, s: &SortingState) -> StateId {
        let lh = s.left_hand.index() - 1;
        let rh = s.right_hand.index();
        let id = ((lh * 2 + rh) * 5 + s.object.index()) * self.mode.cardinality()
            + self.descriptor_index(&s.descriptor);
        StateId(id)
    }

    fn reset<R: Rng + ?Sized>(&self, episode: usize, _rng: &mut R) -> SortingState {
        self.reset_with(self.roster[episode % self.roster.len()])
    }

    fn step(&self, s: &SortingState, a: ActionId) -> Result<StepOutcome<SortingState>, DomainError> {
        if self.is_terminal(s) {
            return Err(DomainError::TerminalState);
        }
        let action = SortingAction::from_id(a).ok_or(DomainError::InvalidAction(a.0))?;
        let mut next = *s;
        let mut zone = match action.hand {
            Hand::Left => s.left_hand,
            Hand::Right => s.right_hand,
        };
        let (lo, hi) = action.hand.range();
        let mut outcome = StepOutcome {
            next,
            reward: STEP_REWARD,
            terminal: false,
            success: None,
        };
        match action.verb {
            SortingVerb::MoveLeft => {
                if zone > lo {
                    zone = Zone::from_index(zone.index() - 1);
                }
            }
            SortingVerb::MoveRight => {
                if zone < hi {
                    zone = Zone::from_index(zone.index() + 1);
                }
            }
            SortingVerb::Pick => {
                if next.object == ObjectLocation::Zone(zone) {
                    next.object = action.hand.holding();
                }
            }
            SortingVerb::Place => {
                if next.object == action.hand.holding() {
                    next.object = ObjectLocation::Zone(zone);
                    if zone != Zone::Z2 {
                        let success = zone == next.descriptor.target();
                        outcome.reward = if success { SUCCESS_REWARD } else { FAILURE_REWARD };
                        outcome.terminal = true;
                        outcome.success = Some(success);
                    }
                }
            }
        }
        match action.hand {
            Hand::Left => next.left_hand = zone,
            Hand::Right => next.right_hand = zone,
        }
        outcome.next = next;
        Ok(outcome)
    }

    fn is_terminal(&self, s: &SortingState) -> bool {
        matches!(s.object, ObjectLocation::Zone(Zone::Z1 | Zone::Z3))
    }

    fn decision_states(&self) -> Vec<SortingState> {
        let mut out = Vec::new();
        for left_hand in [Zone::Z2, Zone::Z3] {
            for right_hand in [Zone::Z1, Zone::Z2] {
                for object in [
                    ObjectLocation::Zone(Zone::Z2),
                    ObjectLocation::LeftHand,
                    ObjectLocation::RightHand,
                ] {
                    for descriptor in self.all_descriptors() {
                        out.push(SortingState {
                            left_hand,
                            right_hand,
                            object,
                            descriptor,
                        });
                    }
                }
            }
        }
        out.sort_by_key(|s| self.state_id(s));
        out
    }

    fn action_name(&self, a: ActionId) -> &'static str {
        ACTION_NAMES.get(a.0).copied().unwrap_or("?")
    }
}
