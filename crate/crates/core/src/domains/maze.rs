use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, DomainError, StepOutcome};
use crate::rl::{ActionId, StateId};

pub const STEP_REWARD: f64 = -0.01;
pub const GOAL_REWARD: f64 = 1.0;

/// Standard map: several states have more than one optimal action.
pub const MAZE_STD: &str = include_str!("../../../../maps/maze-std.txt");
/// Simplified map: a unique optimal action in every state.
pub const MAZE_SIMPLE: &str = include_str!("../../../../maps/maze-simple.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MazeCell {
    Free,
    Wall,
    Goal,
}

/// Grid position; `x` is the column, `y` the row counted from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MazeState {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MazeAction {
    North,
    East,
    South,
    West,
}

impl MazeAction {
    pub const ALL: [MazeAction; 4] = [
        MazeAction::North,
        MazeAction::East,
        MazeAction::South,
        MazeAction::West,
    ];

    pub fn id(self) -> ActionId {
        ActionId(self as usize)
    }

    fn offset(self) -> (isize, isize) {
        match self {
            MazeAction::North => (0, -1),
            MazeAction::East => (1, 0),
            MazeAction::South => (0, 1),
            MazeAction::West => (-1, 0),
        }
    }
}

/// Rectangular grid with exactly one goal; every free cell can reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeMap {
    width: usize,
    height: usize,
    cells: Vec<MazeCell>,
    goal: MazeState,
}

impl MazeMap {
    /// Parses `#` (wall), `.` (free) and `G` (goal) rows separated by
    /// newlines.
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(DomainError::Map("empty map".into()));
        }
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(width * rows.len());
        let mut goals = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(DomainError::Map(format!(
                    "row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '#' => MazeCell::Wall,
                    '.' => MazeCell::Free,
                    'G' => {
                        goals.push(MazeState { x, y });
                        MazeCell::Goal
                    }
                    other => {
                        return Err(DomainError::Map(format!(
                            "unexpected character {other:?} at ({x}, {y})"
                        )))
                    }
                });
            }
        }
        let goal = match goals.as_slice() {
            [g] => *g,
            [] => return Err(DomainError::Map("no goal cell".into())),
            many => return Err(DomainError::Map(format!("{} goal cells", many.len()))),
        };
        let map = MazeMap {
            width,
            height: rows.len(),
            cells,
            goal,
        };
        let dist = map.goal_distances();
        if let Some((i, _)) = map
            .cells
            .iter()
            .enumerate()
            .find(|(i, c)| **c == MazeCell::Free && dist[*i].is_none())
        {
            return Err(DomainError::Map(format!(
                "cell ({}, {}) cannot reach the goal",
                i % width,
                i / width
            )));
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal(&self) -> MazeState {
        self.goal
    }

    pub fn cell(&self, x: usize, y: usize) -> MazeCell {
        self.cells[y * self.width + x]
    }

    /// Non-goal free cells in row-major order.
    pub fn free_cells(&self) -> Vec<MazeState> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == MazeCell::Free)
            .map(|(i, _)| MazeState {
                x: i % self.width,
                y: i / self.width,
            })
            .collect()
    }

    fn neighbour(&self, s: MazeState, a: MazeAction) -> Option<MazeState> {
        let (dx, dy) = a.offset();
        let x = s.x.checked_add_signed(dx)?;
        let y = s.y.checked_add_signed(dy)?;
        (x < self.width && y < self.height && self.cell(x, y) != MazeCell::Wall)
            .then_some(MazeState { x, y })
    }

    /// BFS distance to the goal for every cell, row-major; `None` for walls
    /// and unreachable cells.
    pub fn goal_distances(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells.len()];
        let mut queue = VecDeque::new();
        dist[self.goal.y * self.width + self.goal.x] = Some(0);
        queue.push_back(self.goal);
        while let Some(c) = queue.pop_front() {
            let d = dist[c.y * self.width + c.x].unwrap_or(0);
            for a in MazeAction::ALL {
                if let Some(n) = self.neighbour(c, a) {
                    let slot = &mut dist[n.y * self.width + n.x];
                    if slot.is_none() {
                        *slot = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Largest shortest-path distance from a free cell to the goal.
    pub fn goal_horizon(&self) -> usize {
        self.goal_distances().into_iter().flatten().max().unwrap_or(0)
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(match self.cell(x, y) {
                    MazeCell::Free => '.',
                    MazeCell::Wall => '#',
                    MazeCell::Goal => 'G',
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Grid navigation towards a single goal cell.
#[derive(Debug, Clone)]
pub struct MazeDomain {
    name: String,
    map: MazeMap,
    starts: Vec<MazeState>,
}

impl MazeDomain {
    pub fn new(name: impl Into<String>, map: MazeMap) -> Self {
        let starts = map.free_cells();
        Self {
            name: name.into(),
            map,
            starts,
        }
    }

    pub fn standard() -> Self {
        Self::new("maze-std", MazeMap::parse(MAZE_STD).expect("bundled map is valid"))
    }

    pub fn simple() -> Self {
        Self::new(
            "maze-simple",
            MazeMap::parse(MAZE_SIMPLE).expect("bundled map is valid"),
        )
    }

    pub fn map(&self) -> &MazeMap {
        &self.map
    }
}

impl Domain for MazeDomain {
    type State = MazeState;

    fn name(&self) -> &str {
        &self.name
    }

    fn num_states(&self) -> usize {
        self.map.width * self.map.height
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn state_id(&self, s: &MazeState) -> StateId {
        StateId(s.y * self.map.width + s.x)
    }

    /// Uniform over non-goal free cells.
    fn reset<R: Rng + ?Sized>(&self, _episode: usize, rng: &mut R) -> MazeState {
        self.starts[rng.gen_range(0..self.starts.len())]
    }

    fn step(&self, s: &MazeState, a: ActionId) -> Result<StepOutcome<MazeState>, DomainError> {
        if self.is_terminal(s) {
            return Err(DomainError::TerminalState);
        }
        let action = *MazeAction::ALL
            .get(a.0)
            .ok_or(DomainError::InvalidAction(a.0))?;
        let next = self.map.neighbour(*s, action).unwrap_or(*s);
        let terminal = next == self.map.goal;
        Ok(StepOutcome {
            next,
            reward: if terminal { GOAL_REWARD } else { STEP_REWARD },
            terminal,
            success: None,
        })
    }

    fn is_terminal(&self, s: &MazeState) -> bool {
        *s == self.map.goal
    }

    fn decision_states(&self) -> Vec<MazeState> {
        self.starts.clone()
    }

    fn action_name(&self, a: ActionId) -> &'static str {
        ["North", "East", "South", "West"]
            .get(a.0)
            .copied()
            .unwrap_or("?")
    }
}
