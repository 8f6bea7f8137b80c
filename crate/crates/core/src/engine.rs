//! Episode state machine: agent placement, partial observation, action
//! application, flood advancement, reward and termination.
//!
//! The agent never sees absolute coordinates. Its state is the 8×8 ternary
//! feature window around it plus four sonar distances, rendered into a
//! canonical string key for the tabular learner.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::flood::{FloodError, FloodKind, FloodModel, FloodParams};
use crate::grid::{Cell, CellKind, GridMap};

/// The eight compass moves — the 3×3 mask minus its center. Codes are stable
/// Q-table indices; ties in argmax resolve toward the lowest code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    North = 0,
    NorthEast = 1,
    East = 2,
    SouthEast = 3,
    South = 4,
    SouthWest = 5,
    West = 6,
    NorthWest = 7,
}

impl Action {
    pub const ALL: [Action; 8] = [
        Action::North,
        Action::NorthEast,
        Action::East,
        Action::SouthEast,
        Action::South,
        Action::SouthWest,
        Action::West,
        Action::NorthWest,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Action> {
        Action::ALL.get(code).copied()
    }

    /// (dx, dy) with x growing rightward and y growing downward.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Action::North => (0, -1),
            Action::NorthEast => (1, -1),
            Action::East => (1, 0),
            Action::SouthEast => (1, 1),
            Action::South => (0, 1),
            Action::SouthWest => (-1, 1),
            Action::West => (-1, 0),
            Action::NorthWest => (-1, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpisodeStatus {
    Running,
    Success,
    Drowned,
    TimedOut,
}

impl EpisodeStatus {
    /// Stable integer code used in trajectory dumps.
    pub fn code(self) -> u8 {
        match self {
            EpisodeStatus::Running => 0,
            EpisodeStatus::Success => 1,
            EpisodeStatus::Drowned => 2,
            EpisodeStatus::TimedOut => 3,
        }
    }

    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::Running
    }
}

/// Sonar rays saturate at this many cells.
pub const SONAR_CAP: u8 = 8;
/// Feature window is WINDOW×WINDOW, agent anchored at index (4,4).
pub const WINDOW: usize = 8;

/// The agent's full state vector: feature window F, sonar S, and its
/// canonical key. `flood_hint` is episode metadata, excluded from the key
/// unless [`EngineOptions::key_includes_flood_kind`] is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    /// `feature_map[wy][wx]` covers agent-relative offsets dx,dy ∈ [−4,+3]:
    /// 0 free, 1 obstacle (and out of bounds), 2 hazard (dominates obstacle).
    pub feature_map: [[u8; WINDOW]; WINDOW],
    /// Free cells strictly between the agent and the first obstacle or
    /// boundary along +x, −x, +y, −y; capped at [`SONAR_CAP`].
    pub sonar: [u8; 4],
    /// Which dynamics drive this episode (metadata, not part of the key by
    /// default).
    pub flood_hint: FloodKind,
    /// Canonical textual encoding of (feature_map, sonar): 64 window digits,
    /// `|`, comma-separated sonar, then optionally `|` + flood kind.
    pub key: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineOptions {
    /// Subtracted from every reward, which is then clamped back into [0,1].
    /// Default 0 (pure terminal reward).
    pub step_penalty: f64,
    /// Appends the flood kind to the observation key, giving the learner the
    /// episode-level hint as state.
    pub key_includes_flood_kind: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            step_penalty: 0.0,
            key_includes_flood_kind: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("start cell ({x},{y}) is not in the map's start pool")]
    InvalidStart { x: usize, y: usize },
    #[error("step budget must be ≥ 1")]
    InvalidBudget,
    #[error("{op} called on a terminal episode")]
    EpisodeOver { op: &'static str },
    #[error(transparent)]
    Flood(#[from] FloodError),
}

/// Outcome of one [`Episode::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub terminal: bool,
    pub status: EpisodeStatus,
}

/// One live episode. Owns its flood model; shares the immutable map.
#[derive(Clone, Debug)]
pub struct Episode {
    map: Arc<GridMap>,
    flood: FloodModel,
    agent: Cell,
    tick: u64,
    steps_remaining: u32,
    status: EpisodeStatus,
    options: EngineOptions,
}

impl Episode {
    /// Starts an episode at tick 0 with a freshly initialized flood. If the
    /// flood already covers the start cell the episode begins in `Drowned`
    /// (no steps can be taken).
    pub fn reset(
        map: Arc<GridMap>,
        flood_kind: FloodKind,
        flood_params: FloodParams,
        start: Cell,
        step_budget: u32,
        seed: u64,
    ) -> Result<Episode, EngineError> {
        Episode::reset_with_options(
            map,
            flood_kind,
            flood_params,
            start,
            step_budget,
            seed,
            EngineOptions::default(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn reset_with_options(
        map: Arc<GridMap>,
        flood_kind: FloodKind,
        flood_params: FloodParams,
        start: Cell,
        step_budget: u32,
        seed: u64,
        options: EngineOptions,
    ) -> Result<Episode, EngineError> {
        if !map.is_start(start) {
            return Err(EngineError::InvalidStart {
                x: start.x,
                y: start.y,
            });
        }
        if step_budget == 0 {
            return Err(EngineError::InvalidBudget);
        }
        let flood = FloodModel::init(flood_kind, flood_params, &map, seed)?;
        let status = if flood.hazard_at(start)? {
            EpisodeStatus::Drowned
        } else {
            EpisodeStatus::Running
        };
        Ok(Episode {
            map,
            flood,
            agent: start,
            tick: 0,
            steps_remaining: step_budget,
            status,
            options,
        })
    }

    /// Step budget used when none is configured: 4·(w+h), a generous multiple
    /// of any shortest path.
    pub fn default_step_budget(map: &GridMap) -> u32 {
        4 * (map.width() + map.height()) as u32
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn steps_remaining(&self) -> u32 {
        self.steps_remaining
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn flood(&self) -> &FloodModel {
        &self.flood
    }

    pub fn options(&self) -> EngineOptions {
        self.options
    }

    /// Builds the agent's observation. Contract error on terminal episodes.
    pub fn observe(&self) -> Result<Observation, EngineError> {
        if self.status.is_terminal() {
            return Err(EngineError::EpisodeOver { op: "observe" });
        }

        let mut feature_map = [[0u8; WINDOW]; WINDOW];
        for (wy, row) in feature_map.iter_mut().enumerate() {
            let dy = wy as isize - 4;
            for (wx, code) in row.iter_mut().enumerate() {
                let dx = wx as isize - 4;
                *code = self.feature_code(dx, dy);
            }
        }

        let sonar = [
            self.sonar_ray(1, 0),
            self.sonar_ray(-1, 0),
            self.sonar_ray(0, 1),
            self.sonar_ray(0, -1),
        ];

        let mut key = String::with_capacity(WINDOW * WINDOW + 16);
        for row in &feature_map {
            for &code in row {
                key.push((b'0' + code) as char);
            }
        }
        key.push('|');
        let _ = write!(key, "{},{},{},{}", sonar[0], sonar[1], sonar[2], sonar[3]);
        if self.options.key_includes_flood_kind {
            key.push('|');
            key.push_str(self.flood.kind().name());
        }

        Ok(Observation {
            feature_map,
            sonar,
            flood_hint: self.flood.kind(),
            key,
        })
    }

    /// Ternary code for the cell at agent-relative (dx, dy): out of bounds
    /// reads as obstacle; hazard dominates obstacle.
    fn feature_code(&self, dx: isize, dy: isize) -> u8 {
        let x = self.agent.x as isize + dx;
        let y = self.agent.y as isize + dy;
        if x < 0 || y < 0 {
            return 1;
        }
        let cell = Cell::new(x as usize, y as usize);
        if !self.map.in_bounds(cell) {
            return 1;
        }
        if self.flood.hazard_at(cell).expect("cell is in bounds") {
            return 2;
        }
        match self.map.kind_at(cell) {
            CellKind::Obstacle => 1,
            CellKind::Free => 0,
        }
    }

    /// Counts free cells strictly between the agent and the first obstacle
    /// or boundary along one axis, capped. Hazard is invisible to sonar.
    fn sonar_ray(&self, dx: isize, dy: isize) -> u8 {
        let mut count = 0u8;
        let (mut x, mut y) = (self.agent.x as isize, self.agent.y as isize);
        while count < SONAR_CAP {
            x += dx;
            y += dy;
            if x < 0 || y < 0 {
                break;
            }
            let cell = Cell::new(x as usize, y as usize);
            if !self.map.in_bounds(cell) || self.map.kind_at(cell) == CellKind::Obstacle {
                break;
            }
            count += 1;
        }
        count
    }

    /// Advances one tick: (1) the move resolves — blocked moves (out of
    /// bounds or obstacle target) are legal no-ops; (2) the flood ticks;
    /// (3) adjudication in priority order Drowned > Success > TimedOut.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EngineError> {
        if self.status.is_terminal() {
            return Err(EngineError::EpisodeOver { op: "step" });
        }

        let (dx, dy) = action.offset();
        let tx = self.agent.x as isize + dx;
        let ty = self.agent.y as isize + dy;
        if tx >= 0 && ty >= 0 {
            let target = Cell::new(tx as usize, ty as usize);
            if self.map.is_free(target) {
                self.agent = target;
            }
        }

        self.flood.tick();
        self.tick += 1;
        self.steps_remaining -= 1;

        let mut reward = 0.0;
        if self.flood.hazard_at(self.agent)? {
            self.status = EpisodeStatus::Drowned;
        } else if self.map.is_safe(self.agent) {
            self.status = EpisodeStatus::Success;
            reward = 1.0;
        } else if self.steps_remaining == 0 {
            self.status = EpisodeStatus::TimedOut;
        }

        reward = (reward - self.options.step_penalty).clamp(0.0, 1.0);
        Ok(StepOutcome {
            reward,
            terminal: self.status.is_terminal(),
            status: self.status,
        })
    }
}

/// One trajectory-dump line: `t agent_x agent_y action reward status`,
/// space-separated decimal.
pub fn trajectory_line(
    tick: u64,
    agent: Cell,
    action: Action,
    reward: f64,
    status: EpisodeStatus,
) -> String {
    format!(
        "{} {} {} {} {} {}",
        tick,
        agent.x,
        agent.y,
        action.code(),
        reward,
        status.code()
    )
}
