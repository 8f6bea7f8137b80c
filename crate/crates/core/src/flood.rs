//! The five hazard dynamics evolving a boolean hazard mask over the grid.
//!
//! Each model is a pure function of `(kind, params, seed, tick count)`: the
//! ping kinds grow Euclidean discs, the linear kind sweeps a column front
//! right→left, and `RandomPings` spawns pings from a dedicated ChaCha8 stream.
//! Masks are monotone — hazard never recedes. Obstacle cells may be hazarded
//! (water covers debris); hazard semantics apply to agent occupancy only.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, GridMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloodKind {
    /// A single ping born at (⌊w/2⌋, ⌊h/2⌋).
    #[serde(rename = "central")]
    CentralPing,
    /// A single ping born at the top-right corner (w−1, 0).
    #[serde(rename = "top_right")]
    TopRightPing,
    /// A single ping born at the bottom-right corner (w−1, h−1).
    #[serde(rename = "bottom_right")]
    BottomRightPing,
    /// A column front advancing ⌊t·δd⌋ columns from the right edge.
    #[serde(rename = "linear")]
    LinearVertical,
    /// Pings spawned at random cells at random times, accumulating forever.
    #[serde(rename = "random")]
    RandomPings,
}

impl FloodKind {
    pub const ALL: [FloodKind; 5] = [
        FloodKind::CentralPing,
        FloodKind::TopRightPing,
        FloodKind::BottomRightPing,
        FloodKind::LinearVertical,
        FloodKind::RandomPings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FloodKind::CentralPing => "central",
            FloodKind::TopRightPing => "top_right",
            FloodKind::BottomRightPing => "bottom_right",
            FloodKind::LinearVertical => "linear",
            FloodKind::RandomPings => "random",
        }
    }

    /// Stable integer code used in seed derivation.
    pub(crate) fn code(self) -> u64 {
        match self {
            FloodKind::CentralPing => 0,
            FloodKind::TopRightPing => 1,
            FloodKind::BottomRightPing => 2,
            FloodKind::LinearVertical => 3,
            FloodKind::RandomPings => 4,
        }
    }
}

impl fmt::Display for FloodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FloodKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FloodKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown flood kind {s:?} (expected central|top_right|bottom_right|linear|random)")
            })
    }
}

/// Dynamics parameters. Radii accumulate exactly as `f64`s — only the
/// distance comparison is geometric, there is no per-tick rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloodParams {
    /// Initial ping radius, in cells.
    #[serde(default)]
    pub r0: f64,
    /// Radius increment per tick for ping kinds.
    #[serde(default = "FloodParams::default_delta_r")]
    pub delta_r: f64,
    /// Column-front advance per tick for the linear kind.
    #[serde(default = "FloodParams::default_delta_d")]
    pub delta_d: f64,
    /// Per-tick probability that a RandomPings tick spawns new pings.
    #[serde(default = "FloodParams::default_spawn_prob")]
    pub spawn_prob: f64,
    /// Upper bound on pings spawned in one tick, in [1, 8].
    #[serde(default = "FloodParams::default_max_spawn")]
    pub max_spawn: u32,
}

impl FloodParams {
    fn default_delta_r() -> f64 {
        0.5
    }

    fn default_delta_d() -> f64 {
        1.0
    }

    fn default_spawn_prob() -> f64 {
        0.1
    }

    fn default_max_spawn() -> u32 {
        3
    }

    /// Checks the fields the given kind actually consumes.
    // Negated comparisons are load-bearing: NaN must fail validation.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, kind: FloodKind) -> Result<(), FloodError> {
        let fail = |what: &str| {
            Err(FloodError::BadParams {
                kind,
                what: what.to_string(),
            })
        };
        let uses_pings = !matches!(kind, FloodKind::LinearVertical);
        if uses_pings {
            if !(self.r0 >= 0.0) {
                return fail(&format!("r0 must be ≥ 0, got {}", self.r0));
            }
            if !(self.delta_r > 0.0) {
                return fail(&format!("delta_r must be > 0, got {}", self.delta_r));
            }
        }
        if kind == FloodKind::LinearVertical && !(self.delta_d > 0.0) {
            return fail(&format!("delta_d must be > 0, got {}", self.delta_d));
        }
        if kind == FloodKind::RandomPings {
            if !(0.0..=1.0).contains(&self.spawn_prob) {
                return fail(&format!("spawn_prob must be in [0,1], got {}", self.spawn_prob));
            }
            if !(1..=8).contains(&self.max_spawn) {
                return fail(&format!("max_spawn must be in [1,8], got {}", self.max_spawn));
            }
        }
        Ok(())
    }
}

impl Default for FloodParams {
    fn default() -> Self {
        FloodParams {
            r0: 0.0,
            delta_r: Self::default_delta_r(),
            delta_d: Self::default_delta_d(),
            spawn_prob: Self::default_spawn_prob(),
            max_spawn: Self::default_max_spawn(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FloodError {
    #[error("invalid parameters for {kind}: {what}")]
    BadParams { kind: FloodKind, what: String },
    #[error("cell ({x},{y}) is out of bounds for a {width}x{height} flood mask")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ping {
    cx: usize,
    cy: usize,
    radius: f64,
    /// Stamping shortcut: once the disc provably covers the whole map the
    /// ping contributes nothing new and is skipped.
    saturated: bool,
}

/// One hazard dynamics instance bound to a map's dimensions.
///
/// The mask is updated incrementally on [`FloodModel::tick`]; tests compare it
/// against a from-scratch recomputation oracle.
#[derive(Clone, Debug)]
pub struct FloodModel {
    kind: FloodKind,
    params: FloodParams,
    width: usize,
    height: usize,
    mask: Vec<bool>,
    hazard_count: usize,
    pings: Vec<Ping>,
    tick_count: u64,
    /// Consumed only by RandomPings; documented draw order in [`FloodModel::tick`].
    rng: ChaCha8Rng,
}

impl FloodModel {
    /// Tick-0 state: ping kinds hold one ping of radius `r0` at their fixed
    /// origin (stamped immediately), `LinearVertical` covers zero columns,
    /// `RandomPings` is empty with a fresh ChaCha8 stream from `rng_seed`.
    pub fn init(
        kind: FloodKind,
        params: FloodParams,
        map: &GridMap,
        rng_seed: u64,
    ) -> Result<FloodModel, FloodError> {
        params.validate(kind)?;
        let (width, height) = (map.width(), map.height());
        let mut model = FloodModel {
            kind,
            params,
            width,
            height,
            mask: vec![false; width * height],
            hazard_count: 0,
            pings: Vec::new(),
            tick_count: 0,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        };
        let origin = match kind {
            FloodKind::CentralPing => Some((width / 2, height / 2)),
            FloodKind::TopRightPing => Some((width - 1, 0)),
            FloodKind::BottomRightPing => Some((width - 1, height - 1)),
            FloodKind::LinearVertical | FloodKind::RandomPings => None,
        };
        if let Some((cx, cy)) = origin {
            model.push_ping(cx, cy, params.r0);
        }
        Ok(model)
    }

    pub fn kind(&self) -> FloodKind {
        self.kind
    }

    pub fn params(&self) -> FloodParams {
        self.params
    }

    pub fn tick_count(&self) -> u64 {
        self.tick_count
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Current mask, row-major.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn hazard_count(&self) -> usize {
        self.hazard_count
    }

    pub fn is_fully_flooded(&self) -> bool {
        self.hazard_count == self.mask.len()
    }

    /// Whether `cell` is currently hazarded.
    pub fn hazard_at(&self, cell: Cell) -> Result<bool, FloodError> {
        if cell.x >= self.width || cell.y >= self.height {
            return Err(FloodError::OutOfBounds {
                x: cell.x,
                y: cell.y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.mask[cell.y * self.width + cell.x])
    }

    /// Advances the dynamics by one tick.
    ///
    /// Ping kinds grow every ping by `delta_r` and stamp its disc (cells with
    /// Euclidean distance ≤ radius). `LinearVertical` hazards all columns
    /// ≥ w − ⌊t·delta_d⌋ after t ticks. `RandomPings` consumes its RNG stream
    /// in a fixed order that is part of the reproducibility contract:
    ///
    /// 1. `u = rng.gen::<f64>()` — one uniform draw in [0,1) every tick;
    /// 2. if `u < spawn_prob`: `k = rng.gen_range(1..=max_spawn)`, then `k`
    ///    times `idx = rng.gen_range(0..w*h)` for the new ping cells;
    /// 3. pre-existing pings grow by `delta_r`; the new pings then join at
    ///    radius `r0`, contributing coverage from this tick on.
    pub fn tick(&mut self) {
        self.tick_count += 1;
        match self.kind {
            FloodKind::CentralPing | FloodKind::TopRightPing | FloodKind::BottomRightPing => {
                self.grow_pings();
            }
            FloodKind::LinearVertical => {
                let advanced = (self.tick_count as f64 * self.params.delta_d).floor();
                // f64→usize casts saturate, so huge fronts clamp to full width.
                let columns = (advanced as usize).min(self.width);
                for x in self.width - columns..self.width {
                    for y in 0..self.height {
                        self.set_hazard(x, y);
                    }
                }
            }
            FloodKind::RandomPings => {
                let u = self.rng.gen::<f64>();
                let mut born = Vec::new();
                if u < self.params.spawn_prob {
                    let count = self.rng.gen_range(1..=self.params.max_spawn);
                    for _ in 0..count {
                        let idx = self.rng.gen_range(0..self.width * self.height);
                        born.push((idx % self.width, idx / self.width));
                    }
                }
                self.grow_pings();
                for (cx, cy) in born {
                    self.push_ping(cx, cy, self.params.r0);
                }
            }
        }
    }

    fn grow_pings(&mut self) {
        let mut pings = std::mem::take(&mut self.pings);
        for ping in &mut pings {
            ping.radius += self.params.delta_r;
            self.stamp_ping(ping);
        }
        self.pings = pings;
    }

    fn push_ping(&mut self, cx: usize, cy: usize, radius: f64) {
        let mut ping = Ping {
            cx,
            cy,
            radius,
            saturated: false,
        };
        self.stamp_ping(&mut ping);
        self.pings.push(ping);
    }

    /// Marks every cell of the ping's disc, scanning only the clipped
    /// bounding box. Radii are exact `f64`s; the comparison dx²+dy² ≤ r² is
    /// done in floating point on integer-valued squares, which is exact for
    /// any realistic map size.
    fn stamp_ping(&mut self, ping: &mut Ping) {
        if ping.saturated {
            return;
        }
        let r = ping.radius;
        let r2 = r * r;
        let reach = r.floor() as usize; // saturating for huge radii
        let x_lo = ping.cx.saturating_sub(reach);
        let x_hi = (ping.cx + reach.min(self.width)).min(self.width - 1);
        let y_lo = ping.cy.saturating_sub(reach);
        let y_hi = (ping.cy + reach.min(self.height)).min(self.height - 1);
        for y in y_lo..=y_hi {
            let dy = y.abs_diff(ping.cy) as f64;
            for x in x_lo..=x_hi {
                let dx = x.abs_diff(ping.cx) as f64;
                if dx * dx + dy * dy <= r2 {
                    self.set_hazard(x, y);
                }
            }
        }
        // The disc covers the map once every corner is within the radius.
        let corners_in = [(0, 0), (self.width - 1, 0), (0, self.height - 1), (self.width - 1, self.height - 1)]
            .into_iter()
            .all(|(x, y)| {
                let dx = ping.cx.abs_diff(x) as f64;
                let dy = ping.cy.abs_diff(y) as f64;
                dx * dx + dy * dy <= r2
            });
        if corners_in {
            ping.saturated = true;
        }
    }

    fn set_hazard(&mut self, x: usize, y: usize) {
        let idx = y * self.width + x;
        if !self.mask[idx] {
            self.mask[idx] = true;
            self.hazard_count += 1;
        }
    }
}
