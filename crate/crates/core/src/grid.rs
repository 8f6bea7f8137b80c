//! Static world representation: map model, ASCII (de)serialization, procedural
//! generation of sparse/dense obstacle maps, and reachability checks.
//!
//! A map is a `width × height` field of [`CellKind`]s plus two designated cell
//! pools: starts in the rightmost `⌈w/4⌉` columns, safe cells in the leftmost
//! `⌈w/4⌉` columns. Hazards are *not* terrain — they live in
//! [`crate::flood::FloodModel`] and evolve per tick; the `#` character in map
//! files is parsed as free terrain and surfaced only as diagnostics.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{self, derive_seed};

/// Grid coordinates: `x` is the column (0 = leftmost), `y` the row (0 = top).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Cell {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Static terrain. Hazard is dynamic state owned by the flood model, so the
/// set is deliberately two-valued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Free,
    Obstacle,
}

/// Obstacle density class for generated maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Sparse,
    Dense,
}

impl Density {
    /// Fraction of middle-band cells that become obstacles.
    pub fn fraction(self) -> f64 {
        match self {
            Density::Sparse => 0.05,
            Density::Dense => 0.20,
        }
    }

    /// Stable integer code used in seed derivation.
    pub(crate) fn code(self) -> u64 {
        match self {
            Density::Sparse => 0,
            Density::Dense => 1,
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Density::Sparse => "sparse",
            Density::Dense => "dense",
        })
    }
}

impl FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sparse" => Ok(Density::Sparse),
            "dense" => Ok(Density::Dense),
            other => Err(format!("unknown density {other:?} (expected sparse|dense)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("map header must be two positive integers `w h`, got {0:?}")]
    BadHeader(String),
    #[error("map must be at least 8x8, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("map dimensions {width}x{height} overflow the addressable cell count")]
    TooLarge { width: usize, height: usize },
    #[error("expected {expected} map rows after the header, found {found}")]
    WrongRowCount { expected: usize, found: usize },
    #[error("row at line {line} has {found} characters, expected {expected}")]
    WrongRowWidth {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid character {ch:?} at line {line}, column {column} (alphabet is `@.#SG`)")]
    InvalidChar { ch: char, line: usize, column: usize },
    #[error("terrain length {terrain_len} does not match {width}x{height}")]
    TerrainMismatch {
        terrain_len: usize,
        width: usize,
        height: usize,
    },
    #[error("start cell ({x},{y}) must be a free cell in the rightmost start band")]
    BadStartCell { x: usize, y: usize },
    #[error("safe cell ({x},{y}) must be a free cell in the leftmost safe band")]
    BadSafeCell { x: usize, y: usize },
    #[error("{pool} pool is empty; benchmark maps need at least one start and one safe cell")]
    EmptyPool { pool: &'static str },
    #[error("map generation failed: no start could reach a safe cell in {attempts} attempts")]
    GenerationFailed { attempts: u32 },
    #[error("cell ({x},{y}) is out of bounds for a {width}x{height} map")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("cell ({x},{y}) is an obstacle, expected a free cell")]
    NotFree { x: usize, y: usize },
}

/// Immutable static world. Construct via [`GridMap::new`], [`parse_map`] or
/// [`generate_map`]; safe to share across threads once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    terrain: Vec<CellKind>,
    start_pool: Vec<Cell>,
    safe_pool: Vec<Cell>,
    // Derived membership masks for O(1) adjudication during episodes.
    start_mask: Vec<bool>,
    safe_mask: Vec<bool>,
}

impl GridMap {
    /// Builds a map, enforcing every structural invariant: dimensions ≥ 8,
    /// terrain length, and pool cells free and inside their column bands.
    /// Pools are deduplicated and kept in row-major order. Pool emptiness is
    /// legal here; benchmark entry points call [`GridMap::validate_for_benchmark`].
    pub fn new(
        width: usize,
        height: usize,
        terrain: Vec<CellKind>,
        start_pool: Vec<Cell>,
        safe_pool: Vec<Cell>,
    ) -> Result<GridMap, GridError> {
        if width < 8 || height < 8 {
            return Err(GridError::TooSmall { width, height });
        }
        let cells = width
            .checked_mul(height)
            .ok_or(GridError::TooLarge { width, height })?;
        if terrain.len() != cells {
            return Err(GridError::TerrainMismatch {
                terrain_len: terrain.len(),
                width,
                height,
            });
        }

        let mut map = GridMap {
            width,
            height,
            terrain,
            start_pool,
            safe_pool,
            start_mask: vec![false; cells],
            safe_mask: vec![false; cells],
        };
        map.start_pool.sort_unstable_by_key(|c| (c.y, c.x));
        map.start_pool.dedup();
        map.safe_pool.sort_unstable_by_key(|c| (c.y, c.x));
        map.safe_pool.dedup();

        for &c in &map.start_pool {
            if !map.in_bounds(c) || !map.in_start_band(c) || map.kind_at(c) != CellKind::Free {
                return Err(GridError::BadStartCell { x: c.x, y: c.y });
            }
            map.start_mask[c.y * width + c.x] = true;
        }
        for &c in &map.safe_pool {
            if !map.in_bounds(c) || !map.in_safe_band(c) || map.kind_at(c) != CellKind::Free {
                return Err(GridError::BadSafeCell { x: c.x, y: c.y });
            }
            map.safe_mask[c.y * width + c.x] = true;
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Width of the start/safe column bands: the outer ⌈w/4⌉ columns.
    pub fn band_width(&self) -> usize {
        self.width.div_ceil(4)
    }

    pub fn in_safe_band(&self, cell: Cell) -> bool {
        cell.x < self.band_width()
    }

    pub fn in_start_band(&self, cell: Cell) -> bool {
        cell.x >= self.width - self.band_width()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Terrain at `cell`; panics if out of bounds (internal callers check).
    pub fn kind_at(&self, cell: Cell) -> CellKind {
        self.terrain[cell.y * self.width + cell.x]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && self.kind_at(cell) == CellKind::Free
    }

    pub fn is_start(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && self.start_mask[cell.y * self.width + cell.x]
    }

    pub fn is_safe(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && self.safe_mask[cell.y * self.width + cell.x]
    }

    /// Start cells in row-major order.
    pub fn start_pool(&self) -> &[Cell] {
        &self.start_pool
    }

    /// Safe cells in row-major order.
    pub fn safe_pool(&self) -> &[Cell] {
        &self.safe_pool
    }

    pub fn obstacle_count(&self) -> usize {
        self.terrain
            .iter()
            .filter(|&&k| k == CellKind::Obstacle)
            .count()
    }

    /// Serializes to the map file format: `w h` header line, then `height`
    /// rows over `@.SG`, each LF-terminated. Inverse of [`parse_map`] for
    /// documents without `#` seeds (see [`ParsedMap::to_text`] otherwise).
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * (self.height + 1));
        out.push_str(&format!("{} {}\n", self.width, self.height));
        for y in 0..self.height {
            for x in 0..self.width {
                let cell = Cell::new(x, y);
                let ch = if self.start_mask[y * self.width + x] {
                    'S'
                } else if self.safe_mask[y * self.width + x] {
                    'G'
                } else {
                    match self.kind_at(cell) {
                        CellKind::Obstacle => '@',
                        CellKind::Free => '.',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Checks the extra requirements a map must meet before it can back
    /// training or evaluation: both pools non-empty.
    pub fn validate_for_benchmark(&self) -> Result<(), GridError> {
        if self.start_pool.is_empty() {
            return Err(GridError::EmptyPool { pool: "start" });
        }
        if self.safe_pool.is_empty() {
            return Err(GridError::EmptyPool { pool: "safe" });
        }
        Ok(())
    }

    /// True when at least one start cell reaches at least one safe cell over
    /// 8-connected free cells.
    pub fn has_start_to_safe_path(&self) -> bool {
        if self.start_pool.is_empty() || self.safe_pool.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.terrain.len()];
        let mut queue: VecDeque<Cell> = VecDeque::new();
        for &s in &self.start_pool {
            seen[s.y * self.width + s.x] = true;
            queue.push_back(s);
        }
        while let Some(cell) = queue.pop_front() {
            if self.is_safe(cell) {
                return true;
            }
            for next in self.free_neighbors(cell) {
                let idx = next.y * self.width + next.x;
                if !seen[idx] {
                    seen[idx] = true;
                    queue.push_back(next);
                }
            }
        }
        false
    }

    fn free_neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let x = cell.x as isize + dx;
            let y = cell.y as isize + dy;
            if x < 0 || y < 0 {
                return None;
            }
            let next = Cell::new(x as usize, y as usize);
            self.is_free(next).then_some(next)
        })
    }
}

/// 8-connected neighborhood (the 3×3 mask minus its center).
const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Result of parsing a map document: the map plus the advisory `#` hazard-seed
/// cells (free terrain, reported for diagnostics only — live hazards come
/// from the flood model).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedMap {
    pub map: GridMap,
    pub hazard_seeds: Vec<Cell>,
}

impl ParsedMap {
    /// Serializes back to the exact source document, `#` seeds included.
    /// `parse_map(text).to_text() == text` byte-for-byte.
    pub fn to_text(&self) -> String {
        let mut out = self.map.to_text().into_bytes();
        // Overlay hazard seeds onto the rendered document (pure ASCII). Row y
        // starts after the header line at offset header_len + y*(w+1).
        let header_len = out
            .iter()
            .position(|&b| b == b'\n')
            .expect("header line ends with LF")
            + 1;
        let width = self.map.width();
        for &c in &self.hazard_seeds {
            out[header_len + c.y * (width + 1) + c.x] = b'#';
        }
        String::from_utf8(out).expect("map documents are ASCII")
    }
}

/// Parses the ASCII map format: line 1 `w h`, then exactly `h` rows of exactly
/// `w` characters over `@.#SG`. `S`/`G` cells are free terrain recorded in the
/// start/safe pools; `#` cells are free terrain recorded as hazard seeds.
pub fn parse_map(text: &str) -> Result<ParsedMap, GridError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(GridError::BadHeader(String::new()));
    }

    let header = lines[0];
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|tok| tok.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| GridError::BadHeader(header.to_string()))?;
    let [width, height] = dims[..] else {
        return Err(GridError::BadHeader(header.to_string()));
    };
    if width == 0 || height == 0 {
        return Err(GridError::BadHeader(header.to_string()));
    }
    if width < 8 || height < 8 {
        return Err(GridError::TooSmall { width, height });
    }
    let cells = width
        .checked_mul(height)
        .ok_or(GridError::TooLarge { width, height })?;

    let rows = &lines[1..];
    if rows.len() != height {
        return Err(GridError::WrongRowCount {
            expected: height,
            found: rows.len(),
        });
    }

    let mut terrain = Vec::with_capacity(cells);
    let mut start_pool = Vec::new();
    let mut safe_pool = Vec::new();
    let mut hazard_seeds = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        let line = y + 2; // 1-based document line number
        let mut row_width = 0;
        for (x, ch) in row.chars().enumerate() {
            let cell = Cell::new(x, y);
            let kind = match ch {
                '@' => CellKind::Obstacle,
                '.' => CellKind::Free,
                '#' => {
                    hazard_seeds.push(cell);
                    CellKind::Free
                }
                'S' => {
                    start_pool.push(cell);
                    CellKind::Free
                }
                'G' => {
                    safe_pool.push(cell);
                    CellKind::Free
                }
                other => {
                    return Err(GridError::InvalidChar {
                        ch: other,
                        line,
                        column: x + 1,
                    })
                }
            };
            terrain.push(kind);
            row_width += 1;
        }
        if row_width != width {
            return Err(GridError::WrongRowWidth {
                line,
                expected: width,
                found: row_width,
            });
        }
    }

    let map = GridMap::new(width, height, terrain, start_pool, safe_pool)?;
    Ok(ParsedMap { map, hazard_seeds })
}

/// Procedurally generates a map: obstacles placed uniformly at random over the
/// middle columns (the outer ⌈w/4⌉ bands stay clear and become the pools),
/// with the obstacle count fixed at ⌊fraction × middle cells⌋. Regenerates
/// with a fresh sub-seed until some start reaches some safe cell, up to 100
/// attempts. Pure function of its arguments.
pub fn generate_map(
    width: usize,
    height: usize,
    density: Density,
    rng_seed: u64,
) -> Result<GridMap, GridError> {
    const MAX_ATTEMPTS: u32 = 100;

    if width < 8 || height < 8 {
        return Err(GridError::TooSmall { width, height });
    }
    let cells = width
        .checked_mul(height)
        .ok_or(GridError::TooLarge { width, height })?;

    let band = width.div_ceil(4);
    let mut middle_cells: Vec<usize> = Vec::with_capacity(cells);
    for y in 0..height {
        for x in band..width - band {
            middle_cells.push(y * width + x);
        }
    }
    let obstacle_count = (density.fraction() * middle_cells.len() as f64).floor() as usize;

    let band_cells = |terrain: &[CellKind], cols: std::ops::Range<usize>| -> Vec<Cell> {
        let mut pool = Vec::new();
        for y in 0..height {
            for x in cols.clone() {
                if terrain[y * width + x] == CellKind::Free {
                    pool.push(Cell::new(x, y));
                }
            }
        }
        pool
    };

    for attempt in 0..MAX_ATTEMPTS {
        let sub_seed = derive_seed(&[rng_seed, seed::ROLE_MAPGEN_ATTEMPT, attempt as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);

        let mut terrain = vec![CellKind::Free; cells];
        // Partial Fisher–Yates: the first `obstacle_count` entries of the
        // shuffled prefix are a uniform distinct sample of the middle cells.
        let mut pool = middle_cells.clone();
        for i in 0..obstacle_count {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
            terrain[pool[i]] = CellKind::Obstacle;
        }

        let start_pool = band_cells(&terrain, width - band..width);
        let safe_pool = band_cells(&terrain, 0..band);
        let map = GridMap::new(width, height, terrain, start_pool, safe_pool)
            .expect("generated maps satisfy structural invariants");
        if map.has_start_to_safe_path() {
            return Ok(map);
        }
    }
    Err(GridError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Length in steps of the shortest 8-connected path between two free cells,
/// or `None` when disconnected. Ignores hazards: this is the static-world
/// oracle used to validate maps and judge policies.
pub fn shortest_path(map: &GridMap, from: Cell, to: Cell) -> Result<Option<usize>, GridError> {
    for cell in [from, to] {
        if !map.in_bounds(cell) {
            return Err(GridError::OutOfBounds {
                x: cell.x,
                y: cell.y,
                width: map.width(),
                height: map.height(),
            });
        }
        if map.kind_at(cell) != CellKind::Free {
            return Err(GridError::NotFree {
                x: cell.x,
                y: cell.y,
            });
        }
    }

    if from == to {
        return Ok(Some(0));
    }
    let width = map.width();
    let mut dist: Vec<Option<usize>> = vec![None; width * map.height()];
    dist[from.y * width + from.x] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        let d = dist[cell.y * width + cell.x].expect("queued cells have distances");
        for next in map.free_neighbors(cell) {
            let idx = next.y * width + next.x;
            if dist[idx].is_none() {
                if next == to {
                    return Ok(Some(d + 1));
                }
                dist[idx] = Some(d + 1);
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}
