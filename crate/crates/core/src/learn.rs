//! Tabular learning core: a dynamically growing Q-table pair, interleaved
//! double Q-learning, the boundary-scaled variant, a single-Q baseline, and
//! ε-greedy selection with multiplicative decay.
//!
//! Tables are keyed by opaque state strings (the engine's observation keys,
//! or anything else); every row is an 8-entry action-value vector created on
//! first touch with zeros. The canonical double target is
//! `reward + γ · Q_other(s', argmax Q_self(s', ·))` with ties broken toward
//! the lowest action code.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Action;

pub const ACTION_COUNT: usize = 8;

/// One Q-table row.
pub type ActionValues = [f64; ACTION_COUNT];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    DoubleQ,
    BoundaryDoubleQ,
    SingleQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interleave {
    /// Strict Q, U, Q, U, … turn taking.
    Alternate,
    /// Turn re-randomized from the pair's own stream after every update.
    CoinFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSchedule {
    Constant,
    /// α = 1/(visit count of the updated (table, key, action)).
    InverseVisits,
}

/// Which table of the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableId {
    Q,
    U,
}

impl TableId {
    pub fn label(self) -> &'static str {
        match self {
            TableId::Q => "Q",
            TableId::U => "U",
        }
    }

    pub fn other(self) -> TableId {
        match self {
            TableId::Q => TableId::U,
            TableId::U => TableId::Q,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("reward {0} is outside [0,1]")]
    RewardOutOfRange(f64),
    #[error("invalid learner config: {0}")]
    BadConfig(String),
    #[error("snapshot line {line}: {reason}")]
    BadSnapshot { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    /// Learning rate ∈ (0,1] (ignored when `alpha_schedule` is InverseVisits).
    pub alpha: f64,
    /// Discount ∈ [0,1).
    pub gamma: f64,
    /// Initial exploration threshold ∈ [0,1].
    pub epsilon0: f64,
    /// Multiplicative decay ∈ (0,1], applied per episode (or per step when
    /// `decay_per_step` is set).
    pub epsilon_decay: f64,
    /// Exploration floor ≥ 0.
    pub epsilon_min: f64,
    pub update_rule: UpdateRule,
    pub interleave: Interleave,
    pub alpha_schedule: AlphaSchedule,
    pub decay_per_step: bool,
}

impl Default for LearnerConfig {
    /// Desk-scale defaults: tuned so the stock benchmark converges within a
    /// few thousand episodes per unit. Much slower exploration decay than the
    /// textbook 0.99 because sparse terminal rewards on 32×32 maps need the
    /// random-walk phase to last long enough to find the safe band at all;
    /// with faster decay whole maps never see a single success.
    fn default() -> Self {
        LearnerConfig {
            alpha: 0.25,
            gamma: 0.95,
            epsilon0: 1.0,
            epsilon_decay: 0.999,
            epsilon_min: 0.01,
            update_rule: UpdateRule::DoubleQ,
            interleave: Interleave::Alternate,
            alpha_schedule: AlphaSchedule::Constant,
            decay_per_step: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |what: String| Err(LearnError::BadConfig(what));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0,1], got {}", self.alpha));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in [0,1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return bad(format!("epsilon0 must be in [0,1], got {}", self.epsilon0));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad(format!(
                "epsilon_decay must be in (0,1], got {}",
                self.epsilon_decay
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad(format!("epsilon_min must be in [0,1], got {}", self.epsilon_min));
        }
        Ok(())
    }
}

/// `epsilon' = max(epsilon_min, epsilon × epsilon_decay)`.
pub fn decay_epsilon(epsilon: f64, cfg: &LearnerConfig) -> f64 {
    (epsilon * cfg.epsilon_decay).max(cfg.epsilon_min)
}

/// Argmax with ties broken toward the lowest action code — determinism for
/// reproducible runs.
pub fn greedy_action(values: &ActionValues) -> Action {
    let mut best = 0usize;
    for (code, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = code;
        }
    }
    Action::from_code(best).expect("codes 0..8 are valid actions")
}

/// ε-greedy selection: draw `var` uniform in [0,1); exploit (argmax) when
/// `var ≥ epsilon`, otherwise pick uniformly at random. Thus ε = 0 always
/// exploits (the var = 0 draw included) and ε = 1 always explores. Consumes
/// exactly one draw when exploiting and two when exploring.
pub fn select_action<R: Rng + ?Sized>(values: &ActionValues, epsilon: f64, rng: &mut R) -> Action {
    let var: f64 = rng.gen();
    if var < epsilon {
        Action::from_code(rng.gen_range(0..ACTION_COUNT)).expect("codes 0..8 are valid actions")
    } else {
        greedy_action(values)
    }
}

/// The two dynamically growing tables plus the interleaving turn. Rows
/// materialize as zero vectors when an update first touches their key.
#[derive(Clone, Debug)]
pub struct QTablePair {
    table_q: HashMap<String, ActionValues>,
    table_u: HashMap<String, ActionValues>,
    visits_q: HashMap<String, [u32; ACTION_COUNT]>,
    visits_u: HashMap<String, [u32; ACTION_COUNT]>,
    turn: TableId,
    turn_rng: ChaCha8Rng,
}

impl QTablePair {
    /// Fresh empty pair; Q updates first. `turn_seed` feeds the CoinFlip
    /// interleave stream only.
    pub fn new(turn_seed: u64) -> QTablePair {
        QTablePair {
            table_q: HashMap::new(),
            table_u: HashMap::new(),
            visits_q: HashMap::new(),
            visits_u: HashMap::new(),
            turn: TableId::Q,
            turn_rng: ChaCha8Rng::seed_from_u64(turn_seed),
        }
    }

    pub fn turn(&self) -> TableId {
        self.turn
    }

    pub fn set_turn(&mut self, turn: TableId) {
        self.turn = turn;
    }

    fn table(&self, id: TableId) -> &HashMap<String, ActionValues> {
        match id {
            TableId::Q => &self.table_q,
            TableId::U => &self.table_u,
        }
    }

    fn table_mut(&mut self, id: TableId) -> &mut HashMap<String, ActionValues> {
        match id {
            TableId::Q => &mut self.table_q,
            TableId::U => &mut self.table_u,
        }
    }

    /// Row copy; zeros when the key has never been materialized.
    pub fn row(&self, id: TableId, key: &str) -> ActionValues {
        self.table(id).get(key).copied().unwrap_or([0.0; ACTION_COUNT])
    }

    pub fn set_row(&mut self, id: TableId, key: &str, values: ActionValues) {
        self.table_mut(id).insert(key.to_string(), values);
    }

    pub fn has_row(&self, id: TableId, key: &str) -> bool {
        self.table(id).contains_key(key)
    }

    pub fn row_count(&self, id: TableId) -> usize {
        self.table(id).len()
    }

    /// Iterates a table's rows in arbitrary order.
    pub fn rows(&self, id: TableId) -> impl Iterator<Item = (&str, &ActionValues)> {
        self.table(id).iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Elementwise mean of both tables' rows — the selection view feeding
    /// ε-greedy. Missing keys read as zero vectors and are not materialized.
    pub fn selection_values(&self, key: &str) -> ActionValues {
        let q = self.row(TableId::Q, key);
        let u = self.row(TableId::U, key);
        let mut mean = [0.0; ACTION_COUNT];
        for (m, (a, b)) in mean.iter_mut().zip(q.iter().zip(u.iter())) {
            *m = (a + b) / 2.0;
        }
        mean
    }

    /// Dispatches on `cfg.update_rule`.
    pub fn update(
        &mut self,
        cfg: &LearnerConfig,
        key: &str,
        action: Action,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> Result<(), LearnError> {
        match cfg.update_rule {
            UpdateRule::DoubleQ => self.update_double_q(cfg, key, action, reward, next_key, terminal),
            UpdateRule::BoundaryDoubleQ => {
                self.update_boundary(cfg, key, action, reward, next_key, terminal)
            }
            UpdateRule::SingleQ => self.update_single_q(cfg, key, action, reward, next_key, terminal),
        }
    }

    /// One interleaved double Q-learning update. With (A, B) = (Q, U) on Q's
    /// turn (else swapped): `a* = argmax A[s']`, `target = r` if terminal
    /// else `r + γ·B[s'][a*]`, then `A[s][a] += α·(target − A[s][a])`.
    /// Missing keys the update touches materialize as zero rows first. The
    /// turn then flips (Alternate) or re-randomizes (CoinFlip).
    pub fn update_double_q(
        &mut self,
        cfg: &LearnerConfig,
        key: &str,
        action: Action,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> Result<(), LearnError> {
        self.double_core(cfg, false, key, action, reward, next_key, terminal)
    }

    /// The boundary-scaled variant: the TD step is additionally multiplied by
    /// the self scale factor `1 − A[s][a]`, making 1 a fixed point.
    ///
    /// Keeps every stored value in [0,1] provided targets stay in [0,1] —
    /// guaranteed with terminal-only unit rewards, or for any reward stream
    /// when `α·(1+γ) ≤ 1` (the defaults satisfy this).
    pub fn update_boundary(
        &mut self,
        cfg: &LearnerConfig,
        key: &str,
        action: Action,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> Result<(), LearnError> {
        self.double_core(cfg, true, key, action, reward, next_key, terminal)
    }

    #[allow(clippy::too_many_arguments)]
    fn double_core(
        &mut self,
        cfg: &LearnerConfig,
        boundary: bool,
        key: &str,
        action: Action,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> Result<(), LearnError> {
        validate_reward(reward)?;
        let updating = self.turn;
        self.ensure_row(updating, key);
        let target = if terminal {
            reward
        } else {
            self.ensure_row(updating, next_key);
            self.ensure_row(updating.other(), next_key);
            let a_star = greedy_action(&self.row(updating, next_key));
            reward + cfg.gamma * self.row(updating.other(), next_key)[a_star.code()]
        };
        let alpha = self.effective_alpha(cfg, updating, key, action);
        let entry = self
            .table_mut(updating)
            .get_mut(key)
            .expect("row was materialized above");
        let old = entry[action.code()];
        let mut td = alpha * (target - old);
        if boundary {
            td *= 1.0 - old;
        }
        entry[action.code()] = old + td;
        self.advance_turn(cfg);
        Ok(())
    }

    /// Classical single-estimator baseline on tableQ only:
    /// `Q[s][a] += α·(r + γ·max Q[s'] − Q[s][a])`. The turn is untouched.
    pub fn update_single_q(
        &mut self,
        cfg: &LearnerConfig,
        key: &str,
        action: Action,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> Result<(), LearnError> {
        validate_reward(reward)?;
        self.ensure_row(TableId::Q, key);
        let target = if terminal {
            reward
        } else {
            self.ensure_row(TableId::Q, next_key);
            let next = self.row(TableId::Q, next_key);
            reward + cfg.gamma * next[greedy_action(&next).code()]
        };
        let alpha = self.effective_alpha(cfg, TableId::Q, key, action);
        let entry = self
            .table_mut(TableId::Q)
            .get_mut(key)
            .expect("row was materialized above");
        let old = entry[action.code()];
        entry[action.code()] = old + alpha * (target - old);
        Ok(())
    }

    fn ensure_row(&mut self, id: TableId, key: &str) {
        let table = self.table_mut(id);
        if !table.contains_key(key) {
            table.insert(key.to_string(), [0.0; ACTION_COUNT]);
        }
    }

    fn effective_alpha(&mut self, cfg: &LearnerConfig, id: TableId, key: &str, action: Action) -> f64 {
        match cfg.alpha_schedule {
            AlphaSchedule::Constant => cfg.alpha,
            AlphaSchedule::InverseVisits => {
                let visits = match id {
                    TableId::Q => &mut self.visits_q,
                    TableId::U => &mut self.visits_u,
                };
                let counts = visits.entry(key.to_string()).or_insert([0; ACTION_COUNT]);
                counts[action.code()] += 1;
                1.0 / counts[action.code()] as f64
            }
        }
    }

    fn advance_turn(&mut self, cfg: &LearnerConfig) {
        self.turn = match cfg.interleave {
            Interleave::Alternate => self.turn.other(),
            Interleave::CoinFlip => {
                if self.turn_rng.gen_bool(0.5) {
                    TableId::Q
                } else {
                    TableId::U
                }
            }
        };
    }

    /// Snapshot: one record per (table, key), `table_id<TAB>key<TAB>v0..v7`
    /// (tab-separated values at 17 significant digits), LF line endings,
    /// sorted by (table_id, key). Byte-stable for identical tables.
    pub fn snapshot_string(&self) -> String {
        let mut out = String::new();
        for id in [TableId::Q, TableId::U] {
            let mut keys: Vec<&String> = self.table(id).keys().collect();
            keys.sort_unstable();
            for key in keys {
                let _ = write!(out, "{}\t{}", id.label(), key);
                for v in &self.table(id)[key] {
                    let _ = write!(out, "\t{v:.16e}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write_snapshot<W: io::Write>(&self, mut writer: W) -> io::Result<()> {
        writer.write_all(self.snapshot_string().as_bytes())
    }

    /// Rebuilds a pair from snapshot text. Snapshots carry values only: the
    /// restored pair starts on Q's turn with fresh visit counts and a zero
    /// coin-flip stream (snapshots feed evaluation, not resumed training).
    pub fn from_snapshot_str(text: &str) -> Result<QTablePair, LearnError> {
        let mut pair = QTablePair::new(0);
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let bad = |reason: String| LearnError::BadSnapshot {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 + ACTION_COUNT {
                return Err(bad(format!(
                    "expected {} tab-separated fields, found {}",
                    2 + ACTION_COUNT,
                    fields.len()
                )));
            }
            let id = match fields[0] {
                "Q" => TableId::Q,
                "U" => TableId::U,
                other => return Err(bad(format!("unknown table id {other:?}"))),
            };
            let mut values = [0.0; ACTION_COUNT];
            for (slot, raw) in values.iter_mut().zip(&fields[2..]) {
                *slot = raw
                    .parse::<f64>()
                    .map_err(|e| bad(format!("bad value {raw:?}: {e}")))?;
            }
            pair.set_row(id, fields[1], values);
        }
        Ok(pair)
    }

    pub fn read_snapshot<R: io::Read>(mut reader: R) -> io::Result<Result<QTablePair, LearnError>> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Ok(Self::from_snapshot_str(&text))
    }
}

fn validate_reward(reward: f64) -> Result<(), LearnError> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(LearnError::RewardOutOfRange(reward));
    }
    Ok(())
}
