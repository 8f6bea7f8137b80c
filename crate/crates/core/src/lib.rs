//! Flooded grid worlds for reinforcement-learning experiments.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] — static maps: parsing, generation, shortest paths.
//! * [`flood`] — deterministic hazard dynamics layered on top of a map.
//! * [`engine`] — episode simulation and the agent's partial observation.
//! * [`learn`] — tabular single/double Q-learning over string state keys.
//! * [`bench`] — the seeded, parallel benchmark harness and its outputs.
//!
//! Everything downstream of a seed is reproducible: the same seeds produce
//! byte-identical map files, trajectories, snapshots and CSV reports on any
//! platform and at any worker count.

pub mod bench;
pub mod engine;
pub mod flood;
pub mod grid;
pub mod learn;
pub mod seed;

pub use bench::{BenchReport, ExperimentConfig, FloodSpec, Outcome, SuccessCurve};
pub use engine::{Action, Episode, EpisodeStatus, Observation};
pub use flood::{FloodKind, FloodModel, FloodParams};
pub use grid::{Cell, CellKind, Density, GridMap, ParsedMap};
pub use learn::{LearnerConfig, QTablePair};
