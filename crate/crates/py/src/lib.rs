//! Python bindings: thin wrappers over the hazardgrid core types, with string
//! arguments in place of the Rust enums and tuples in place of `Cell`.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use hazardgrid::engine::{Episode, EngineOptions, EpisodeStatus};
use hazardgrid::flood::{FloodKind, FloodModel, FloodParams};
use hazardgrid::grid::{generate_map, parse_map, shortest_path, Cell, Density, GridMap, ParsedMap};
use hazardgrid::learn::{
    decay_epsilon, greedy_action, select_action, ActionValues, AlphaSchedule, Interleave,
    LearnerConfig, QTablePair, TableId, UpdateRule, ACTION_COUNT,
};
use hazardgrid::Action;

fn val_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_kind(kind: &str) -> PyResult<FloodKind> {
    kind.parse().map_err(val_err)
}

fn parse_density(density: &str) -> PyResult<Density> {
    density.parse().map_err(val_err)
}

fn parse_action(code: usize) -> PyResult<Action> {
    Action::from_code(code)
        .ok_or_else(|| PyValueError::new_err(format!("action code must be 0..8, got {code}")))
}

fn parse_table(table: &str) -> PyResult<TableId> {
    match table {
        "Q" => Ok(TableId::Q),
        "U" => Ok(TableId::U),
        other => Err(PyValueError::new_err(format!(
            "table must be \"Q\" or \"U\", got {other:?}"
        ))),
    }
}

fn status_name(status: EpisodeStatus) -> &'static str {
    match status {
        EpisodeStatus::Running => "running",
        EpisodeStatus::Success => "success",
        EpisodeStatus::Drowned => "drowned",
        EpisodeStatus::TimedOut => "timed_out",
    }
}

/// Optional per-field overrides on top of the stock flood parameters.
fn overlay_params(
    r0: Option<f64>,
    delta_r: Option<f64>,
    delta_d: Option<f64>,
    spawn_prob: Option<f64>,
    max_spawn: Option<u32>,
) -> FloodParams {
    let mut params = FloodParams::default();
    if let Some(v) = r0 {
        params.r0 = v;
    }
    if let Some(v) = delta_r {
        params.delta_r = v;
    }
    if let Some(v) = delta_d {
        params.delta_d = v;
    }
    if let Some(v) = spawn_prob {
        params.spawn_prob = v;
    }
    if let Some(v) = max_spawn {
        params.max_spawn = v;
    }
    params
}

/// A static grid world. Construct with `Map.generate` or `Map.parse`.
#[pyclass(name = "Map", module = "hazardgrid_py")]
struct PyMap {
    map: Arc<GridMap>,
    hazard_seeds: Vec<Cell>,
}

#[pymethods]
impl PyMap {
    #[staticmethod]
    fn generate(width: usize, height: usize, density: &str, seed: u64) -> PyResult<Self> {
        let map = generate_map(width, height, parse_density(density)?, seed).map_err(val_err)?;
        Ok(PyMap {
            map: Arc::new(map),
            hazard_seeds: Vec::new(),
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let parsed = parse_map(text).map_err(val_err)?;
        Ok(PyMap {
            map: Arc::new(parsed.map),
            hazard_seeds: parsed.hazard_seeds,
        })
    }

    fn to_text(&self) -> String {
        ParsedMap {
            map: (*self.map).clone(),
            hazard_seeds: self.hazard_seeds.clone(),
        }
        .to_text()
    }

    #[getter]
    fn width(&self) -> usize {
        self.map.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.map.height()
    }

    #[getter]
    fn obstacle_count(&self) -> usize {
        self.map.obstacle_count()
    }

    fn is_free(&self, x: usize, y: usize) -> bool {
        self.map.is_free(Cell::new(x, y))
    }

    fn start_pool(&self) -> Vec<(usize, usize)> {
        self.map.start_pool().iter().map(|c| (c.x, c.y)).collect()
    }

    fn safe_pool(&self) -> Vec<(usize, usize)> {
        self.map.safe_pool().iter().map(|c| (c.x, c.y)).collect()
    }

    /// Steps of the shortest 8-connected path, or None when disconnected.
    fn shortest_path(&self, from: (usize, usize), to: (usize, usize)) -> PyResult<Option<usize>> {
        shortest_path(&self.map, Cell::new(from.0, from.1), Cell::new(to.0, to.1)).map_err(val_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Map({}x{}, {} obstacles)",
            self.map.width(),
            self.map.height(),
            self.map.obstacle_count()
        )
    }
}

/// A flood evolving over a map, independent of any episode.
#[pyclass(name = "Flood", module = "hazardgrid_py")]
struct PyFlood {
    flood: FloodModel,
}

#[pymethods]
impl PyFlood {
    #[new]
    #[pyo3(signature = (kind, map, seed=0, r0=None, delta_r=None, delta_d=None, spawn_prob=None, max_spawn=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        map: &PyMap,
        seed: u64,
        r0: Option<f64>,
        delta_r: Option<f64>,
        delta_d: Option<f64>,
        spawn_prob: Option<f64>,
        max_spawn: Option<u32>,
    ) -> PyResult<Self> {
        let params = overlay_params(r0, delta_r, delta_d, spawn_prob, max_spawn);
        let flood = FloodModel::init(parse_kind(kind)?, params, &map.map, seed).map_err(val_err)?;
        Ok(PyFlood { flood })
    }

    fn tick(&mut self) {
        self.flood.tick();
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.flood.kind().name()
    }

    #[getter]
    fn tick_count(&self) -> u64 {
        self.flood.tick_count()
    }

    #[getter]
    fn hazard_count(&self) -> usize {
        self.flood.hazard_count()
    }

    #[getter]
    fn fully_flooded(&self) -> bool {
        self.flood.is_fully_flooded()
    }

    fn hazard_at(&self, x: usize, y: usize) -> PyResult<bool> {
        self.flood.hazard_at(Cell::new(x, y)).map_err(val_err)
    }

    /// Row-major hazard mask (index y*width + x).
    fn mask(&self) -> Vec<bool> {
        self.flood.mask().to_vec()
    }
}

/// Learner hyperparameters; enum fields take their snake_case names.
#[pyclass(name = "LearnerConfig", module = "hazardgrid_py")]
struct PyLearnerConfig {
    cfg: LearnerConfig,
}

#[pymethods]
impl PyLearnerConfig {
    #[new]
    #[pyo3(signature = (
        alpha=None, gamma=None, epsilon0=None, epsilon_decay=None, epsilon_min=None,
        update_rule=None, interleave=None, alpha_schedule=None, decay_per_step=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha: Option<f64>,
        gamma: Option<f64>,
        epsilon0: Option<f64>,
        epsilon_decay: Option<f64>,
        epsilon_min: Option<f64>,
        update_rule: Option<&str>,
        interleave: Option<&str>,
        alpha_schedule: Option<&str>,
        decay_per_step: Option<bool>,
    ) -> PyResult<Self> {
        let mut cfg = LearnerConfig::default();
        if let Some(v) = alpha {
            cfg.alpha = v;
        }
        if let Some(v) = gamma {
            cfg.gamma = v;
        }
        if let Some(v) = epsilon0 {
            cfg.epsilon0 = v;
        }
        if let Some(v) = epsilon_decay {
            cfg.epsilon_decay = v;
        }
        if let Some(v) = epsilon_min {
            cfg.epsilon_min = v;
        }
        if let Some(v) = update_rule {
            cfg.update_rule = match v {
                "double_q" => UpdateRule::DoubleQ,
                "boundary_double_q" => UpdateRule::BoundaryDoubleQ,
                "single_q" => UpdateRule::SingleQ,
                other => return Err(PyValueError::new_err(format!("unknown update_rule {other:?}"))),
            };
        }
        if let Some(v) = interleave {
            cfg.interleave = match v {
                "alternate" => Interleave::Alternate,
                "coin_flip" => Interleave::CoinFlip,
                other => return Err(PyValueError::new_err(format!("unknown interleave {other:?}"))),
            };
        }
        if let Some(v) = alpha_schedule {
            cfg.alpha_schedule = match v {
                "constant" => AlphaSchedule::Constant,
                "inverse_visits" => AlphaSchedule::InverseVisits,
                other => {
                    return Err(PyValueError::new_err(format!("unknown alpha_schedule {other:?}")))
                }
            };
        }
        if let Some(v) = decay_per_step {
            cfg.decay_per_step = v;
        }
        cfg.validate().map_err(val_err)?;
        Ok(PyLearnerConfig { cfg })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }

    #[getter]
    fn epsilon0(&self) -> f64 {
        self.cfg.epsilon0
    }

    #[getter]
    fn epsilon_decay(&self) -> f64 {
        self.cfg.epsilon_decay
    }

    #[getter]
    fn epsilon_min(&self) -> f64 {
        self.cfg.epsilon_min
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.cfg)
    }
}

/// One live episode: a map, a flood stream, and an agent.
#[pyclass(name = "Episode", module = "hazardgrid_py")]
struct PyEpisode {
    episode: Episode,
}

#[pymethods]
impl PyEpisode {
    #[new]
    #[pyo3(signature = (
        map, flood_kind, start, step_budget=None, seed=0, step_penalty=0.0,
        key_includes_flood_kind=false,
        r0=None, delta_r=None, delta_d=None, spawn_prob=None, max_spawn=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        map: &PyMap,
        flood_kind: &str,
        start: (usize, usize),
        step_budget: Option<u32>,
        seed: u64,
        step_penalty: f64,
        key_includes_flood_kind: bool,
        r0: Option<f64>,
        delta_r: Option<f64>,
        delta_d: Option<f64>,
        spawn_prob: Option<f64>,
        max_spawn: Option<u32>,
    ) -> PyResult<Self> {
        let budget = step_budget.unwrap_or_else(|| Episode::default_step_budget(&map.map));
        let episode = Episode::reset_with_options(
            Arc::clone(&map.map),
            parse_kind(flood_kind)?,
            overlay_params(r0, delta_r, delta_d, spawn_prob, max_spawn),
            Cell::new(start.0, start.1),
            budget,
            seed,
            EngineOptions {
                step_penalty,
                key_includes_flood_kind,
            },
        )
        .map_err(val_err)?;
        Ok(PyEpisode { episode })
    }

    /// Dict with the window, sonar, state key and flood hint.
    fn observe<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let obs = self.episode.observe().map_err(val_err)?;
        let out = PyDict::new(py);
        let window: Vec<Vec<u8>> = obs.feature_map.iter().map(|row| row.to_vec()).collect();
        out.set_item("feature_map", window)?;
        out.set_item("sonar", obs.sonar.to_vec())?;
        out.set_item("key", obs.key)?;
        out.set_item("flood_kind", obs.flood_hint.name())?;
        Ok(out)
    }

    /// Returns (reward, terminal, status).
    fn step(&mut self, action: usize) -> PyResult<(f64, bool, &'static str)> {
        let out = self.episode.step(parse_action(action)?).map_err(val_err)?;
        Ok((out.reward, out.terminal, status_name(out.status)))
    }

    #[getter]
    fn status(&self) -> &'static str {
        status_name(self.episode.status())
    }

    #[getter]
    fn agent(&self) -> (usize, usize) {
        let cell = self.episode.agent();
        (cell.x, cell.y)
    }

    #[getter]
    fn tick(&self) -> u64 {
        self.episode.tick()
    }

    #[getter]
    fn steps_remaining(&self) -> u32 {
        self.episode.steps_remaining()
    }
}

/// The double Q-table pair plus its turn state.
#[pyclass(name = "QTables", module = "hazardgrid_py")]
struct PyQTables {
    pair: QTablePair,
}

#[pymethods]
impl PyQTables {
    #[new]
    #[pyo3(signature = (turn_seed=0))]
    fn new(turn_seed: u64) -> Self {
        PyQTables {
            pair: QTablePair::new(turn_seed),
        }
    }

    #[staticmethod]
    fn from_snapshot(text: &str) -> PyResult<Self> {
        Ok(PyQTables {
            pair: QTablePair::from_snapshot_str(text).map_err(val_err)?,
        })
    }

    fn update(
        &mut self,
        cfg: &PyLearnerConfig,
        key: &str,
        action: usize,
        reward: f64,
        next_key: &str,
        terminal: bool,
    ) -> PyResult<()> {
        self.pair
            .update(&cfg.cfg, key, parse_action(action)?, reward, next_key, terminal)
            .map_err(val_err)
    }

    /// Greedy action code over the mean of both tables.
    fn greedy(&self, key: &str) -> usize {
        greedy_action(&self.pair.selection_values(key)).code()
    }

    fn selection_values(&self, key: &str) -> Vec<f64> {
        self.pair.selection_values(key).to_vec()
    }

    fn row(&self, table: &str, key: &str) -> PyResult<Vec<f64>> {
        Ok(self.pair.row(parse_table(table)?, key).to_vec())
    }

    fn row_count(&self, table: &str) -> PyResult<usize> {
        Ok(self.pair.row_count(parse_table(table)?))
    }

    fn snapshot(&self) -> String {
        self.pair.snapshot_string()
    }

    #[getter]
    fn turn(&self) -> &'static str {
        self.pair.turn().label()
    }
}

/// ε-greedy selection on an 8-value row, with its own seeded stream.
#[pyfunction]
#[pyo3(name = "select_action", signature = (values, epsilon, seed=0))]
fn py_select_action(values: Vec<f64>, epsilon: f64, seed: u64) -> PyResult<usize> {
    if values.len() != ACTION_COUNT {
        return Err(PyValueError::new_err(format!(
            "expected {ACTION_COUNT} action values, got {}",
            values.len()
        )));
    }
    let mut row: ActionValues = [0.0; ACTION_COUNT];
    row.copy_from_slice(&values);
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(select_action(&row, epsilon, &mut rng).code())
}

#[pyfunction]
#[pyo3(name = "decay_epsilon")]
fn py_decay_epsilon(epsilon: f64, cfg: &PyLearnerConfig) -> f64 {
    decay_epsilon(epsilon, &cfg.cfg)
}

/// The stock desk-scale experiment config as pretty JSON.
#[pyfunction]
fn desk_config() -> String {
    hazardgrid::ExperimentConfig::default().to_json_pretty()
}

/// Runs the benchmark (stock config when `config_json` is None), optionally
/// writing results.csv / curves.csv / curves.svg, and returns the per-group
/// success curves as dicts.
#[pyfunction]
#[pyo3(signature = (config_json=None, out_dir=None, threads=0))]
fn run_benchmark<'py>(
    py: Python<'py>,
    config_json: Option<&str>,
    out_dir: Option<PathBuf>,
    threads: usize,
) -> PyResult<Bound<'py, PyList>> {
    let cfg = match config_json {
        Some(text) => hazardgrid::ExperimentConfig::from_json_str(text).map_err(val_err)?,
        None => hazardgrid::ExperimentConfig::default(),
    };
    let report = hazardgrid::bench::run_benchmark_with_threads(&cfg, threads).map_err(val_err)?;
    if let Some(dir) = out_dir {
        report.write_to_dir(&dir).map_err(val_err)?;
    }
    let out = PyList::empty(py);
    for curve in &report.curves {
        let entry = PyDict::new(py);
        entry.set_item("size", curve.size)?;
        entry.set_item("density", curve.density.to_string())?;
        entry.set_item("flood_kind", curve.flood_kind.name())?;
        entry.set_item("label", curve.label())?;
        entry.set_item("rates", curve.rates.clone())?;
        out.append(entry)?;
    }
    Ok(out)
}

#[pymodule]
fn hazardgrid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_class::<PyFlood>()?;
    m.add_class::<PyLearnerConfig>()?;
    m.add_class::<PyEpisode>()?;
    m.add_class::<PyQTables>()?;
    m.add_function(wrap_pyfunction!(py_select_action, m)?)?;
    m.add_function(wrap_pyfunction!(py_decay_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(desk_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add("ACTION_COUNT", ACTION_COUNT)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
