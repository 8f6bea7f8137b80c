//! `hazardgrid` binary: map generation, training, evaluation, benchmarking
//! and map inspection from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::error::Error;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hazardgrid::bench::{
    map_seed, run_benchmark_with_threads, run_greedy_episode, train_first_unit, ExperimentConfig,
    FloodSpec, Outcome,
};
use hazardgrid::engine::{trajectory_line, EngineOptions, Episode};
use hazardgrid::flood::{FloodKind, FloodModel, FloodParams};
use hazardgrid::grid::{generate_map, parse_map, Cell, Density, GridMap};
use hazardgrid::learn::{greedy_action, QTablePair};

#[derive(Parser)]
#[command(
    name = "hazardgrid",
    version,
    about = "Flooded grid worlds: generate maps, train tabular agents, benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic suite of generated map files.
    GenMaps(GenMapsArgs),
    /// Train the first unit of a config and write its Q-table snapshot.
    Train(TrainArgs),
    /// Report the greedy success rate of a snapshot on a map.
    Eval(EvalArgs),
    /// Run the full benchmark and write CSV/SVG reports.
    Bench(BenchArgs),
    /// Print a map document, optionally with the flood overlaid at a tick.
    ShowMap(ShowMapArgs),
}

#[derive(Args)]
struct GenMapsArgs {
    /// Map edge length (maps are square).
    #[arg(long)]
    size: usize,
    /// Obstacle density: sparse or dense.
    #[arg(long)]
    density: Density,
    /// How many maps to generate.
    #[arg(long, default_value_t = 1)]
    count: u32,
    /// Master seed; file i uses the same derived seed the benchmark would.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Directory the map files are written into.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config (JSON). Stock desk-scale config when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the trained Q-table snapshot.
    #[arg(long)]
    out_snapshot: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Map file to evaluate on.
    #[arg(long)]
    map: PathBuf,
    /// Q-table snapshot produced by `train`.
    #[arg(long)]
    snapshot: PathBuf,
    /// Flood kind for the evaluation episodes.
    #[arg(long)]
    flood: FloodKind,
    #[command(flatten)]
    params: FloodParamArgs,
    /// Number of greedy episodes to run.
    #[arg(long, default_value_t = 100)]
    episodes: u32,
    /// Seed for start draws and flood streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step budget per episode; 4*(w+h) when omitted.
    #[arg(long)]
    step_budget: Option<u32>,
    /// Print one `t x y action reward status` line per step.
    #[arg(long)]
    dump_trajectories: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON). Stock desk-scale config when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for results.csv, curves.csv and curves.svg.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ShowMapArgs {
    /// Map file to print.
    #[arg(long)]
    map: PathBuf,
    /// Overlay this flood kind's hazard mask instead of the stored `#` seeds.
    #[arg(long)]
    flood: Option<FloodKind>,
    /// Flood tick to display.
    #[arg(long, default_value_t = 0)]
    tick: u64,
    /// Flood stream seed (relevant for random pings).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: FloodParamArgs,
}

/// Flood parameter flags shared by `eval` and `show-map`. Unset flags fall
/// back to the library defaults.
#[derive(Args)]
struct FloodParamArgs {
    /// Initial ping radius.
    #[arg(long)]
    r0: Option<f64>,
    /// Radius growth per tick (ping kinds).
    #[arg(long)]
    delta_r: Option<f64>,
    /// Front columns per tick (linear kind).
    #[arg(long)]
    delta_d: Option<f64>,
    /// Per-tick spawn probability (random kind).
    #[arg(long)]
    spawn_prob: Option<f64>,
    /// Max pings per spawn event (random kind).
    #[arg(long)]
    max_spawn: Option<u32>,
}

impl FloodParamArgs {
    fn to_params(&self) -> FloodParams {
        let mut p = FloodParams::default();
        if let Some(v) = self.r0 {
            p.r0 = v;
        }
        if let Some(v) = self.delta_r {
            p.delta_r = v;
        }
        if let Some(v) = self.delta_d {
            p.delta_d = v;
        }
        if let Some(v) = self.spawn_prob {
            p.spawn_prob = v;
        }
        if let Some(v) = self.max_spawn {
            p.max_spawn = v;
        }
        p
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                0
            } else {
                1
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

type CliResult = Result<(), Box<dyn Error>>;

fn run(command: Command) -> CliResult {
    match command {
        Command::GenMaps(args) => gen_maps(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench(args),
        Command::ShowMap(args) => show_map(args),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, Box<dyn Error>> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("reading {}: {e}", p.display()))?;
            Ok(ExperimentConfig::from_json_str(&text)?)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_map(path: &PathBuf) -> Result<hazardgrid::grid::ParsedMap, Box<dyn Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    Ok(parse_map(&text)?)
}

fn gen_maps(args: GenMapsArgs) -> CliResult {
    fs::create_dir_all(&args.out_dir)?;
    for i in 0..args.count {
        let seed = map_seed(args.seed, args.size, args.density, i);
        let map = generate_map(args.size, args.size, args.density, seed)?;
        let name = format!(
            "map_{}x{}_{}_{:03}.txt",
            args.size, args.size, args.density, i
        );
        let path = args.out_dir.join(name);
        fs::write(&path, map.to_text())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    let (tables, results) = train_first_unit(&cfg)?;
    let last_epoch = cfg.epochs() - 1;
    let (mut successes, mut total) = (0u32, 0u32);
    for r in results.iter().filter(|r| r.epoch == last_epoch) {
        total += 1;
        if r.outcome == Outcome::Success {
            successes += 1;
        }
    }
    let file = fs::File::create(&args.out_snapshot)
        .map_err(|e| format!("creating {}: {e}", args.out_snapshot.display()))?;
    tables.write_snapshot(io_buf(file))?;
    println!(
        "trained episodes={} terminal_success_rate={:?}",
        cfg.total_episodes,
        f64::from(successes) / f64::from(total)
    );
    println!("wrote {}", args.out_snapshot.display());
    Ok(())
}

fn io_buf(file: fs::File) -> std::io::BufWriter<fs::File> {
    std::io::BufWriter::new(file)
}

fn eval(args: EvalArgs) -> CliResult {
    let parsed = load_map(&args.map)?;
    let map = Arc::new(parsed.map);
    if map.start_pool().is_empty() {
        return Err("map has no start cells".into());
    }
    let text = fs::read_to_string(&args.snapshot)
        .map_err(|e| format!("reading {}: {e}", args.snapshot.display()))?;
    let tables = QTablePair::from_snapshot_str(&text)?;
    let spec = FloodSpec::new(args.flood, args.params.to_params());
    let budget = args
        .step_budget
        .unwrap_or_else(|| Episode::default_step_budget(&map));
    let options = EngineOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut successes = 0u32;
    for episode in 0..args.episodes {
        let start = map.start_pool()[rng.gen_range(0..map.start_pool().len())];
        let flood_seed: u64 = rng.gen();
        let success = if args.dump_trajectories {
            println!("# episode {episode} start {start}");
            run_dumped_episode(&map, spec, start, budget, flood_seed, &tables, options)?
        } else {
            let (outcome, _) =
                run_greedy_episode(&map, spec, start, budget, flood_seed, &tables, options)?;
            outcome == Outcome::Success
        };
        if success {
            successes += 1;
        }
    }
    println!(
        "episodes={} successes={} success_rate={:?}",
        args.episodes,
        successes,
        f64::from(successes) / f64::from(args.episodes)
    );
    Ok(())
}

fn run_dumped_episode(
    map: &Arc<GridMap>,
    spec: FloodSpec,
    start: Cell,
    budget: u32,
    flood_seed: u64,
    tables: &QTablePair,
    options: EngineOptions,
) -> Result<bool, Box<dyn Error>> {
    let mut ep = Episode::reset_with_options(
        Arc::clone(map),
        spec.kind,
        spec.params,
        start,
        budget,
        flood_seed,
        options,
    )?;
    while !ep.status().is_terminal() {
        let key = ep.observe()?.key;
        let action = greedy_action(&tables.selection_values(&key));
        let out = ep.step(action)?;
        println!(
            "{}",
            trajectory_line(ep.tick(), ep.agent(), action, out.reward, out.status)
        );
    }
    Ok(ep.status() == hazardgrid::engine::EpisodeStatus::Success)
}

fn bench(args: BenchArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    let threads = match std::env::var("HAZARDGRID_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("HAZARDGRID_THREADS must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    let report = run_benchmark_with_threads(&cfg, threads)?;
    let written = report.write_to_dir(&args.out_dir)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    for curve in &report.curves {
        println!(
            "{} terminal_success_rate={:?}",
            curve.label(),
            curve.rates.last().expect("curves are never empty")
        );
    }
    Ok(())
}

fn show_map(args: ShowMapArgs) -> CliResult {
    let parsed = load_map(&args.map)?;
    let Some(kind) = args.flood else {
        print!("{}", parsed.to_text());
        return Ok(());
    };
    let map = parsed.map;
    let mut model = FloodModel::init(kind, args.params.to_params(), &map, args.seed)?;
    for _ in 0..args.tick {
        model.tick();
    }
    let mut out = map.to_text().into_bytes();
    let header_len = out
        .iter()
        .position(|&b| b == b'\n')
        .expect("header line ends with LF")
        + 1;
    for y in 0..map.height() {
        for x in 0..map.width() {
            let cell = Cell::new(x, y);
            if map.is_free(cell) && model.hazard_at(cell)? {
                out[header_len + y * (map.width() + 1) + x] = b'#';
            }
        }
    }
    print!("{}", String::from_utf8(out).expect("map text is ASCII"));
    Ok(())
}
