//! Property suites: every invariant here is checked against either an
//! independent brute-force recomputation or a closed-form bound, never
//! against the implementation's own intermediate state.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::sample::Index;

use hazardgrid::engine::{Episode, EngineOptions, SONAR_CAP, WINDOW};
use hazardgrid::flood::{FloodKind, FloodModel, FloodParams};
use hazardgrid::grid::{generate_map, parse_map, shortest_path, Cell, Density, GridMap};
use hazardgrid::learn::{
    decay_epsilon, greedy_action, select_action, AlphaSchedule, Interleave, LearnerConfig,
    QTablePair, TableId, UpdateRule, ACTION_COUNT,
};
use hazardgrid::Action;

fn map_strategy() -> impl Strategy<Value = GridMap> {
    (8usize..=20, 8usize..=20, any::<u64>(), any::<bool>()).prop_map(|(w, h, seed, dense)| {
        let density = if dense { Density::Dense } else { Density::Sparse };
        generate_map(w, h, density, seed).expect("small maps always generate")
    })
}

fn kind_strategy() -> impl Strategy<Value = FloodKind> {
    prop_oneof![
        Just(FloodKind::CentralPing),
        Just(FloodKind::TopRightPing),
        Just(FloodKind::BottomRightPing),
        Just(FloodKind::LinearVertical),
        Just(FloodKind::RandomPings),
    ]
}

/// Valid for every kind at once.
fn params_strategy() -> impl Strategy<Value = FloodParams> {
    (0.0f64..4.0, 0.01f64..2.0, 0.05f64..3.0, 0.0f64..=0.5, 1u32..=8).prop_map(
        |(r0, delta_r, delta_d, spawn_prob, max_spawn)| FloodParams {
            r0,
            delta_r,
            delta_d,
            spawn_prob,
            max_spawn,
        },
    )
}

mod grid_props {
    use super::*;

    fn free_cells(map: &GridMap) -> Vec<Cell> {
        let mut cells = Vec::new();
        for y in 0..map.height() {
            for x in 0..map.width() {
                let c = Cell::new(x, y);
                if map.is_free(c) {
                    cells.push(c);
                }
            }
        }
        cells
    }

    fn chebyshev(a: Cell, b: Cell) -> usize {
        let dx = a.x.abs_diff(b.x);
        let dy = a.y.abs_diff(b.y);
        dx.max(dy)
    }

    proptest! {
        #[test]
        fn map_text_round_trips(map in map_strategy()) {
            let text = map.to_text();
            let parsed = parse_map(&text).unwrap();
            prop_assert_eq!(parsed.to_text(), text);
            prop_assert!(parsed.hazard_seeds.is_empty());
            prop_assert_eq!(parsed.map.width(), map.width());
            prop_assert_eq!(parsed.map.height(), map.height());
            prop_assert_eq!(parsed.map.start_pool(), map.start_pool());
            prop_assert_eq!(parsed.map.safe_pool(), map.safe_pool());
            prop_assert_eq!(parsed.map.obstacle_count(), map.obstacle_count());
        }

        #[test]
        fn generated_maps_respect_structure(
            (w, h, seed, dense) in (8usize..=20, 8usize..=20, any::<u64>(), any::<bool>()),
        ) {
            let density = if dense { Density::Dense } else { Density::Sparse };
            let map = generate_map(w, h, density, seed).unwrap();
            let band = w.div_ceil(4);

            // Obstacles only in the middle columns, count pinned by density.
            let mut middle = 0usize;
            for y in 0..h {
                for x in 0..w {
                    let c = Cell::new(x, y);
                    if x < band || x >= w - band {
                        prop_assert!(map.is_free(c), "band cell ({x},{y}) blocked");
                    } else {
                        middle += 1;
                    }
                }
            }
            let expected = (density.fraction() * middle as f64).floor() as usize;
            prop_assert_eq!(map.obstacle_count(), expected);

            // Pools are exactly their bands and a crossing exists.
            prop_assert_eq!(map.safe_pool().len(), band * h);
            prop_assert_eq!(map.start_pool().len(), band * h);
            prop_assert!(map.start_pool().iter().all(|&c| map.in_start_band(c)));
            prop_assert!(map.safe_pool().iter().all(|&c| map.in_safe_band(c)));
            prop_assert!(map.has_start_to_safe_path());
        }

        #[test]
        fn shortest_path_is_a_metric(
            map in map_strategy(),
            ia in any::<Index>(),
            ib in any::<Index>(),
            ic in any::<Index>(),
        ) {
            let free = free_cells(&map);
            let (a, b, c) = (free[ia.index(free.len())], free[ib.index(free.len())], free[ic.index(free.len())]);

            prop_assert_eq!(shortest_path(&map, a, a).unwrap(), Some(0));
            let ab = shortest_path(&map, a, b).unwrap();
            prop_assert_eq!(shortest_path(&map, b, a).unwrap(), ab);

            if let Some(d) = ab {
                // 8-connected moves change each coordinate by at most 1.
                prop_assert!(d >= chebyshev(a, b));
                prop_assert_eq!(d == 0, a == b);
            }
            if chebyshev(a, b) == 1 {
                prop_assert_eq!(ab, Some(1));
            }
            if let (Some(ab), Some(bc), Some(ac)) = (
                ab,
                shortest_path(&map, b, c).unwrap(),
                shortest_path(&map, a, c).unwrap(),
            ) {
                prop_assert!(ac <= ab + bc, "d(a,c)={ac} > d(a,b)+d(b,c)={}", ab + bc);
            }
        }

        /// On an obstacle-free map the metric is exactly Chebyshev distance.
        #[test]
        fn shortest_path_equals_chebyshev_without_obstacles(
            (w, h) in (8usize..=16, 8usize..=16),
            ia in any::<Index>(),
            ib in any::<Index>(),
        ) {
            let terrain = vec![hazardgrid::grid::CellKind::Free; w * h];
            let map = GridMap::new(w, h, terrain, vec![], vec![]).unwrap();
            let a = Cell::new(ia.index(w * h) % w, ia.index(w * h) / w);
            let b = Cell::new(ib.index(w * h) % w, ib.index(w * h) / w);
            prop_assert_eq!(shortest_path(&map, a, b).unwrap(), Some(chebyshev(a, b)));
        }
    }
}

mod flood_props {
    use super::*;

    fn ping_origin(kind: FloodKind, w: usize, h: usize) -> (usize, usize) {
        match kind {
            FloodKind::CentralPing => (w / 2, h / 2),
            FloodKind::TopRightPing => (w - 1, 0),
            FloodKind::BottomRightPing => (w - 1, h - 1),
            _ => unreachable!(),
        }
    }

    proptest! {
        #[test]
        fn masks_grow_monotonically(
            map in map_strategy(),
            kind in kind_strategy(),
            params in params_strategy(),
            seed in any::<u64>(),
            ticks in 1u32..30,
        ) {
            let mut flood = FloodModel::init(kind, params, &map, seed).unwrap();
            for t in 0..ticks {
                let before = flood.mask().to_vec();
                flood.tick();
                prop_assert_eq!(flood.tick_count(), (t + 1) as u64);
                for (i, (&was, &is)) in before.iter().zip(flood.mask()).enumerate() {
                    prop_assert!(!was || is, "tick {} un-flooded cell {}", t + 1, i);
                }
                let count = flood.mask().iter().filter(|&&b| b).count();
                prop_assert_eq!(flood.hazard_count(), count);
                prop_assert_eq!(
                    flood.is_fully_flooded(),
                    count == map.width() * map.height()
                );
            }
        }

        /// Single-ping kinds against the closed form: after t ticks every cell
        /// within Euclidean radius r0 + t·δr of the fixed origin is flooded,
        /// and nothing else is.
        #[test]
        fn ping_masks_match_brute_force(
            map in map_strategy(),
            kind in prop_oneof![
                Just(FloodKind::CentralPing),
                Just(FloodKind::TopRightPing),
                Just(FloodKind::BottomRightPing),
            ],
            params in params_strategy(),
            ticks in 0u32..30,
        ) {
            let mut flood = FloodModel::init(kind, params, &map, 0).unwrap();
            for _ in 0..ticks {
                flood.tick();
            }
            let (w, h) = (map.width(), map.height());
            let (cx, cy) = ping_origin(kind, w, h);
            let radius = params.r0 + ticks as f64 * params.delta_r;
            for y in 0..h {
                for x in 0..w {
                    let dx = x as f64 - cx as f64;
                    let dy = y as f64 - cy as f64;
                    let inside = dx * dx + dy * dy <= radius * radius;
                    prop_assert_eq!(
                        flood.mask()[y * w + x],
                        inside,
                        "cell ({},{}) at tick {} radius {}", x, y, ticks, radius
                    );
                }
            }
        }

        #[test]
        fn linear_front_matches_formula(
            map in map_strategy(),
            params in params_strategy(),
            ticks in 0u32..40,
        ) {
            let mut flood = FloodModel::init(FloodKind::LinearVertical, params, &map, 0).unwrap();
            for _ in 0..ticks {
                flood.tick();
            }
            let w = map.width();
            let columns = ((ticks as f64 * params.delta_d).floor() as usize).min(w);
            for y in 0..map.height() {
                for x in 0..w {
                    prop_assert_eq!(flood.mask()[y * w + x], x >= w - columns);
                }
            }
        }

        #[test]
        fn random_pings_replay_identically(
            map in map_strategy(),
            params in params_strategy(),
            seed in any::<u64>(),
            ticks in 1u32..25,
        ) {
            let map = Arc::new(map);
            let mut a = FloodModel::init(FloodKind::RandomPings, params, &map, seed).unwrap();
            let mut b = FloodModel::init(FloodKind::RandomPings, params, &map, seed).unwrap();
            for _ in 0..ticks {
                a.tick();
                b.tick();
                prop_assert_eq!(a.mask(), b.mask());
            }
        }
    }
}

mod learn_props {
    use super::*;

    const KEYS: [&str; 4] = ["s0", "s1", "s2", "s3"];

    #[derive(Clone, Debug)]
    struct UpdateStep {
        key: usize,
        action: usize,
        reward: f64,
        next: usize,
        terminal: bool,
    }

    fn steps_strategy(max_len: usize) -> impl Strategy<Value = Vec<UpdateStep>> {
        prop::collection::vec(
            (0usize..KEYS.len(), 0usize..ACTION_COUNT, 0.0f64..=1.0, 0usize..KEYS.len(), any::<bool>())
                .prop_map(|(key, action, reward, next, terminal)| UpdateStep {
                    key,
                    action,
                    reward,
                    next,
                    terminal,
                }),
            1..max_len,
        )
    }

    fn apply(pair: &mut QTablePair, cfg: &LearnerConfig, steps: &[UpdateStep], unit_rewards: bool) {
        for s in steps {
            let reward = if unit_rewards {
                if s.terminal && s.reward > 0.5 {
                    1.0
                } else {
                    0.0
                }
            } else {
                s.reward
            };
            pair.update(
                cfg,
                KEYS[s.key],
                Action::from_code(s.action).unwrap(),
                reward,
                KEYS[s.next],
                s.terminal,
            )
            .unwrap();
        }
    }

    fn all_values(pair: &QTablePair) -> Vec<f64> {
        let mut out = Vec::new();
        for id in [TableId::Q, TableId::U] {
            for (_, row) in pair.rows(id) {
                out.extend_from_slice(row);
            }
        }
        out
    }

    proptest! {
        /// Boundary rule with terminal-only unit rewards: targets stay in
        /// [0,1], so every stored value does, for any α schedule.
        #[test]
        fn boundary_values_stay_in_unit_interval_with_unit_rewards(
            steps in steps_strategy(200),
            seed in any::<u64>(),
            alpha in 0.05f64..=1.0,
            gamma in 0.0f64..0.99,
            inverse in any::<bool>(),
            coinflip in any::<bool>(),
        ) {
            let cfg = LearnerConfig {
                alpha,
                gamma,
                update_rule: UpdateRule::BoundaryDoubleQ,
                interleave: if coinflip { Interleave::CoinFlip } else { Interleave::Alternate },
                alpha_schedule: if inverse { AlphaSchedule::InverseVisits } else { AlphaSchedule::Constant },
                ..LearnerConfig::default()
            };
            let mut pair = QTablePair::new(seed);
            apply(&mut pair, &cfg, &steps, true);
            for v in all_values(&pair) {
                prop_assert!((0.0..=1.0).contains(&v), "value {v} escaped [0,1]");
            }
        }

        /// Boundary rule with arbitrary rewards in [0,1] needs α(1+γ) ≤ 1;
        /// then new = (1−s)·old + s·target with s = α(1−old) never leaves
        /// [0,1] even though targets reach 1+γ.
        #[test]
        fn boundary_values_stay_in_unit_interval_with_dense_rewards(
            steps in steps_strategy(200),
            seed in any::<u64>(),
            gamma in 0.0f64..0.99,
            shrink in 0.1f64..=1.0,
        ) {
            let cfg = LearnerConfig {
                alpha: shrink / (1.0 + gamma),
                gamma,
                update_rule: UpdateRule::BoundaryDoubleQ,
                ..LearnerConfig::default()
            };
            let mut pair = QTablePair::new(seed);
            apply(&mut pair, &cfg, &steps, false);
            for v in all_values(&pair) {
                prop_assert!((0.0..=1.0).contains(&v), "value {v} escaped [0,1]");
            }
        }

        /// Plain double Q with rewards in [0,1]: values live in the geometric
        /// envelope [0, 1/(1−γ)].
        #[test]
        fn plain_double_q_respects_geometric_bound(
            steps in steps_strategy(200),
            seed in any::<u64>(),
            alpha in 0.05f64..=1.0,
            gamma in 0.0f64..=0.95,
            single in any::<bool>(),
        ) {
            let cfg = LearnerConfig {
                alpha,
                gamma,
                update_rule: if single { UpdateRule::SingleQ } else { UpdateRule::DoubleQ },
                ..LearnerConfig::default()
            };
            let bound = 1.0 / (1.0 - gamma) + 1e-9;
            let mut pair = QTablePair::new(seed);
            apply(&mut pair, &cfg, &steps, false);
            for v in all_values(&pair) {
                prop_assert!(v >= 0.0 && v <= bound, "value {v} escaped [0, {bound}]");
            }
        }

        /// The two tables are interchangeable: starting on U's turn instead of
        /// Q's produces the mirror-image pair under identical updates.
        #[test]
        fn tables_are_symmetric_under_turn_swap(
            steps in steps_strategy(120),
            seed in any::<u64>(),
            boundary in any::<bool>(),
        ) {
            let cfg = LearnerConfig {
                update_rule: if boundary { UpdateRule::BoundaryDoubleQ } else { UpdateRule::DoubleQ },
                interleave: Interleave::Alternate,
                ..LearnerConfig::default()
            };
            let mut on_q = QTablePair::new(seed);
            let mut on_u = QTablePair::new(seed);
            on_u.set_turn(TableId::Q.other());
            apply(&mut on_q, &cfg, &steps, false);
            apply(&mut on_u, &cfg, &steps, false);

            let rows = |pair: &QTablePair, id: TableId| -> BTreeMap<String, Vec<f64>> {
                pair.rows(id).map(|(k, v)| (k.to_string(), v.to_vec())).collect()
            };
            prop_assert_eq!(rows(&on_q, TableId::Q), rows(&on_u, TableId::U));
            prop_assert_eq!(rows(&on_q, TableId::U), rows(&on_u, TableId::Q));
        }

        /// With γ = 0, terminal-only updates and the 1/n schedule, a cell is
        /// exactly the running mean of its rewards.
        #[test]
        fn inverse_visits_computes_running_means(
            rewards in prop::collection::vec(0.0f64..=1.0, 1..60),
            seed in any::<u64>(),
        ) {
            let cfg = LearnerConfig {
                gamma: 0.0,
                update_rule: UpdateRule::SingleQ,
                alpha_schedule: AlphaSchedule::InverseVisits,
                ..LearnerConfig::default()
            };
            let mut pair = QTablePair::new(seed);
            for &r in &rewards {
                pair.update(&cfg, "s", Action::North, r, "", true).unwrap();
            }
            let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
            let got = pair.row(TableId::Q, "s")[Action::North.code()];
            prop_assert!((got - mean).abs() < 1e-9, "got {got}, want mean {mean}");
        }

        #[test]
        fn greedy_action_is_lowest_tied_argmax(values in prop::array::uniform8(-1.0e6f64..1.0e6)) {
            let chosen = greedy_action(&values).code();
            for (i, &v) in values.iter().enumerate() {
                prop_assert!(v <= values[chosen]);
                if i < chosen {
                    prop_assert!(v < values[chosen], "earlier tie {i} not taken over {chosen}");
                }
            }
        }

        #[test]
        fn select_action_extremes(values in prop::array::uniform8(-10.0f64..10.0), seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

            // ε = 0: the variate is always ≥ ε, so selection is pure greed.
            for _ in 0..20 {
                prop_assert_eq!(select_action(&values, 0.0, &mut rng), greedy_action(&values));
            }
            // ε = 1: the variate is always < 1, so selection is uniform;
            // 500 draws miss an action with probability ~8·(7/8)^500.
            let mut seen = [false; ACTION_COUNT];
            for _ in 0..500 {
                seen[select_action(&values, 1.0, &mut rng).code()] = true;
            }
            prop_assert!(seen.iter().all(|&s| s), "uniform branch skipped an action");
        }

        #[test]
        fn decay_epsilon_never_goes_below_floor(
            epsilon in 0.0f64..=1.0,
            decay in 0.01f64..=1.0,
            floor in 0.0f64..=1.0,
        ) {
            let cfg = LearnerConfig {
                epsilon_decay: decay,
                epsilon_min: floor,
                ..LearnerConfig::default()
            };
            let next = decay_epsilon(epsilon, &cfg);
            prop_assert!(next >= floor);
            prop_assert!(next <= epsilon.max(floor));
        }

        /// Snapshots are lossless: parse(write(tables)) is bit-identical and
        /// re-serializes to the same bytes.
        #[test]
        fn snapshot_round_trips(
            rows in prop::collection::vec(
                (
                    "[0-9a-z|,]{1,16}",
                    any::<bool>(),
                    prop::array::uniform8(any::<f64>().prop_filter("finite", |v| v.is_finite())),
                ),
                0..40,
            ),
            seed in any::<u64>(),
        ) {
            let mut pair = QTablePair::new(seed);
            for (key, in_u, values) in &rows {
                let id = if *in_u { TableId::U } else { TableId::Q };
                pair.set_row(id, key, *values);
            }
            let text = pair.snapshot_string();
            let back = QTablePair::from_snapshot_str(&text).unwrap();
            for id in [TableId::Q, TableId::U] {
                prop_assert_eq!(back.row_count(id), pair.row_count(id));
                for (key, values) in pair.rows(id) {
                    let got = back.row(id, key);
                    for (a, b) in values.iter().zip(got.iter()) {
                        prop_assert_eq!(a.to_bits(), b.to_bits(), "key {} lost precision", key);
                    }
                }
            }
            prop_assert_eq!(back.snapshot_string(), text);
        }
    }
}

mod engine_props {
    use super::*;

    /// Brute-force observation: recompute the window, sonar and key straight
    /// from the map and flood state.
    fn oracle_observation(
        map: &GridMap,
        flood: &FloodModel,
        agent: Cell,
        options: EngineOptions,
    ) -> ([[u8; WINDOW]; WINDOW], [u8; 4], String) {
        let mut window = [[0u8; WINDOW]; WINDOW];
        for (wy, row) in window.iter_mut().enumerate() {
            for (wx, code) in row.iter_mut().enumerate() {
                let x = agent.x as isize + wx as isize - 4;
                let y = agent.y as isize + wy as isize - 4;
                *code = if x < 0 || y < 0 || x >= map.width() as isize || y >= map.height() as isize {
                    1
                } else {
                    let cell = Cell::new(x as usize, y as usize);
                    if flood.hazard_at(cell).unwrap() {
                        2
                    } else if map.is_free(cell) {
                        0
                    } else {
                        1
                    }
                };
            }
        }
        let ray = |dx: isize, dy: isize| -> u8 {
            let mut n = 0u8;
            while n < SONAR_CAP {
                let x = agent.x as isize + dx * (n as isize + 1);
                let y = agent.y as isize + dy * (n as isize + 1);
                if x < 0 || y < 0 || x >= map.width() as isize || y >= map.height() as isize {
                    break;
                }
                if !map.is_free(Cell::new(x as usize, y as usize)) {
                    break;
                }
                n += 1;
            }
            n
        };
        let sonar = [ray(1, 0), ray(-1, 0), ray(0, 1), ray(0, -1)];
        let mut key = String::new();
        for row in &window {
            for &code in row {
                key.push((b'0' + code) as char);
            }
        }
        key.push('|');
        key.push_str(&format!("{},{},{},{}", sonar[0], sonar[1], sonar[2], sonar[3]));
        if options.key_includes_flood_kind {
            key.push('|');
            key.push_str(flood.kind().name());
        }
        (window, sonar, key)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Full shadow simulation: an independent flood stream plus hand-rolled
        /// move/adjudication rules must reproduce every step of the engine.
        #[test]
        fn trajectories_match_shadow_simulation(
            map in map_strategy(),
            kind in kind_strategy(),
            params in params_strategy(),
            seed in any::<u64>(),
            start_ix in any::<Index>(),
            budget in 1u32..100,
            penalty in prop_oneof![Just(0.0f64), 0.0..0.9],
            hint in any::<bool>(),
            actions in prop::collection::vec(0usize..ACTION_COUNT, 1..120),
        ) {
            let map = Arc::new(map);
            let start = map.start_pool()[start_ix.index(map.start_pool().len())];
            let options = EngineOptions {
                step_penalty: penalty,
                key_includes_flood_kind: hint,
            };
            let mut episode = Episode::reset_with_options(
                Arc::clone(&map), kind, params, start, budget, seed, options,
            ).unwrap();
            let mut shadow = FloodModel::init(kind, params, &map, seed).unwrap();

            if shadow.hazard_at(start).unwrap() {
                prop_assert_eq!(episode.status(), hazardgrid::EpisodeStatus::Drowned);
                prop_assert!(episode.step(Action::North).is_err());
                prop_assert!(episode.observe().is_err());
                return Ok(());
            }
            prop_assert_eq!(episode.status(), hazardgrid::EpisodeStatus::Running);

            let mut agent = start;
            let mut remaining = budget;
            for (i, &code) in actions.iter().enumerate() {
                let (window, sonar, key) = oracle_observation(&map, &shadow, agent, options);
                let obs = episode.observe().unwrap();
                prop_assert_eq!(obs.feature_map, window);
                prop_assert_eq!(obs.sonar, sonar);
                prop_assert_eq!(&obs.key, &key);
                prop_assert_eq!(obs.flood_hint, kind);

                let action = Action::from_code(code).unwrap();
                let out = episode.step(action).unwrap();

                // Shadow: blocked moves are no-ops, then the world ticks.
                let (dx, dy) = action.offset();
                let tx = agent.x as isize + dx;
                let ty = agent.y as isize + dy;
                if tx >= 0 && ty >= 0 {
                    let target = Cell::new(tx as usize, ty as usize);
                    if map.is_free(target) {
                        agent = target;
                    }
                }
                shadow.tick();
                remaining -= 1;

                prop_assert_eq!(episode.agent(), agent);
                prop_assert_eq!(episode.tick(), (i + 1) as u64);
                prop_assert_eq!(episode.flood().mask(), shadow.mask());

                let (status, raw) = if shadow.hazard_at(agent).unwrap() {
                    (hazardgrid::EpisodeStatus::Drowned, 0.0)
                } else if map.is_safe(agent) {
                    (hazardgrid::EpisodeStatus::Success, 1.0)
                } else if remaining == 0 {
                    (hazardgrid::EpisodeStatus::TimedOut, 0.0)
                } else {
                    (hazardgrid::EpisodeStatus::Running, 0.0)
                };
                prop_assert_eq!(out.status, status);
                prop_assert_eq!(episode.status(), status);
                prop_assert_eq!(out.terminal, status != hazardgrid::EpisodeStatus::Running);
                let reward = (raw - penalty).clamp(0.0, 1.0);
                prop_assert!((out.reward - reward).abs() < 1e-15);

                if out.terminal {
                    prop_assert!(episode.step(action).is_err());
                    prop_assert!(episode.observe().is_err());
                    break;
                }
            }
        }
    }
}
