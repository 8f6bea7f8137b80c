#!/usr/bin/env python3
"""End-to-end smoke test for the hazardgrid_py extension module.

Build the module first:

    cargo build -p hazardgrid-py          # or --release

then run:

    python3 python/smoke_test.py
"""

import importlib.util
import json
import random
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libhazardgrid_py.so", "hazardgrid_py.so")
    ]
    for path in candidates:
        if path.exists():
            spec = importlib.util.spec_from_file_location("hazardgrid_py", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            print(f"loaded {path}")
            return module
    sys.exit("hazardgrid_py not built; run `cargo build -p hazardgrid-py` first")


hg = load_module()


def check_map():
    m = hg.Map.generate(16, 16, "sparse", 7)
    assert m.width == 16 and m.height == 16
    assert m.obstacle_count > 0
    text = m.to_text()
    again = hg.Map.parse(text)
    assert again.to_text() == text

    starts = m.start_pool()
    safes = m.safe_pool()
    assert starts and safes
    assert all(m.is_free(x, y) for x, y in starts[:8])
    d = m.shortest_path(starts[0], safes[0])
    assert d is not None and d >= 1
    assert m.shortest_path(safes[0], starts[0]) == d
    print(f"map: {m!r}, start->safe shortest path {d}")
    return m


def check_flood(m):
    flood = hg.Flood("central", m, r0=0.0, delta_r=0.5)
    assert flood.kind == "central"
    assert flood.hazard_at(m.width // 2, m.height // 2)
    assert flood.hazard_count == 1
    previous = flood.mask()
    for _ in range(10):
        flood.tick()
        mask = flood.mask()
        assert all(now or not before for before, now in zip(previous, mask))
        previous = mask
    assert flood.tick_count == 10
    assert flood.hazard_count == sum(previous)
    assert not flood.fully_flooded
    print(f"flood: {flood.hazard_count} hazard cells after 10 ticks")


def check_episode(m):
    start = m.start_pool()[0]
    ep = hg.Episode(m, "central", start, seed=3, r0=0.0, delta_r=0.25)
    assert ep.status == "running" and ep.agent == start
    obs = ep.observe()
    window, bar, sonar = obs["key"].partition("|")
    assert len(window) == 64 and bar == "|" and len(sonar.split(",")) == 4
    assert obs["flood_kind"] == "central"
    assert len(obs["feature_map"]) == 8 and len(obs["sonar"]) == 4

    reward, terminal, status = ep.step(6)  # west, toward the safe band
    assert status in ("running", "success", "drowned", "timed_out")
    assert ep.tick == 1
    print(f"episode: stepped to {ep.agent}, status {status}")


def check_learning():
    m = hg.Map.generate(8, 8, "sparse", 7)
    cfg = hg.LearnerConfig(epsilon_min=0.0, epsilon_decay=0.99)
    assert cfg.alpha > 0 and cfg.gamma < 1
    tables = hg.QTables(turn_seed=7)
    starts = m.start_pool()
    rng = random.Random(0)

    epsilon = cfg.epsilon0
    for i in range(600):
        ep = hg.Episode(m, "random", starts[rng.randrange(len(starts))],
                        seed=i, spawn_prob=0.0)
        while ep.status == "running":
            key = ep.observe()["key"]
            action = rng.randrange(8) if rng.random() < epsilon else tables.greedy(key)
            reward, terminal, _ = ep.step(action)
            next_key = "" if terminal else ep.observe()["key"]
            tables.update(cfg, key, action, reward, next_key, terminal)
        epsilon = hg.decay_epsilon(epsilon, cfg)

    successes = 0
    evals = 50
    for i in range(evals):
        ep = hg.Episode(m, "random", starts[i % len(starts)], seed=10_000 + i,
                        spawn_prob=0.0)
        while ep.status == "running":
            _, _, status = ep.step(tables.greedy(ep.observe()["key"]))
        successes += status == "success"
    rate = successes / evals
    print(f"learning: greedy success {successes}/{evals} after 600 episodes")
    assert rate >= 0.9, f"greedy success rate {rate} too low"

    snapshot = tables.snapshot()
    back = hg.QTables.from_snapshot(snapshot)
    assert back.snapshot() == snapshot
    assert back.row_count("Q") == tables.row_count("Q")
    key = snapshot.split("\t", 2)[1]
    assert back.row("Q", key) == tables.row("Q", key)
    assert len(tables.selection_values(key)) == hg.ACTION_COUNT


def check_selection():
    values = [0.0] * 8
    values[5] = 1.0
    assert hg.select_action(values, 0.0, seed=1) == 5
    seen = {hg.select_action(values, 1.0, seed=s) for s in range(200)}
    assert seen == set(range(8))


def check_benchmark():
    config = json.loads(hg.desk_config())
    assert config["map_sizes"] == [32] and config["repetitions"] == 10

    tiny = {
        "map_sizes": [8],
        "maps_per_density": 1,
        "densities": ["sparse"],
        "floods": [{"kind": "central", "delta_r": 0.05}],
        "starts_sampled": 4,
        "goals_sampled": 4,
        "episodes_per_epoch": 10,
        "total_episodes": 40,
        "repetitions": 1,
        "master_seed": 7,
    }
    with tempfile.TemporaryDirectory() as out:
        curves = hg.run_benchmark(json.dumps(tiny), out_dir=out, threads=1)
        for name in ("results.csv", "curves.csv", "curves.svg"):
            assert (Path(out) / name).stat().st_size > 0, f"{name} missing"
        assert len(curves) == 1
        curve = curves[0]
        assert curve["label"] == "8x8 sparse central"
        assert len(curve["rates"]) == 4
        assert all(0.0 <= r <= 1.0 for r in curve["rates"])
    print(f"benchmark: curve {curve['label']} rates {curve['rates']}")


def main():
    m = check_map()
    check_flood(m)
    check_episode(m)
    check_learning()
    check_selection()
    check_benchmark()
    print("smoke test passed")


if __name__ == "__main__":
    main()
