"""Shared helpers: session-cached bundled runs, random trees, Richardson."""
from __future__ import annotations

import time

import numpy as np
import pytest

from swarmlink import engine

_RUNS: dict[str, tuple[engine.RunResult, float]] = {}
_RICH: dict[str, float] = {}


def run_bundled(name: str) -> tuple[engine.RunResult, float]:
    """Run a bundled scenario once per session; returns (result, wall s)."""
    if name not in _RUNS:
        sc = engine.load_bundled(name)
        t0 = time.perf_counter()
        res = engine.run(sc)
        _RUNS[name] = (res, time.perf_counter() - t0)
    return _RUNS[name]


@pytest.fixture(scope="session")
def bundled():
    return run_bundled


def random_tree_edges(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    """Random recursive tree: vertex v attaches to a uniform earlier vertex."""
    return [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]


def random_linked_positions(rng: np.random.Generator, edges, n: int, r: float,
                            frac: float = 0.99, n_dim: int = 2) -> np.ndarray:
    """Positions with every linked distance strictly below frac * r."""
    x = np.zeros((n, n_dim))
    for (a, b) in edges:
        d = frac * r * rng.uniform(0.05, 0.999)
        u = rng.normal(size=n_dim)
        x[b - 1] = x[a - 1] + d * u / np.linalg.norm(u)
    return x


def star3_base(**over) -> dict:
    """Three-robot star scenario skeleton shared by several tests."""
    base = dict(
        name="test", mode="delay_free",
        edges=[[1, 2], [1, 3]],
        initial_positions=[[0.0, 0.0], [0.015, 0.0], [-0.015, 0.0]],
        r=0.1, epsilon=0.08, duration_s=2.0, h=1e-3, seed=3,
        model={"kind": "point_mass", "mass": 0.01},
        constants={"lam1": 0.01, "lam2": 0.01, "c": 0.01},
        gains={"rho": 1.0, "sigma": 1.0, "B": 1.0, "D": 3.0, "Q": 1.0,
               "P": 20.0, "kappa": 0.0, "eta": 0.1, "gamma": 0.1,
               "zeta": 0.1, "f_bar": 0.6},
        master={"program": "static", "x0": [0.02, 0.015], "k0": 10.0,
                "f_max": 0.6},
    )
    base.update(over)
    return base


def richardson_ratio() -> float:
    """|x_h - x_{h/2}| / |x_{h/2} - x_{h/4}| at t = 2 s on a smooth run."""
    if "ratio" not in _RICH:
        finals = {}
        for h in (1e-3, 5e-4, 2.5e-4):
            sim = engine.Simulation(engine.Scenario(**star3_base(h=h)))
            sim.run_to_end()
            assert not sim.aborted
            finals[h] = sim.x.copy()
        e1 = float(np.linalg.norm(finals[1e-3] - finals[5e-4]))
        e2 = float(np.linalg.norm(finals[5e-4] - finals[2.5e-4]))
        _RICH["ratio"] = e1 / e2
    return _RICH["ratio"]


def contrast_scenario(baseline_res: engine.RunResult) -> engine.Scenario:
    """Certified delayed controller fed the baseline run's exact force trace."""
    sc = baseline_res.scenario
    return engine.Scenario(
        name="baseline_contrast", mode="delayed",
        edges=[list(e) for e in sc.edges],
        initial_positions=[list(map(float, p)) for p in sc.initial_positions],
        r=sc.r, epsilon=sc.epsilon, duration_s=sc.duration_s, h=sc.h, seed=29,
        model=dict(sc.model),
        gains={"sigma_bar": 1.0, "B": 1.0, "eta": 0.1, "gamma": 0.1,
               "zeta": 0.1, "f_bar": 1.0},
        master={"program": "force_replay",
                "forces": baseline_res.trace.f.tolist()},
        delays={"kind": "sinusoidal", "bound_s": 0.01, "freq_hz": 1.0},
    )
