"""Acceptance gate: every stated criterion, one pass/fail line each.

Expensive closed-loop runs are shared through the session cache in conftest,
so each bundled scenario is simulated exactly once per pytest session.
"""
from __future__ import annotations

import time

import numpy as np

from swarmlink import engine
from swarmlink.control import select_gains_delayed
from swarmlink.dynamics import PointMass, TwoLinkArm, theta_all
from swarmlink.potential import certify_conditions, grad_psi, psi, swarm_energy
from swarmlink.topology import build_tree

from conftest import (contrast_scenario, random_linked_positions,
                      random_tree_edges, richardson_ratio, run_bundled)

BUNDLED = ("paper_delay_free", "paper_delayed", "zero_force",
           "baseline_break", "live_delayed")
CERTIFIED = ("paper_delay_free", "paper_delayed", "zero_force", "live_delayed")


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def test_golden_delay_free_pipeline():
    t0 = time.perf_counter()
    p = certify_conditions(0.1, 0.08, 0.02, 0.0, 3, 1.0, 20.0, 0.1)
    wall = time.perf_counter() - t0
    e2 = abs(p.omega2 - 0.0093) / 0.0093
    e3 = abs(p.omega3 - 0.0851) / 0.0851
    _report("delay-free margin constants",
            e2 < 0.02 and e3 < 0.02 and wall < 1.0,
            f"omega2={p.omega2:.6g} ({e2:.2%} off 0.0093), "
            f"omega3={p.omega3:.6g} ({e3:.2%} off 0.0851), {wall:.3f}s")


def test_golden_delayed_pipeline():
    net = build_tree(3, [(1, 2), (1, 3)])
    x0 = np.array([[0.0, 0.0], [0.015, 0.0], [-0.015, 0.0]])
    tbar = np.zeros((3, 3))
    for (j, i) in net.directed_links():
        tbar[j, i] = 0.01
    const = np.full(3, 0.01)
    t0 = time.perf_counter()
    res = select_gains_delayed(
        net, 0.1, 0.08, const, const, const, 0.5, x0, tbar,
        {"sigma_bar": 1.0, "B": 1.0, "kappa": 0.5, "Q": 1.0, "P": 15.0,
         "sigma": 0.1268, "eta": 0.1, "gamma": 0.1, "zeta": 0.1})
    wall = time.perf_counter() - t0
    g, p = res.gains, res.params
    rb = float(np.max(g.rho_bar))
    kb = float(np.max(g.K_bar))
    errs = {"omega1": abs(p.omega1 - 2.944e-5) / 2.944e-5,
            "omega2": abs(p.omega2 - 0.0028) / 0.0028,
            "rho_bar": abs(rb - 177.15) / 177.15,
            "Upsilon": abs(g.Upsilon - 3696.1) / 3696.1}
    ok = res.feasible and wall < 1.0 and kb <= 2.515 \
        and all(e < 0.02 for e in errs.values())
    _report("delayed gain pipeline", ok,
            f"omega1={p.omega1:.4g}, omega2={p.omega2:.4g}, "
            f"max rho_bar={rb:.2f}, max K_bar={kb:.4f} (<= 2.515), "
            f"Upsilon={g.Upsilon:.1f}, worst rel err "
            f"{max(errs.values()):.2%}, {wall:.3f}s")


def test_gradient_floor_1000_random_trees():
    rng = np.random.default_rng(101)
    params = certify_conditions(0.1, 0.08, 0.02, 0.0, 8, 1.0, 20.0, 0.0)
    violations = 0
    worst = np.inf
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        net = build_tree(n, random_tree_edges(rng, n))
        x = random_linked_positions(rng, net.edges, n, params.r)
        theta = theta_all(x, net, params)
        lhs = float(np.sum(theta * theta))
        rhs = (4.0 * net.lambda_l * params.P / (params.r ** 2 + params.Q)
               * swarm_energy(x, net, params))
        ratio = lhs / rhs if rhs > 0.0 else np.inf
        worst = min(worst, ratio)
        if lhs < rhs * (1.0 - 1e-10):
            violations += 1
    _report("gradient-sum energy floor on 1000 random trees",
            violations == 0,
            f"0 violations required, got {violations}; worst lhs/rhs={worst:.4f}")


def test_gradient_finite_difference_1000():
    rng = np.random.default_rng(103)
    params = certify_conditions(0.1, 0.08, 0.02, 0.0, 3, 1.0, 20.0, 0.0)
    dd = 1e-6
    worst = 0.0
    for _ in range(1000):
        n_dim = int(rng.integers(2, 4))
        x_i = rng.normal(scale=0.02, size=n_dim)
        u = rng.normal(size=n_dim)
        d = rng.uniform(5e-3, 0.98 * params.r)
        x_j = x_i + d * u / np.linalg.norm(u)
        g = grad_psi(x_i, x_j, params)
        fd = np.zeros(n_dim)
        for a in range(n_dim):
            e = np.zeros(n_dim)
            e[a] = dd
            fd[a] = (psi(np.linalg.norm(x_i + e - x_j), params)
                     - psi(np.linalg.norm(x_i - e - x_j), params)) / (2.0 * dd)
        worst = max(worst, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    _report("potential gradient vs finite differences (1000 samples)",
            worst < 1e-5, f"worst relative error {worst:.3g} < 1e-5")


def test_el_model_property_suite():
    rng = np.random.default_rng(107)
    models = {"point_mass": PointMass(mass=0.01), "two_link": TwoLinkArm()}
    fails = []
    for name, m in models.items():
        for _ in range(800):
            q = rng.uniform(-np.pi, np.pi, size=m.n_dof)
            qd = rng.normal(size=m.n_dof)
            z = rng.normal(size=m.n_dof)
            ev = np.linalg.eigvalsh(m.mass_matrix(q))
            if ev[0] < m.lam1 - 1e-12 or ev[-1] > m.lam2 + 1e-12:
                fails.append(f"{name}: inertia bounds")
            dt = 1e-6
            mdot = (m.mass_matrix(q + dt * qd)
                    - m.mass_matrix(q - dt * qd)) / (2.0 * dt)
            skew = float(qd @ (mdot - 2.0 * m.coriolis(q, qd)) @ qd)
            if abs(skew) > 1e-8 * max(1.0, float(qd @ qd)):
                fails.append(f"{name}: skew symmetry")
            if np.linalg.norm(m.coriolis(q, qd) @ z) \
                    > m.c_bound * np.linalg.norm(qd) * np.linalg.norm(z) + 1e-12:
                fails.append(f"{name}: coriolis bound")
    _report("robot model property suite (both models)",
            not fails, "inertia bounds, skew symmetry, coriolis bound on "
            f"800 states each; failures: {sorted(set(fails)) or 'none'}")


def test_pointwise_mismatch_inequalities_all_bundled():
    bad = []
    for name in CERTIFIED:
        res, _ = run_bundled(name)
        checks = res.verdict["checks"]
        names = ["mismatch_split", "force_split"]
        if res.scenario.mode == "delayed":
            names.append("gradient_shift")
        for c in names:
            if not checks[c]["ok"]:
                bad.append(f"{name}.{c}")
    _report("pointwise mismatch/force-split inequalities on bundled traces",
            not bad, f"checked {list(CERTIFIED)}; violations: {bad or 'none'}")


def test_theorem_delay_free_run():
    res, wall = run_bundled("paper_delay_free")
    checks = res.verdict["checks"]
    dist_ok = checks["link_distances"]["ok"]
    env_ok = checks["energy_decay"]["ok"]
    max_d = float(np.max(res.trace.edge_dist))
    ok = res.ok and dist_ok and env_ok and wall < 60.0
    _report("delay-free certified run", ok,
            f"V1 envelope at every sample: {env_ok}; max linked distance "
            f"{max_d:.4f} < r=0.1: {dist_ok}; verdict ok={res.ok}; "
            f"{wall:.1f}s wall")


def test_theorem_delayed_run():
    res, wall = run_bundled("paper_delayed")
    checks = res.verdict["checks"]
    max_d = float(np.max(res.trace.edge_dist))
    max_m = float(np.max(res.trace.msup))
    ok = (res.ok and checks["energy_decay"]["ok"]
          and checks["mismatch_margin"]["ok"]
          and max_d < 0.06 and max_m <= 0.04 and wall < 60.0)
    _report("delayed certified run", ok,
            f"V2 bounded: {checks['energy_decay']['ok']}; max linked distance "
            f"{max_d:.4f} < 0.06; max mismatch sup {max_m:.5f} <= 0.04; "
            f"verdict ok={res.ok}; {wall:.1f}s wall")


def test_zero_force_convergence():
    res, wall = run_bundled("zero_force")
    tr = res.trace
    heads = [i - 1 for i, _ in res.net.edges]
    tails = [j - 1 for _, j in res.net.edges]
    diffs = tr.x[-1, heads] - tr.x[-1, tails]
    phi_end = float(np.sqrt(np.sum(tr.v[-1] ** 2) + np.sum(diffs ** 2)))
    tail_ok = res.verdict["checks"].get("zero_force_tail", {}).get("ok", False)
    ok = res.ok and phi_end < 1e-4 and tail_ok and wall < 60.0
    _report("zero-force convergence", ok,
            f"||phi(30)|| = {phi_end:.3g} < 1e-4; exponential tail check "
            f"{tail_ok}; verdict ok={res.ok}; {wall:.1f}s wall")


def test_iss_sandwich_every_bundled_run():
    detail = []
    ok = True
    for name in CERTIFIED:
        res, _ = run_bundled(name)
        c = res.verdict["checks"]["iss_sandwich"]
        ok = ok and c["ok"]
        detail.append(f"{name}: margin {c['worst_margin']:.3g}")
    base, _ = run_bundled("baseline_break")
    uncertified = "iss_sandwich" not in base.verdict["checks"]
    _report("ISS sandwich on every certified bundled run",
            ok and uncertified,
            "; ".join(detail) + "; baseline has no certificate (skipped)")


def test_baseline_contrast():
    base, _ = run_bundled("baseline_break")
    lost = bool(base.verdict["connectivity_lost"])
    t_break = None
    over = np.max(base.trace.edge_dist, axis=1) >= base.scenario.r
    if np.any(over):
        t_break = float(base.trace.t[int(np.argmax(over))])
    contrast = engine.run(contrast_scenario(base))
    held = not contrast.verdict["connectivity_lost"] and contrast.ok
    max_d = float(np.max(contrast.trace.edge_dist))
    _report("baseline contrast", lost and held,
            f"virtual-point baseline loses a link (t={t_break}s) and its "
            f"verdict fails ok={base.ok}; the delayed controller under the "
            f"identical force trace keeps every distance <= {max_d:.4f} < 0.1 "
            f"with verdict ok={contrast.ok}")


def test_bit_exact_reproducibility():
    res1, _ = run_bundled("paper_delayed")
    res2 = engine.run(engine.load_bundled("paper_delayed"))
    same = all(np.array_equal(getattr(res1.trace, f), getattr(res2.trace, f))
               for f in ("t", "x", "v", "u", "K", "x0", "f", "edge_dist",
                         "delay", "x_delayed", "delayed_dist", "msup", "wsup"))
    _report("bit-exact reproducibility", same,
            "two full delayed runs with the same seed produced identical "
            "traces" if same else "traces differ")


def test_first_order_richardson():
    ratio = richardson_ratio()
    _report("integrator first-order convergence",
            1.7 <= ratio <= 2.3, f"Richardson ratio {ratio:.3f} in [1.7, 2.3]")
