"""Scenario schema, determinism, integration accuracy, persistence."""
from __future__ import annotations

import dataclasses
import json
import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swarmlink import engine
from swarmlink.engine import (MasterProgram, RunResult, Scenario,
                              ScenarioError, Simulation, bundled_names,
                              load_bundled, load_run, run, save_run,
                              select_for_scenario, spring_force, verify_run)

from conftest import richardson_ratio, star3_base


def test_bundled_catalog():
    names = bundled_names()
    for want in ("paper_delay_free", "paper_delayed", "zero_force",
                 "baseline_break", "live_delayed"):
        assert want in names
    with pytest.raises(ScenarioError):
        load_bundled("missing_scenario")
    for name in names:
        sc = load_bundled(name)
        assert Scenario.from_dict(sc.to_dict()).to_dict() == sc.to_dict()


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario.from_dict({**star3_base(), "telemetry": True})   # unknown field
    with pytest.raises(ScenarioError):
        Scenario(**star3_base(mode="chaotic"))
    with pytest.raises(ScenarioError):
        Scenario(**star3_base(h=0.0))
    with pytest.raises(ScenarioError):
        Scenario(**star3_base(duration_s=1e-5))
    with pytest.raises(ScenarioError):
        Scenario(**star3_base(integrator="euler_forward"))
    with pytest.raises(ScenarioError):
        Scenario(**star3_base(initial_positions=[[0.0, 0.0]]))


def test_start_band_enforced():
    sc = Scenario(**star3_base(
        initial_positions=[[0.0, 0.0], [0.025, 0.0], [-0.015, 0.0]]))
    with pytest.raises(ScenarioError):
        Simulation(sc)   # 0.025 >= r - epsilon = 0.02


def test_master_force_cap_enforced():
    base = star3_base()
    base["master"]["f_max"] = 2.0   # exceeds gains f_bar = 0.6
    with pytest.raises(ScenarioError):
        Simulation(Scenario(**base))


def test_constant_overrides_must_be_conservative():
    for field, bad in (("lam1", 0.02), ("lam2", 0.005), ("c", -1.0)):
        base = star3_base()
        base["constants"] = dict(base["constants"], **{field: bad})
        with pytest.raises(ScenarioError):
            Simulation(Scenario(**base))
    base = star3_base()
    base["constants"] = {"lam1": 0.005, "lam2": 0.02, "c": 0.01}
    Simulation(Scenario(**base))   # conservative directions accepted


def test_infeasible_selection_rejected_at_build():
    base = star3_base()
    base["gains"] = dict(base["gains"], P=0.001)
    with pytest.raises(ScenarioError, match="infeasible"):
        Simulation(Scenario(**base))


def test_waypoint_program_timing():
    spec = {"program": "waypoints", "k0": 10.0, "f_max": 1.0,
            "points": [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]],
            "speeds": [0.5, 1.0]}
    mp = MasterProgram(spec, np.zeros(2))
    assert_allclose(mp.x0_at(0.0), [0.0, 0.0], atol=0)
    assert_allclose(mp.x0_at(1.0), [0.5, 0.0], rtol=1e-12)
    assert_allclose(mp.x0_at(2.0), [1.0, 0.0], rtol=1e-12)
    assert_allclose(mp.x0_at(3.0), [1.0, 1.0], rtol=1e-12)
    assert_allclose(mp.x0_at(10.0), [1.0, 2.0], rtol=1e-12)   # holds at end
    for bad in ({"points": [[0.0, 0.0]], "speeds": []},
                {"points": [[0.0, 0.0], [1.0, 0.0]], "speeds": [0.5, 0.5]},
                {"points": [[0.0, 0.0], [0.0, 0.0]], "speeds": [0.5]},
                {"points": [[0.0, 0.0], [1.0, 0.0]], "speeds": [-0.5]}):
        with pytest.raises(ScenarioError):
            MasterProgram({"program": "waypoints", **bad}, np.zeros(2))


def test_command_log_zero_order_hold():
    spec = {"program": "command_log",
            "commands": [[0.5, 1.0, 1.0], [1.0, 2.0, 2.0]]}
    mp = MasterProgram(spec, np.array([9.0, 9.0]))
    assert_allclose(mp.x0_at(0.3), [9.0, 9.0], atol=0)   # holds the start
    assert_allclose(mp.x0_at(0.7), [1.0, 1.0], atol=0)
    assert_allclose(mp.x0_at(5.0), [2.0, 2.0], atol=0)
    with pytest.raises(ScenarioError):
        MasterProgram({"program": "command_log",
                       "commands": [[1.0, 0.0, 0.0], [0.5, 0.0, 0.0]]},
                      np.zeros(2))


def test_live_push_logged_with_sim_time():
    sc = Scenario(**star3_base(master={"program": "live", "k0": 10.0,
                                       "f_max": 0.6}, duration_s=0.1))
    sim = Simulation(sc)
    for _ in range(50):
        sim.step()
    sim.push_command([0.005, 0.0])
    log = sim.master.command_log()
    assert len(log) == 1
    assert_allclose(log[0], [0.05, 0.005, 0.0], rtol=1e-9)


def test_spring_force_saturation():
    f = spring_force(10.0, 0.5, np.array([1.0, 0.0]), np.zeros(2))
    assert_allclose(np.linalg.norm(f), 0.5, rtol=1e-12)
    f2 = spring_force(10.0, 0.5, np.array([0.01, 0.0]), np.zeros(2))
    assert_allclose(f2, [0.1, 0.0], rtol=1e-12)
    assert_allclose(spring_force(10.0, 0.5, np.zeros(2), np.zeros(2)), 0.0,
                    atol=0)


def test_force_replay_program():
    forces = [[0.1, 0.0], [0.0, 0.2]]
    mp = MasterProgram({"program": "force_replay", "forces": forces},
                       np.zeros(2))
    assert mp.is_force_program
    assert_allclose(mp.max_force(), 0.2, rtol=1e-12)
    assert_allclose(mp.force_at(1), [0.0, 0.2], atol=0)
    assert_allclose(mp.force_at(99), [0.0, 0.0], atol=0)   # past the recording


def test_bit_exact_repeat_short_delayed():
    sc = dataclasses.replace(load_bundled("paper_delayed"), duration_s=1.5)
    tr1 = run(sc).trace
    tr2 = run(sc).trace
    for name in ("t", "x", "v", "u", "K", "x0", "f", "edge_dist", "delay",
                 "x_delayed", "delayed_dist", "msup", "wsup"):
        assert_array_equal(getattr(tr1, name), getattr(tr2, name))


def test_seed_changes_delays():
    sc = dataclasses.replace(load_bundled("paper_delayed"), duration_s=0.5)
    tr1 = run(sc).trace
    tr2 = run(dataclasses.replace(sc, seed=99)).trace
    assert not np.array_equal(tr1.delay, tr2.delay)


def test_integrator_first_order():
    assert 1.7 <= richardson_ratio() <= 2.3


def test_rk4_close_to_semi_implicit():
    sim_a = Simulation(Scenario(**star3_base(duration_s=1.0)))
    sim_a.run_to_end()
    sim_b = Simulation(Scenario(**star3_base(duration_s=1.0,
                                             integrator="rk4")))
    sim_b.run_to_end()
    assert np.max(np.abs(sim_a.x - sim_b.x)) < 1e-4


def test_abort_on_non_finite_state():
    sim = Simulation(Scenario(**star3_base(duration_s=1.0)))
    for _ in range(10):
        sim.step()
    sim.x[0, 0] = np.nan
    sim.run_to_end()
    assert sim.aborted
    assert "non-finite" in sim.abort_reason
    tr = sim.trace()
    assert tr.aborted and tr.n_samples == 11
    verdict = engine.monitor.assert_run(tr, sim.net, sim.model, sim.params,
                                        sim.gains)
    assert verdict["aborted"] and not verdict["ok"]


def test_save_load_verify_round_trip(tmp_path):
    sc = dataclasses.replace(load_bundled("paper_delayed"), duration_s=1.0)
    res = run(sc, out_dir=tmp_path)
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "meta.json").exists()
    assert (tmp_path / "verdict.json").exists()
    assert (tmp_path / "certificate.json").exists()
    sc2, tr2, gains2 = load_run(tmp_path)
    assert sc2.to_dict() == sc.to_dict()
    for name in ("t", "x", "v", "u", "K", "x0", "f", "edge_dist", "delay",
                 "x_delayed", "delayed_dist", "msup", "wsup"):
        assert_array_equal(getattr(tr2, name), getattr(res.trace, name))
    assert gains2.to_dict() == res.gains.to_dict()
    re_verdict = verify_run(tmp_path)
    assert re_verdict == res.verdict
    with open(tmp_path / "certificate.json") as fh:
        cert = json.load(fh)
    assert cert["feasible"]


def test_select_for_scenario_modes():
    for name in ("paper_delay_free", "paper_delayed"):
        res = select_for_scenario(load_bundled(name))
        assert res.feasible
    with pytest.raises(ScenarioError):
        select_for_scenario(load_bundled("baseline_break"))


def test_stability_warning_on_coarse_step(caplog):
    base = star3_base(h=0.02)
    with caplog.at_level(logging.WARNING, logger="swarmlink"):
        Simulation(Scenario(**base))
    assert any("explicit-integration limit" in rec.message
               for rec in caplog.records)


def test_run_result_ok_property():
    sc = Scenario(**star3_base(duration_s=0.5))
    res = run(sc)
    assert isinstance(res, RunResult)
    assert res.ok == bool(res.verdict["ok"])
    assert res.ok
