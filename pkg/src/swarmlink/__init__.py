"""Deterministic simulator and certified controllers for teleoperating a
tree-networked swarm of Euler-Lagrange robots under bounded operator force
and bounded time-varying link delays, with runtime monitors asserting every
certified bound."""
from .control import (ConnectivityLossError, GainSet, SelectionResult,
                      VirtualPointGains, control_delay_free, control_delayed,
                      select_gains_delay_free, select_gains_delayed)
from .delays import HistoryBuffer, make_profile
from .dynamics import ELModel, PointMass, TwoLinkArm, make_model, theta_all
from .engine import (RunResult, Scenario, ScenarioError, Simulation,
                     bundled_names, load_bundled, load_run, run, verify_run)
from .monitor import assert_run, format_verdict, iss_constants
from .potential import (PotentialParams, certify_conditions, coupling_weight,
                        grad_psi, psi, swarm_energy)
from .topology import TopologyError, TreeNetwork, build_tree, weighted_view
from .trace import Trace

__version__ = "0.1.0"

__all__ = [
    "ConnectivityLossError", "GainSet", "SelectionResult", "VirtualPointGains",
    "control_delay_free", "control_delayed", "select_gains_delay_free",
    "select_gains_delayed", "HistoryBuffer", "make_profile", "ELModel",
    "PointMass", "TwoLinkArm", "make_model", "theta_all", "RunResult",
    "Scenario", "ScenarioError", "Simulation", "bundled_names", "load_bundled",
    "load_run", "run", "verify_run", "assert_run", "format_verdict",
    "iss_constants", "PotentialParams", "certify_conditions", "coupling_weight",
    "grad_psi", "psi", "swarm_energy", "TopologyError", "TreeNetwork",
    "build_tree", "weighted_view", "Trace", "__version__",
]
