"""Edge potential, swarm energy, and the connectivity certificate.

Every link (i,j) of the tree carries the barrier potential

    psi(d) = P d^2 / (r^2 - d^2 + Q),        0 <= d < r,

which is zero at d = 0, strictly increasing, and finite at d = r (psi(r) =
P r^2 / Q): a *bounded* barrier, so bounded operator forcing can only inject
bounded energy. The certificate below turns that into set invariance: if the
three margin values omega_1..3 are strictly positive, then along any
trajectory with swarm energy V_p <= V_p(0) + Delta every linked distance
stays below r_bar = r - kappa*epsilon < r, i.e. no link ever breaks and a
kappa*epsilon margin is reserved for delay-induced mismatch.

Distance bands used throughout:

    r_hat = r - epsilon   -- initial linked distances must start below this
    r_bar = r - kappa*epsilon, kappa in [0,1)  -- certified runtime band

Margin values, with N robots (so at most N-1 tree links):

    omega_1 = (r^2 - r_hat^2) r_bar^2 - (N-1)(r^2 - r_bar^2) r_hat^2
    omega_2 = omega_1 + (r_bar^2 - (N-1) r_hat^2) Q
    omega_3 = P omega_2 - (r^2 - r_bar^2 + Q)(r^2 - r_hat^2 + Q) Delta

omega_3 > 0 is exactly "(N-1) psi(r_hat) + Delta < psi(r_bar)": the worst
certified start plus the worst energy injection still cannot stretch any
single link to r_bar.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # only for annotations; topology imports this module
    from .topology import TreeNetwork


@dataclass(frozen=True)
class PotentialParams:
    """Potential/certificate parameter set.

    ``certified`` is True iff omega_1..3 were all strictly positive for the
    recorded ``Delta``; operations that rely on set invariance check it.
    """

    r: float
    epsilon: float
    r_hat: float
    kappa: float
    r_bar: float
    P: float
    Q: float
    Delta: float
    n_robots: int
    omega1: float
    omega2: float
    omega3: float
    psi_max: float
    certified: bool
    violated: str | None = None

    def with_delta(self, delta: float) -> "PotentialParams":
        """Re-certify the same geometry for a different energy budget."""
        return certify_conditions(self.r, self.epsilon, self.r_hat, self.kappa,
                                  self.n_robots, self.Q, self.P, delta)


def certify_conditions(r: float, epsilon: float, r_hat: float, kappa: float,
                       n_robots: int, Q: float, P: float, Delta: float) -> PotentialParams:
    """Evaluate the three margin conditions and return the parameter set.

    Inputs are validated structurally (0 < epsilon < r, r_hat = r - epsilon,
    0 <= kappa < 1, P > 0, Q > 0, Delta >= 0, n_robots >= 2); the omega signs
    decide ``certified`` and ``violated`` (the first failing condition) --
    infeasibility is a report, not an exception.
    """
    if not (0.0 < epsilon < r):
        raise ValueError(f"need 0 < epsilon < r, got epsilon={epsilon}, r={r}")
    if abs(r_hat - (r - epsilon)) > 1e-12 * max(1.0, r):
        raise ValueError(f"r_hat={r_hat} is not r - epsilon = {r - epsilon}")
    if not (0.0 <= kappa < 1.0):
        raise ValueError(f"need kappa in [0,1), got {kappa}")
    if P <= 0.0 or Q <= 0.0:
        raise ValueError("P and Q must be positive")
    if Delta < 0.0:
        raise ValueError("Delta must be nonnegative")
    if n_robots < 2:
        raise ValueError("need at least 2 robots")

    r_bar = r - kappa * epsilon
    m = n_robots - 1
    omega1 = (r * r - r_hat * r_hat) * r_bar * r_bar - m * (r * r - r_bar * r_bar) * r_hat * r_hat
    omega2 = omega1 + (r_bar * r_bar - m * r_hat * r_hat) * Q
    omega3 = P * omega2 - (r * r - r_bar * r_bar + Q) * (r * r - r_hat * r_hat + Q) * Delta
    psi_max = P * r_bar * r_bar / (r * r - r_bar * r_bar + Q)

    violated = None
    for name, val in (("omega1", omega1), ("omega2", omega2), ("omega3", omega3)):
        if val <= 0.0:
            violated = name
            break

    return PotentialParams(
        r=r, epsilon=epsilon, r_hat=r_hat, kappa=kappa, r_bar=r_bar,
        P=P, Q=Q, Delta=Delta, n_robots=n_robots,
        omega1=omega1, omega2=omega2, omega3=omega3, psi_max=psi_max,
        certified=violated is None, violated=violated,
    )


def psi(d, params: PotentialParams):
    """Edge potential at distance d (scalar or array), domain 0 <= d < r."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0) or np.any(d >= params.r):
        raise ValueError("psi is defined on 0 <= d < r")
    d2 = d * d
    return params.P * d2 / (params.r * params.r - d2 + params.Q)


def coupling_weight(d, params: PotentialParams):
    """Scalar gradient factor 2 P (r^2+Q) / (r^2 - d^2 + Q)^2.

    grad_i psi = coupling_weight(||x_ij||) * (x_i - x_j); also the edge weight
    of the state-dependent Laplacian.
    """
    d = np.asarray(d, dtype=float)
    r2q = params.r * params.r + params.Q
    den = params.r * params.r - d * d + params.Q
    return 2.0 * params.P * r2q / (den * den)


def grad_psi(x_i: np.ndarray, x_j: np.ndarray, params: PotentialParams) -> np.ndarray:
    """Gradient of psi(||x_i - x_j||) with respect to x_i.

    Smooth through the origin (the potential is a function of ||.||^2), and
    rejects ||x_ij|| >= r like psi.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    diff = x_i - x_j
    d = float(np.linalg.norm(diff))
    if d >= params.r:
        raise ValueError(f"distance {d:.6g} >= r={params.r}: gradient undefined")
    return float(coupling_weight(d, params)) * diff


def swarm_energy(positions: np.ndarray, net: "TreeNetwork",
                 params: PotentialParams) -> float:
    """Total potential energy V_p: sum of psi over tree links (each once)."""
    positions = np.asarray(positions, dtype=float)
    heads = [i - 1 for i, _ in net.edges]
    tails = [j - 1 for _, j in net.edges]
    d = np.linalg.norm(positions[heads] - positions[tails], axis=1)
    return float(np.sum(psi(d, params)))


@dataclass(frozen=True)
class LinkSafetyReport:
    """Per-link distances and margins under a claimed energy bound."""

    distances: np.ndarray        # (n_edges,)
    margins: np.ndarray          # r_bar - distance, per edge
    v_p: float
    v_p_bound: float
    energy_within_bound: bool
    all_links_safe: bool
    ok: bool                     # invariance verdict: energy bound -> links safe


def check_link_safety(positions: np.ndarray, net: "TreeNetwork",
                      params: PotentialParams, v_p_bound: float) -> LinkSafetyReport:
    """Set-invariance checkpoint at one configuration.

    If V_p(positions) <= v_p_bound and params are certified, every linked
    distance must be < r_bar; ``ok`` is False exactly when that implication
    fails (which for certified params indicates a simulation/monitor bug, not
    an operating condition).
    """
    if not params.certified:
        raise ValueError(f"params not certified (violated: {params.violated})")
    positions = np.asarray(positions, dtype=float)
    heads = [i - 1 for i, _ in net.edges]
    tails = [j - 1 for _, j in net.edges]
    d = np.linalg.norm(positions[heads] - positions[tails], axis=1)
    if np.any(d >= params.r):
        # broken link: energy is undefined, the implication is vacuously violated
        return LinkSafetyReport(distances=d, margins=params.r_bar - d,
                                v_p=float("inf"), v_p_bound=v_p_bound,
                                energy_within_bound=False, all_links_safe=False,
                                ok=False)
    vp = float(np.sum(psi(d, params)))
    within = vp <= v_p_bound
    safe = bool(np.all(d < params.r_bar))
    return LinkSafetyReport(distances=d, margins=params.r_bar - d, v_p=vp,
                            v_p_bound=v_p_bound, energy_within_bound=within,
                            all_links_safe=safe, ok=(not within) or safe)
