"""Euler-Lagrange robot models, swarm state, and the coupling signals.

Each robot obeys  M_i(x) x_dd + C_i(x, x_d) x_d = u_i + rho_i f  in its own
n-dimensional coordinates, with the three structural properties every
certificate leans on:

  P.1  lam1 I <= M(x) <= lam2 I            (uniformly bounded inertia)
  P.2  M_dot - 2C skew-symmetric           (passivity / power balance)
  P.3  ||C(x, y) z|| <= c ||y|| ||z||      (Coriolis bounded bilinearly)

Models expose certified constants (lam1, lam2, c_bound); for the two-link arm
they are estimated by dense sampling and inflated/deflated by a 10% margin,
for the point mass they are exact.

Coupling signals (per robot i, neighbors j over tree links):

  theta_i     = sum_j grad_i psi(||x_ij||)           -- potential gradient sum
  theta_dot_i = sum_j [ 8P(r^2+Q) (x_ij . v_ij) x_ij / (r^2-||x_ij||^2+Q)^3
                        + 2P(r^2+Q) v_ij / (r^2-||x_ij||^2+Q)^2 ]
  s_i         = v_i + sigma * theta_i                -- sliding variable
  Delta_i     = M_i theta_dot_i + C_i theta_i        -- inertial mismatch

The master is kinematic: it injects only the saturated proportional force
f = sat(k0 (x0 - x_informed)) with ||f|| <= f_max by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import PotentialParams, coupling_weight
from .topology import TreeNetwork


class ELModel:
    """Base Euler-Lagrange model; subclasses define M and C.

    lam1, lam2, c_bound are the certified P.1/P.3 constants.
    """

    n_dof: int
    lam1: float
    lam2: float
    c_bound: float

    def mass_matrix(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def coriolis(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """C(x, y): Coriolis matrix at configuration x with velocity argument y."""
        raise NotImplementedError

    def accelerate(self, x: np.ndarray, v: np.ndarray, force: np.ndarray) -> np.ndarray:
        """x_dd = M(x)^-1 (force - C(x, v) v)."""
        rhs = force - self.coriolis(x, v) @ v
        return np.linalg.solve(self.mass_matrix(x), rhs)

    def mass_quadratic_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """y^T M(x) y for stacked samples xs, ys of shape (T, n)."""
        out = np.empty(xs.shape[0])
        for k in range(xs.shape[0]):
            out[k] = ys[k] @ self.mass_matrix(xs[k]) @ ys[k]
        return out

    def mass_apply_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """M(x) y for stacked samples, shape (T, n)."""
        out = np.empty_like(ys)
        for k in range(xs.shape[0]):
            out[k] = self.mass_matrix(xs[k]) @ ys[k]
        return out

    def coriolis_apply_batch(self, xs: np.ndarray, ys: np.ndarray,
                             zs: np.ndarray) -> np.ndarray:
        """C(x, y) z for stacked samples, shape (T, n)."""
        out = np.empty_like(zs)
        for k in range(xs.shape[0]):
            out[k] = self.coriolis(xs[k], ys[k]) @ zs[k]
        return out


class PointMass(ELModel):
    """Ideal point mass in n coordinates: M = m I, C = 0 (exact constants)."""

    def __init__(self, mass: float, n_dof: int = 2):
        if mass <= 0.0:
            raise ValueError("mass must be positive")
        self.mass = float(mass)
        self.n_dof = int(n_dof)
        self.lam1 = self.mass
        self.lam2 = self.mass
        self.c_bound = 0.0

    def mass_matrix(self, x: np.ndarray) -> np.ndarray:
        return self.mass * np.eye(self.n_dof)

    def coriolis(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros((self.n_dof, self.n_dof))

    def accelerate(self, x: np.ndarray, v: np.ndarray, force: np.ndarray) -> np.ndarray:
        return force / self.mass

    def mass_quadratic_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.mass * np.einsum("kn,kn->k", ys, ys)

    def mass_apply_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.mass * ys

    def coriolis_apply_batch(self, xs: np.ndarray, ys: np.ndarray,
                             zs: np.ndarray) -> np.ndarray:
        return np.zeros_like(zs)


class TwoLinkArm(ELModel):
    """Planar two-revolute-joint arm in joint coordinates (no gravity).

    Standard matrices with a = I1 + I2 + m1 rc1^2 + m2 (l1^2 + rc2^2),
    b = m2 l1 rc2, d = I2 + m2 rc2^2:

        M(q)     = [[a + 2b cos q2, d + b cos q2], [d + b cos q2, d]]
        C(q, y)  = [[-b sin q2 y2, -b sin q2 (y1 + y2)], [b sin q2 y1, 0]]

    M depends on q2 only, so the P.1 constants come from a dense q2 sweep;
    the P.3 constant from maximizing ||C(q,y)z|| over unit y, z. Both carry a
    10% safety margin (lam1 deflated, lam2 and c_bound inflated).
    """

    n_dof = 2

    def __init__(self, m1: float = 0.2, m2: float = 0.2, l1: float = 0.1,
                 rc1: float = 0.05, rc2: float = 0.05,
                 inertia1: float | None = None, inertia2: float | None = None,
                 l2: float = 0.1):
        if min(m1, m2, l1, l2, rc1, rc2) <= 0.0:
            raise ValueError("arm parameters must be positive")
        self.m1, self.m2, self.l1, self.l2 = m1, m2, l1, l2
        inertia1 = m1 * l1 * l1 / 12.0 if inertia1 is None else inertia1
        inertia2 = m2 * l2 * l2 / 12.0 if inertia2 is None else inertia2
        self._a = inertia1 + inertia2 + m1 * rc1 * rc1 + m2 * (l1 * l1 + rc2 * rc2)
        self._b = m2 * l1 * rc2
        self._d = inertia2 + m2 * rc2 * rc2
        if self._a * self._d - self._d * self._d - self._b * self._b <= 0.0:
            raise ValueError("inertia parameters do not give a positive-definite M")
        self.lam1, self.lam2, self.c_bound = self._certify_constants()

    def mass_matrix(self, x: np.ndarray) -> np.ndarray:
        c2 = np.cos(x[1])
        off = self._d + self._b * c2
        return np.array([[self._a + 2.0 * self._b * c2, off], [off, self._d]])

    def coriolis(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        bs2 = self._b * np.sin(x[1])
        return np.array([[-bs2 * y[1], -bs2 * (y[0] + y[1])], [bs2 * y[0], 0.0]])

    def _certify_constants(self) -> tuple[float, float, float]:
        q2 = np.linspace(0.0, 2.0 * np.pi, 721)
        lo, hi = np.inf, -np.inf
        for c2 in np.cos(q2):
            off = self._d + self._b * c2
            m = np.array([[self._a + 2.0 * self._b * c2, off], [off, self._d]])
            w = np.linalg.eigvalsh(m)
            lo, hi = min(lo, w[0]), max(hi, w[1])
        # ||C(q,y)z||/(||y|| ||z||) depends on q only through |sin q2| <= 1;
        # maximize at sin q2 = 1 over the unit circle of directions
        ang = np.linspace(0.0, 2.0 * np.pi, 721)
        ys = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        cmax = 0.0
        for y in ys:
            cm = np.array([[-y[1], -(y[0] + y[1])], [y[0], 0.0]]) * self._b
            cmax = max(cmax, float(np.linalg.norm(cm, 2)))
        return 0.9 * lo, 1.1 * hi, 1.1 * cmax

    def mass_quadratic_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        c2 = np.cos(xs[:, 1])
        m11 = self._a + 2.0 * self._b * c2
        m12 = self._d + self._b * c2
        return (m11 * ys[:, 0] ** 2 + 2.0 * m12 * ys[:, 0] * ys[:, 1]
                + self._d * ys[:, 1] ** 2)

    def mass_apply_batch(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        c2 = np.cos(xs[:, 1])
        m11 = self._a + 2.0 * self._b * c2
        m12 = self._d + self._b * c2
        return np.stack([m11 * ys[:, 0] + m12 * ys[:, 1],
                         m12 * ys[:, 0] + self._d * ys[:, 1]], axis=1)

    def coriolis_apply_batch(self, xs: np.ndarray, ys: np.ndarray,
                             zs: np.ndarray) -> np.ndarray:
        bs2 = self._b * np.sin(xs[:, 1])
        return np.stack([-bs2 * (ys[:, 1] * zs[:, 0] + (ys[:, 0] + ys[:, 1]) * zs[:, 1]),
                         bs2 * ys[:, 0] * zs[:, 0]], axis=1)


def make_model(kind: str, n_dof: int = 2, **kwargs) -> ELModel:
    if kind == "point_mass":
        return PointMass(mass=kwargs.get("mass", 0.01), n_dof=n_dof)
    if kind == "two_link":
        return TwoLinkArm(**kwargs)
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass
class SwarmState:
    """Positions/velocities of the N slaves; row v is robot v+1 (0-based)."""

    x: np.ndarray   # (N, n)
    v: np.ndarray   # (N, n)
    t: float = 0.0

    def copy(self) -> "SwarmState":
        return SwarmState(self.x.copy(), self.v.copy(), self.t)


def edge_displacements(positions: np.ndarray, net: TreeNetwork) -> np.ndarray:
    """x_head - x_tail per edge, shape (n_edges, n)."""
    heads = [i - 1 for i, _ in net.edges]
    tails = [j - 1 for _, j in net.edges]
    return positions[heads] - positions[tails]


def theta_all(positions: np.ndarray, net: TreeNetwork,
              params: PotentialParams) -> np.ndarray:
    """Gradient sums theta_i for all robots at once, shape (N, n)."""
    diffs = edge_displacements(positions, net)
    d = np.linalg.norm(diffs, axis=1)
    if np.any(d >= params.r):
        raise ValueError("a linked pair is at or beyond the communication radius")
    contrib = coupling_weight(d, params)[:, None] * diffs
    theta = np.zeros_like(np.asarray(positions, dtype=float))
    heads = [i - 1 for i, _ in net.edges]
    tails = [j - 1 for _, j in net.edges]
    np.add.at(theta, heads, contrib)
    np.add.at(theta, tails, -contrib)
    return theta


def theta_dot_all(positions: np.ndarray, velocities: np.ndarray,
                  net: TreeNetwork, params: PotentialParams) -> np.ndarray:
    """Time derivative of the gradient sums along the current velocities."""
    diffs = edge_displacements(positions, net)
    vdiffs = edge_displacements(velocities, net)
    d2 = np.einsum("kn,kn->k", diffs, diffs)
    den = params.r * params.r - d2 + params.Q
    r2q = params.r * params.r + params.Q
    dot = np.einsum("kn,kn->k", diffs, vdiffs)
    contrib = (8.0 * params.P * r2q * dot / den ** 3)[:, None] * diffs \
        + (2.0 * params.P * r2q / den ** 2)[:, None] * vdiffs
    out = np.zeros_like(np.asarray(positions, dtype=float))
    heads = [i - 1 for i, _ in net.edges]
    tails = [j - 1 for _, j in net.edges]
    np.add.at(out, heads, contrib)
    np.add.at(out, tails, -contrib)
    return out


def theta_from_neighbors(x_i: np.ndarray, neighbor_positions: np.ndarray,
                         params: PotentialParams) -> np.ndarray:
    """theta_i from robot i's own position and its neighbors' (possibly
    delayed) positions, shape (n,). This is the only view a robot has."""
    x_i = np.asarray(x_i, dtype=float)
    acc = np.zeros_like(x_i)
    for x_j in np.asarray(neighbor_positions, dtype=float):
        diff = x_i - x_j
        d = float(np.linalg.norm(diff))
        if d >= params.r:
            raise ValueError(f"neighbor at distance {d:.6g} >= r={params.r}")
        acc += float(coupling_weight(d, params)) * diff
    return acc


def sliding_all(positions: np.ndarray, velocities: np.ndarray, sigma: float,
                net: TreeNetwork, params: PotentialParams) -> np.ndarray:
    """Sliding variables s_i = v_i + sigma theta_i, shape (N, n)."""
    return velocities + sigma * theta_all(positions, net, params)


def mismatch_delta(model: ELModel, x_i: np.ndarray, v_i: np.ndarray,
                   theta_i: np.ndarray, theta_dot_i: np.ndarray) -> np.ndarray:
    """Inertial mismatch Delta_i = M(x_i) theta_dot_i + C(x_i, v_i) theta_i."""
    return model.mass_matrix(x_i) @ theta_dot_i + model.coriolis(x_i, v_i) @ theta_i


def phi_norm2(positions: np.ndarray, velocities: np.ndarray,
              net: TreeNetwork) -> float:
    """Squared norm of the stacked error state phi = (velocities, edge
    displacements): sum_i ||v_i||^2 + sum_edges ||x_head - x_tail||^2."""
    diffs = edge_displacements(positions, net)
    return float(np.sum(velocities * velocities) + np.sum(diffs * diffs))


@dataclass
class MasterState:
    """Kinematic operator point and the force it injects into robot 1.

    The coupling is saturated proportional: f = sat(k0 (x0 - x1)) with the
    Euclidean norm clipped to f_max, so ||f|| <= f_max holds by construction
    regardless of how the operator moves.
    """

    x0: np.ndarray
    k0: float = 10.0
    f_max: float = 1.0


def master_force(master: MasterState, x_informed: np.ndarray) -> np.ndarray:
    raw = master.k0 * (np.asarray(master.x0, dtype=float) - np.asarray(x_informed, dtype=float))
    nrm = float(np.linalg.norm(raw))
    if nrm <= master.f_max or nrm == 0.0:
        return raw
    return raw * (master.f_max / nrm)
