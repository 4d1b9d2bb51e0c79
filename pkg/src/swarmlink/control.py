"""Dynamic coupling/damping controllers and certified gain selection.

Both certified controllers have the same shape,

    u_i = -(sigma K_i(t) + B) theta_i - (K_i(t) + D) v_i ,

i.e. nonlinear spring coupling along the potential gradient plus damping,
with a state-dependent gain K_i(t) large enough to dominate the inertial
mismatch of robot i's own dynamics. They differ in what theta_i is built
from and how K_i(t) is scheduled:

* delay-free: theta_i from current neighbor positions; K_i(t) tracks the
  mismatch bound Lambda1 evaluated at the true link distances, so the
  certified surplus K_hat_i(t) = K_i(t) - sum_j sigma Lambda1_ij(t) -
  informed_i/4 equals rho lam2_i / 2 identically;
* delayed: theta_i from *delayed* neighbor positions; robot i cannot know
  its true link distances, so Lambda1 is evaluated at the certified clamp
  chi_ij = min(r_bar, ||x^d_ij|| + kappa epsilon) >= true distance, and the
  whole schedule is scaled by sigma_bar/(sigma_bar - sigma) so that the
  delay-penalty surplus K_tilde_i(t) still clears rho lam2_i / 2.

Gain selection mirrors the two existence proofs step by step and emits a
certificate: every inequality the proofs need, with numbers and slack, plus
the provenance of every constant (given / default / searched / computed).
Infeasibility is reported, never papered over.

Both control functions accept only robot-local data (own state plus per-
neighbor link data); nothing here can read across the network, which is what
makes the scheme distributed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .potential import PotentialParams, certify_conditions, coupling_weight
from .topology import TreeNetwork


class ConnectivityLossError(RuntimeError):
    """A controller precondition saw a link distance at or past the radius."""


# ---------------------------------------------------------------------------
# mismatch bounds


def lambda_1(dist, lam2_i: float, c_i: float, eta_i: float, gamma_i: float,
             zeta_i: float, params: PotentialParams):
    """First-kind mismatch bound Lambda1(d) for one robot's link at distance d.

    Three Young-split terms (inertia x gradient rate, inertia x relative
    velocity, Coriolis x gradient); each is nondecreasing in d on [0, r), so
    a clamp evaluated at an upper bound of d upper-bounds the true value.

        Lambda1 = 16 lam2^2 P^2 (r^2+Q)^2 d^4 / (eta  den^6)
                +    lam2^2 P^2 (r^2+Q)^2     / (gamma den^4)
                +    c^2    P^2 (r^2+Q)^2 d^2 / (2 zeta den^4),
        den = r^2 - d^2 + Q.
    """
    d = np.asarray(dist, dtype=float)
    r2q = params.r * params.r + params.Q
    den = params.r * params.r - d * d + params.Q
    p2 = params.P * params.P * r2q * r2q
    t1 = 16.0 * lam2_i * lam2_i * p2 * d ** 4 / (eta_i * den ** 6)
    t2 = lam2_i * lam2_i * p2 / (gamma_i * den ** 4)
    t3 = c_i * c_i * p2 * d * d / (2.0 * zeta_i * den ** 4)
    return t1 + t2 + t3


def lambda_2(dist_true, dist_delayed, params: PotentialParams):
    """Second-kind mismatch bound Lambda2(d, d_d): Lipschitz factor of the
    potential gradient between the true and the delayed displacement,

        ||grad psi(x_ij) - grad psi(x^d_ij)|| <= Lambda2 ||x_j - x_j^d||,

        Lambda2 = 2P(r^2+Q) [ d (d + d_d)(den + den_d) / (den^2 den_d^2)
                              + 1 / den_d^2 ].

    Nondecreasing in both distances; its value at (r_bar, r) is the constant
    used in the delay-penalty weight.
    """
    d = np.asarray(dist_true, dtype=float)
    dd = np.asarray(dist_delayed, dtype=float)
    r2 = params.r * params.r
    den = r2 - d * d + params.Q
    dend = r2 - dd * dd + params.Q
    r2q = r2 + params.Q
    return 2.0 * params.P * r2q * (
        d * (d + dd) * (den + dend) / (den * den * dend * dend) + 1.0 / (dend * dend))


# ---------------------------------------------------------------------------
# gain set + certificate


@dataclass
class GainSet:
    """Certified controller constants for one scenario.

    Per-robot arrays have length N (slaves). ``informed`` is the 0-based
    index of the robot coupled to the operator (always 0 here).
    """

    mode: str
    sigma: float
    rho: float
    B: float
    D: float
    f_bar: float
    eta: np.ndarray
    gamma: np.ndarray
    zeta: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    c: np.ndarray
    Delta: float
    informed: int = 0
    # delayed-mode extras (None in delay-free mode)
    sigma_bar: float | None = None
    rho_bar: np.ndarray | None = None        # per-robot preliminary decay rates
    rho_bar_design: float | None = None      # max_i rho_bar_i, used in the cap
    tbar: np.ndarray | None = None           # (N, N): tbar[j, i] bounds j -> i
    tbar_max: float | None = None
    Omega: float | None = None
    Upsilon: float | None = None
    K_bar: np.ndarray | None = None
    lam1_bar: np.ndarray | None = None       # Lambda1 at the r_bar clamp, per robot
    lam2_bar: float | None = None            # Lambda2 at (r_bar, r)

    def bsd(self) -> float:
        """The recurring divisor B + sigma D."""
        return self.B + self.sigma * self.D

    def informed_flag(self, i: int) -> float:
        return 1.0 if i == self.informed else 0.0

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GainSet":
        kw = dict(d)
        for k in ("eta", "gamma", "zeta", "lam1", "lam2", "c", "rho_bar", "K_bar",
                  "lam1_bar", "tbar"):
            if kw.get(k) is not None:
                kw[k] = np.asarray(kw[k], dtype=float)
        return cls(**kw)


@dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float
    sense: str          # ">", ">=", "<", "<=" : lhs SENSE rhs must hold
    ok: bool
    note: str = ""

    @property
    def margin(self) -> float:
        s = self.lhs - self.rhs
        return s if self.sense in (">", ">=") else -s


def _check(ineqs: list[Inequality], name: str, lhs: float, rhs: float,
           sense: str, note: str = "") -> bool:
    if sense == ">":
        ok = lhs > rhs
    elif sense == ">=":
        ok = lhs >= rhs
    elif sense == "<":
        ok = lhs < rhs
    else:
        ok = lhs <= rhs
    ineqs.append(Inequality(name, float(lhs), float(rhs), sense, bool(ok), note))
    return ok


@dataclass
class SelectionResult:
    """Outcome of a gain-selection pipeline: gains + params on success, and a
    certificate either way (inputs, constants, inequalities, provenance)."""

    feasible: bool
    gains: GainSet | None
    params: PotentialParams | None
    inequalities: list[Inequality]
    constants: dict
    provenance: dict
    violated: str | None = None

    def certificate(self) -> dict:
        return {
            "feasible": self.feasible,
            "violated": self.violated,
            "constants": self.constants,
            "provenance": self.provenance,
            "inequalities": [vars(q) | {"margin": q.margin} for q in self.inequalities],
        }

    def certificate_json(self) -> str:
        return json.dumps(self.certificate(), indent=2, sort_keys=True)


def _as_array(val, n: int, name: str) -> np.ndarray:
    arr = np.asarray(val, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"{name} must be a scalar or length-{n} array")
    return arr


# ---------------------------------------------------------------------------
# delay-free pipeline


def select_gains_delay_free(net: TreeNetwork, r: float, epsilon: float,
                            lam1, lam2, c, f_bar: float, positions0: np.ndarray,
                            given: dict | None = None) -> SelectionResult:
    """Existence-proof pipeline for the delay-free controller.

    Order: (heuristics rho, sigma, B, eta, gamma, zeta) -> damping D so the
    residual damping stays nonnegative -> kappa = 0 and Q for the first two
    margin conditions -> P large enough for both the decay-rate bound and the
    third margin condition, with the energy budget Delta recomputed from the
    start state at every candidate P (the start gradient scales with the
    barrier). Constants passed in ``given`` are verified instead of searched.
    """
    given = dict(given or {})
    n = net.n_vertices
    lam1 = _as_array(lam1, n, "lam1")
    lam2 = _as_array(lam2, n, "lam2")
    c = _as_array(c, n, "c")
    prov: dict = {}
    ineqs: list[Inequality] = []

    def take(name, default):
        if name in given and given[name] is not None:
            prov[name] = "given"
            return given[name]
        prov[name] = "default"
        return default

    rho = float(take("rho", 1.0))
    sigma = float(take("sigma", 1.0))
    B = float(take("B", 1.0))
    eta = _as_array(take("eta", 0.1), n, "eta")
    gamma = _as_array(take("gamma", 0.1), n, "gamma")
    zeta = _as_array(take("zeta", 0.1), n, "zeta")
    kappa = float(take("kappa", 0.0))
    deg = np.array([len(net.neighbors[i]) for i in range(n)], dtype=float)

    # residual damping D_hat_i = D - sum_{j in N_i} 2 sigma (eta_i + gamma_i
    # + zeta_i + eta_j + gamma_j) must stay nonnegative
    drain = np.array([
        sum(2.0 * sigma * (eta[i] + gamma[i] + zeta[i] + eta[j] + gamma[j])
            for j in net.neighbors[i]) for i in range(n)])
    if "D" in given and given["D"] is not None:
        D = float(given["D"])
        prov["D"] = "given"
    else:
        D = 0.25
        while D < float(np.max(drain)) and D < 1e9:
            D *= 1.25
        D *= 1.05
        prov["D"] = "searched"
    ok_dhat = _check(ineqs, "damping_residual_min", float(D - np.max(drain)), 0.0, ">=",
                     "min_i D_hat_i")

    # margin conditions at kappa for this Q (Q searched descending if free)
    def margins(Q, P, Delta):
        return certify_conditions(r, epsilon, r - epsilon, kappa, n, Q, P, Delta)

    if "Q" in given and given["Q"] is not None:
        Q = float(given["Q"])
        prov["Q"] = "given"
    else:
        Q = 1.0
        prov["Q"] = "searched"
        for _ in range(60):
            if margins(Q, 1.0, 0.0).omega2 > 0.0:
                break
            Q *= 0.5
    pre = margins(Q, 1.0, 0.0)
    ok_w1 = _check(ineqs, "omega1_positive", pre.omega1, 0.0, ">")
    ok_w2 = _check(ineqs, "omega2_positive", pre.omega2, 0.0, ">")

    # start state: linked distances must sit inside the start band so the
    # initial potential is covered by (N-1) psi(r_hat)
    x0p = np.asarray(positions0, dtype=float)
    heads = [a - 1 for a, _ in net.edges]
    tails = [b - 1 for _, b in net.edges]
    diffs0 = x0p[heads] - x0p[tails]
    d0 = np.linalg.norm(diffs0, axis=1)
    ok_start = _check(ineqs, "start_inside_band", float(np.max(d0)), r - epsilon,
                      "<=", "every initial linked distance <= r_hat")

    bsd = B + sigma * D

    def delta_of(p_val):
        w = 2.0 * p_val * (r * r + Q) / (r * r - d0 * d0 + Q) ** 2
        th = np.zeros_like(x0p)
        np.add.at(th, heads, w[:, None] * diffs0)
        np.add.at(th, tails, -w[:, None] * diffs0)
        s0sq = sigma * sigma * np.einsum("in,in->i", th, th)
        return float(np.sum(lam2 * s0sq) / (2.0 * bsd) + f_bar * f_bar / (rho * bsd))

    # P must clear the decay-rate floor and make the injection margin positive
    p_floor = rho * (r * r + Q) * bsd / (4.0 * sigma * net.lambda_l * B)
    if "P" in given and given["P"] is not None:
        P = float(given["P"])
        prov["P"] = "given"
    else:
        P = 1.0
        prov["P"] = "searched"
        for _ in range(60):
            if P >= p_floor and margins(Q, P, delta_of(P)).omega3 > 0.0:
                break
            P *= 1.5
    Delta = delta_of(P)
    params = margins(Q, P, Delta)
    ok_pfloor = _check(ineqs, "decay_rate_floor", P, p_floor, ">=",
                       "P >= rho (r^2+Q)(B+sigma D) / (4 sigma lambda_l B)")
    ok_w3 = _check(ineqs, "omega3_positive", params.omega3, 0.0, ">",
                   f"energy budget Delta={Delta:.6g}")
    r_hat = r - epsilon
    psi_hat = P * r_hat * r_hat / (r * r - r_hat * r_hat + Q)
    _check(ineqs, "injection_headroom", params.psi_max,
           (n - 1) * psi_hat + Delta, ">",
           "worst certified start + full budget below single-link capacity "
           "(equivalent restatement of omega3 > 0)")

    feasible = all((ok_dhat, ok_w1, ok_w2, ok_start, ok_pfloor, ok_w3))
    violated = None if feasible else next(q.name for q in ineqs if not q.ok)

    constants = {
        "rho": rho, "sigma": sigma, "B": B, "D": D, "Q": Q, "P": P,
        "kappa": kappa, "Delta": Delta, "f_bar": f_bar,
        "lambda_l": net.lambda_l, "lambda_l_max": net.lambda_l_max,
        "D_hat": (D - drain).tolist(), "degrees": deg.tolist(),
        "p_floor": p_floor,
        "omega1": params.omega1, "omega2": params.omega2, "omega3": params.omega3,
        "psi_max": params.psi_max,
    }
    gains = None
    if feasible:
        gains = GainSet(mode="delay_free", sigma=sigma, rho=rho, B=B, D=D,
                        f_bar=f_bar, eta=eta, gamma=gamma, zeta=zeta,
                        lam1=lam1, lam2=lam2, c=c, Delta=Delta)
    return SelectionResult(feasible=feasible, gains=gains, params=params,
                           inequalities=ineqs, constants=constants,
                           provenance=prov, violated=violated)


def update_gain_delay_free(dists_i: np.ndarray, i: int, gains: GainSet,
                           params: PotentialParams) -> float:
    """K_i(t) = rho lam2_i / 2 + informed_i / 4 + sigma sum_j Lambda1(d_ij).

    By construction the certified surplus K_hat_i(t) = rho lam2_i / 2
    exactly, for every state: the schedule absorbs the mismatch bound.
    """
    lam = lambda_1(dists_i, gains.lam2[i], gains.c[i], gains.eta[i],
                   gains.gamma[i], gains.zeta[i], params)
    return float(0.5 * gains.rho * gains.lam2[i] + 0.25 * gains.informed_flag(i)
                 + gains.sigma * np.sum(lam))


def control_delay_free(x_i: np.ndarray, v_i: np.ndarray,
                       neighbor_positions: np.ndarray, i: int, gains: GainSet,
                       params: PotentialParams) -> tuple[np.ndarray, float, np.ndarray]:
    """Delay-free control of robot i from its own state and current neighbor
    positions. Returns (u_i, K_i(t), theta_i). Raises ConnectivityLossError
    if any link distance reaches the radius (the potential is undefined)."""
    x_i = np.asarray(x_i, dtype=float)
    nbr = np.asarray(neighbor_positions, dtype=float)
    diffs = x_i[None, :] - nbr
    dists = np.linalg.norm(diffs, axis=1)
    if np.any(dists >= params.r):
        raise ConnectivityLossError(
            f"robot {i + 1}: link distance {float(np.max(dists)):.6g} >= r={params.r}")
    theta_i = (coupling_weight(dists, params)[:, None] * diffs).sum(axis=0)
    k_i = update_gain_delay_free(dists, i, gains, params)
    u = -(gains.sigma * k_i + gains.B) * theta_i - (k_i + gains.D) * v_i
    return u, k_i, theta_i


# ---------------------------------------------------------------------------
# delayed pipeline


def rho_bar_per_robot(net: TreeNetwork, r: float, epsilon: float, kappa: float,
                      Q: float, tbar: np.ndarray) -> np.ndarray:
    """Preliminary per-robot decay rates

        rho_bar_i = 4 lambda_l kappa^2 eps^2 (r^2 - r_bar^2 + Q)
                    / (r_bar^2 (r^2 + Q) sum_j tbar[i, j]) ,

    the fastest decay for which robot i's outgoing-delay energy drain can be
    absorbed. The design uses max_i as the uniform cap rate; the realized
    rate rho never exceeds min_i."""
    r_bar = r - kappa * epsilon
    den_bar = r * r - r_bar * r_bar + Q
    out = np.empty(net.n_vertices)
    for i in range(net.n_vertices):
        ssum = sum(tbar[i, j] for j in net.neighbors[i])
        if ssum <= 0.0:
            raise ValueError(
                f"robot {i + 1} has no positive outgoing delay bound; delayed-mode "
                "selection needs every link delayed")
        out[i] = (4.0 * net.lambda_l * kappa * kappa * epsilon * epsilon * den_bar
                  / (r_bar * r_bar * (r * r + Q) * ssum))
    return out


def select_gains_delayed(net: TreeNetwork, r: float, epsilon: float,
                         lam1, lam2, c, f_bar: float, positions0: np.ndarray,
                         tbar: np.ndarray,
                         given: dict | None = None) -> SelectionResult:
    """Existence-proof pipeline for the delayed controller.

    Order: (sigma_bar, B heuristics) -> (kappa, Q) for the first two margin
    conditions -> per-robot preliminary rates rho_bar_i and the a-priori
    energy budget Delta_bar -> (P, sigma) satisfying the joint feasibility
    pair (delay drain small enough per robot AND injection margin positive)
    -> (eta, gamma, zeta) -> clamped bounds, gain caps K_bar_i and the
    delay-penalty weight Upsilon -> damping D (geometric search above the
    rate floor until every residual damping D_tilde_i is nonnegative, then a
    5% inflation), which fixes rho and Omega exactly.
    """
    given = dict(given or {})
    n = net.n_vertices
    lam1 = _as_array(lam1, n, "lam1")
    lam2 = _as_array(lam2, n, "lam2")
    c = _as_array(c, n, "c")
    tbar = np.asarray(tbar, dtype=float)
    if tbar.shape != (n, n):
        raise ValueError("tbar must be (N, N) with [j, i] bounding the j->i delay")
    tbar_max = float(np.max(tbar))
    if tbar_max <= 0.0:
        raise ValueError("delayed mode needs at least one positive delay bound")
    if tbar_max > 1.0:
        raise ValueError("delay bounds above 1 s break the window-energy bound")
    prov: dict = {}
    ineqs: list[Inequality] = []

    def take(name, default):
        if name in given and given[name] is not None:
            prov[name] = "given"
            return given[name]
        prov[name] = "default"
        return default

    sigma_bar = float(take("sigma_bar", 1.0))
    B = float(take("B", 1.0))
    eta = _as_array(take("eta", 0.1), n, "eta")
    gamma = _as_array(take("gamma", 0.1), n, "gamma")
    zeta = _as_array(take("zeta", 0.1), n, "zeta")

    # (kappa, Q): need omega1 > 0 and omega2 > 0 at r_bar = r - kappa eps
    kappa_given = given.get("kappa")
    q_given = given.get("Q")
    kappa_grid = [float(kappa_given)] if kappa_given is not None else [0.5, 0.25, 0.1, 0.05, 0.01]
    q_grid = [float(q_given)] if q_given is not None else [1.0 * 0.5 ** k for k in range(20)]
    prov["kappa"] = "given" if kappa_given is not None else "searched"
    prov["Q"] = "given" if q_given is not None else "searched"
    kappa, Q = kappa_grid[0], q_grid[0]
    found = False
    for kap in kappa_grid:
        for q in q_grid:
            pre = certify_conditions(r, epsilon, r - epsilon, kap, n, q, 1.0, 0.0)
            if pre.omega1 > 0.0 and pre.omega2 > 0.0:
                kappa, Q, found = kap, q, True
                break
        if found:
            break
    pre = certify_conditions(r, epsilon, r - epsilon, kappa, n, Q, 1.0, 0.0)
    ok_w1 = _check(ineqs, "omega1_positive", pre.omega1, 0.0, ">")
    ok_w2 = _check(ineqs, "omega2_positive", pre.omega2, 0.0, ">")
    r_bar = r - kappa * epsilon
    den_bar = r * r - r_bar * r_bar + Q
    den_hat = r * r - (r - epsilon) ** 2 + Q

    rho_bar = rho_bar_per_robot(net, r, epsilon, kappa, Q, tbar)
    rho_bar_design = float(np.max(rho_bar))

    # start state: linked distances inside the start band; the start gradient
    # scales linearly with P, so the budget is a function of the candidate P
    x0p = np.asarray(positions0, dtype=float)
    heads = [a - 1 for a, _ in net.edges]
    tails = [b - 1 for _, b in net.edges]
    diffs0 = x0p[heads] - x0p[tails]
    d0 = np.linalg.norm(diffs0, axis=1)
    ok_start = _check(ineqs, "start_inside_band", float(np.max(d0)), r - epsilon,
                      "<=", "every initial linked distance <= r_hat")
    w_unit = 2.0 * (r * r + Q) / (r * r - d0 * d0 + Q) ** 2
    th_unit = np.zeros_like(x0p)
    np.add.at(th_unit, heads, w_unit[:, None] * diffs0)
    np.add.at(th_unit, tails, -w_unit[:, None] * diffs0)
    th0sq_unit = float(np.sum(lam2 * np.einsum("in,in->i", th_unit, th_unit)))

    def th0sq(p):
        return p * p * th0sq_unit

    def delta_bar(sig, p):
        return sig * sig / B * th0sq(p) \
            + (r * r + Q) * f_bar * f_bar / (4.0 * sig * net.lambda_l * p * B)

    def drain_ok(sig, p):
        # per-robot: sigma P r_bar^2 e^{rho_bar_i tbar_max} sum_j tbar[i, j]
        # < kappa^2 eps^2 (r^2 - r_bar^2 + Q)
        lims = []
        for i in range(n):
            ssum = sum(tbar[i, j] for j in net.neighbors[i])
            lims.append(sig * p * r_bar * r_bar * np.exp(rho_bar[i] * tbar_max) * ssum)
        return float(np.max(lims)), kappa * kappa * epsilon * epsilon * den_bar

    def injection_ok(sig, p):
        return p * pre.omega2, den_bar * den_hat * delta_bar(sig, p)

    sig_given, p_given = given.get("sigma"), given.get("P")
    prov["sigma"] = "given" if sig_given is not None else "searched"
    prov["P"] = "given" if p_given is not None else "searched"
    if sig_given is not None and p_given is not None:
        sigma, P = float(sig_given), float(p_given)
    else:
        sigma, P = sigma_bar * 0.5, 1.0
        found = False
        p_grid = [float(p_given)] if p_given is not None else [1.5 ** k for k in range(36)]
        s_grid = [float(sig_given)] if sig_given is not None else \
            [sigma_bar * 0.5 ** k for k in range(1, 41)]
        for p in p_grid:
            for sig in s_grid:
                l1, r1 = drain_ok(sig, p)
                l2, r2 = injection_ok(sig, p)
                if l1 < r1 and l2 > r2:
                    sigma, P, found = sig, p, True
                    break
            if found:
                break
    ok_sig = _check(ineqs, "sigma_below_sigma_bar", sigma, sigma_bar, "<")
    l1, r1 = drain_ok(sigma, P)
    ok_drain = _check(ineqs, "delay_drain_feasible", l1, r1, "<",
                      "max_i sigma P r_bar^2 e^{rho_bar_i tbar} sum_j tbar_ij")
    l2, r2 = injection_ok(sigma, P)
    ok_inj = _check(ineqs, "injection_feasible", l2, r2, ">",
                    "P omega2 > (r^2-r_bar^2+Q)(r^2-r_hat^2+Q) Delta_bar")
    Delta_bar = delta_bar(sigma, P)
    params = certify_conditions(r, epsilon, r - epsilon, kappa, n, Q, P, Delta_bar)
    ok_w3 = _check(ineqs, "omega3_positive", params.omega3, 0.0, ">",
                   f"a-priori budget Delta_bar={Delta_bar:.6g}")

    # clamped bounds and gain caps at the worst certified state
    lam1_bar = np.array([
        float(lambda_1(r_bar, lam2[i], c[i], eta[i], gamma[i], zeta[i], params))
        for i in range(n)])
    lam2_bar = float(lambda_2(r_bar, r, params))
    a_scale = sigma_bar / (sigma_bar - sigma) if sigma < sigma_bar else np.inf
    K_bar = np.array([
        a_scale * (sigma * len(net.neighbors[i]) * lam1_bar[i]
                   + 0.25 * (1.0 if i == 0 else 0.0)
                   + 0.5 * rho_bar_design * lam2[i] + B / sigma_bar)
        for i in range(n)])
    # worst link sum and worst cap taken separately: dominates the per-robot
    # requirement Upsilon >= (sig_bar/4)(sigma K_bar_i + B) sum_j L2^2 e^{..}
    # for every i, so the quarter-square absorption stays valid
    upsilon = 0.25 * sigma_bar * float(np.max([
        np.sum([lam2_bar ** 2 * np.exp(rho_bar_design * tbar[j, i])
                for j in net.neighbors[i]])
        for i in range(n)])) * float(np.max(sigma * K_bar + B))

    # damping: floor keeps the realized rate below every rho_bar_i, geometric
    # search until all residual dampings clear zero, then 5% inflation
    drain_static = np.array([
        sum(2.0 * sigma * (eta[i] + gamma[i] + zeta[i] + eta[j] + gamma[j])
            for j in net.neighbors[i]) for i in range(n)])

    def rho_omega(dval):
        bsd = B + sigma * dval
        rho = 4.0 * sigma * net.lambda_l * P * B / ((r * r + Q) * bsd)
        om = (P * r_bar * r_bar * np.exp(rho * tbar_max) * bsd
              / (kappa * kappa * epsilon * epsilon * den_bar))
        return rho, om

    def d_tilde(dval):
        rho, om = rho_omega(dval)
        out = np.empty(n)
        for i in range(n):
            out[i] = dval - drain_static[i] - sum(
                upsilon * tbar[i, j] ** 2 + om * tbar[i, j] for j in net.neighbors[i])
        return out

    d_floor = float(np.max([
        P * B * r_bar * r_bar * sum(tbar[i, j] for j in net.neighbors[i])
        / (kappa * kappa * epsilon * epsilon * den_bar) for i in range(n)]))
    if "D" in given and given["D"] is not None:
        D = float(given["D"])
        prov["D"] = "given"
    else:
        prov["D"] = "searched"
        D = max(d_floor * 1.01, float(np.max(drain_static)), 0.25)
        found = False
        for _ in range(80):
            if np.all(d_tilde(D) >= 0.0):
                found = True
                break
            D *= 1.25
        D *= 1.05
    rho, Omega = rho_omega(D)
    rho, Omega = float(rho), float(Omega)
    dt = d_tilde(D)
    ok_dfloor = _check(ineqs, "damping_rate_floor", D, d_floor, ">",
                       "keeps rho <= min_i rho_bar_i")
    ok_dt = _check(ineqs, "damping_residual_min", float(np.min(dt)), 0.0, ">=",
                   "min_i D_tilde_i")
    ok_rho = _check(ineqs, "rho_below_rho_bar", rho, float(np.min(rho_bar)), "<=")
    # surplus floor is structural under the cap schedule; recorded with numbers
    _check(ineqs, "gain_surplus_floor",
           float(np.min(0.5 * rho_bar_design * lam2 - 0.5 * rho * lam2)), 0.0, ">=",
           "K_tilde_i(t) >= rho lam2_i / 2 by construction of the cap schedule")

    bsd = B + sigma * D
    Delta_actual = float(sigma * sigma * th0sq(P) / (2.0 * bsd)
                         + f_bar * f_bar / (rho * bsd))
    ok_budget = _check(ineqs, "budget_dominates", Delta_bar, Delta_actual, ">=",
                       "a-priori budget dominates the realized one")

    feasible = all((ok_w1, ok_w2, ok_start, ok_sig, ok_drain, ok_inj, ok_w3,
                    ok_dfloor, ok_dt, ok_rho, ok_budget))
    violated = None if feasible else next(q.name for q in ineqs if not q.ok)

    constants = {
        "sigma_bar": sigma_bar, "sigma": sigma, "B": B, "D": D, "P": P, "Q": Q,
        "kappa": kappa, "f_bar": f_bar, "rho": rho, "Omega": Omega,
        "Upsilon": upsilon, "rho_bar": rho_bar.tolist(),
        "rho_bar_design": rho_bar_design, "K_bar": K_bar.tolist(),
        "lam1_bar": lam1_bar.tolist(), "lam2_bar": lam2_bar,
        "Delta_bar": Delta_bar, "Delta_actual": Delta_actual,
        "lambda_l": net.lambda_l, "lambda_l_max": net.lambda_l_max,
        "d_floor": d_floor, "D_tilde": dt.tolist(),
        "omega1": params.omega1, "omega2": params.omega2, "omega3": params.omega3,
        "psi_max": params.psi_max, "tbar_max": tbar_max,
    }
    gains = None
    if feasible:
        gains = GainSet(mode="delayed", sigma=sigma, rho=rho, B=B, D=D,
                        f_bar=f_bar, eta=eta, gamma=gamma, zeta=zeta,
                        lam1=lam1, lam2=lam2, c=c, Delta=Delta_bar,
                        sigma_bar=sigma_bar, rho_bar=rho_bar,
                        rho_bar_design=rho_bar_design, tbar=tbar,
                        tbar_max=tbar_max, Omega=Omega, Upsilon=upsilon,
                        K_bar=K_bar, lam1_bar=lam1_bar, lam2_bar=lam2_bar)
    return SelectionResult(feasible=feasible, gains=gains, params=params,
                           inequalities=ineqs, constants=constants,
                           provenance=prov, violated=violated)


def update_gain_delayed(delayed_dists_i: np.ndarray, i: int, gains: GainSet,
                        params: PotentialParams) -> float:
    """Delayed-mode gain schedule

        K_i(t) = sigma_bar/(sigma_bar - sigma) (sigma sum_j Lambda1(chi_ij)
                 + informed_i/4 + rho_bar lam2_i/2 + B/sigma_bar),

    with chi_ij = min(r_bar, ||x^d_ij|| + kappa epsilon): in the certified
    set the true distance can exceed the delayed one by at most the mismatch
    margin, so Lambda1(chi) dominates the true mismatch bound; the clamp at
    r_bar caps the schedule at K_bar_i.
    """
    chi = np.minimum(params.r_bar,
                     np.asarray(delayed_dists_i, dtype=float) + params.kappa * params.epsilon)
    lam = lambda_1(chi, gains.lam2[i], gains.c[i], gains.eta[i], gains.gamma[i],
                   gains.zeta[i], params)
    a_scale = gains.sigma_bar / (gains.sigma_bar - gains.sigma)
    return float(a_scale * (gains.sigma * np.sum(lam) + 0.25 * gains.informed_flag(i)
                            + 0.5 * gains.rho_bar_design * gains.lam2[i]
                            + gains.B / gains.sigma_bar))


def control_delayed(x_i: np.ndarray, v_i: np.ndarray,
                    delayed_neighbor_positions: np.ndarray, i: int,
                    gains: GainSet, params: PotentialParams) -> tuple[np.ndarray, float, np.ndarray]:
    """Delayed control of robot i from its own state and the *delayed*
    neighbor positions it actually received. Returns (u_i, K_i(t),
    theta_hat_i)."""
    x_i = np.asarray(x_i, dtype=float)
    nbr = np.asarray(delayed_neighbor_positions, dtype=float)
    diffs = x_i[None, :] - nbr
    dists = np.linalg.norm(diffs, axis=1)
    if np.any(dists >= params.r):
        raise ConnectivityLossError(
            f"robot {i + 1}: delayed link distance {float(np.max(dists)):.6g} >= r={params.r}")
    theta_hat = (coupling_weight(dists, params)[:, None] * diffs).sum(axis=0)
    k_i = update_gain_delayed(dists, i, gains, params)
    u = -(gains.sigma * k_i + gains.B) * theta_hat - (k_i + gains.D) * v_i
    return u, k_i, theta_hat


# ---------------------------------------------------------------------------
# diagnostic surpluses (used by the runtime monitor)


def k_hat(k_i: float, dists_i: np.ndarray, i: int, gains: GainSet,
          params: PotentialParams) -> float:
    """Certified surplus of K_i(t) over the true mismatch bound."""
    lam = lambda_1(dists_i, gains.lam2[i], gains.c[i], gains.eta[i],
                   gains.gamma[i], gains.zeta[i], params)
    return float(k_i - gains.sigma * np.sum(lam) - 0.25 * gains.informed_flag(i))


def k_tilde(k_i: float, dists_i: np.ndarray, lam2_vals: np.ndarray,
            exps: np.ndarray, i: int, gains: GainSet,
            params: PotentialParams) -> float:
    """Delay-penalty surplus: k_hat minus the second-kind mismatch charge
    (sigma K_i + B)^2 sum_j Lambda2_ij(t)^2 e^{rho tbar_ji} / (4 Upsilon)."""
    base = k_hat(k_i, dists_i, i, gains, params)
    charge = (gains.sigma * k_i + gains.B) ** 2 * float(
        np.sum(lam2_vals * lam2_vals * exps)) / (4.0 * gains.Upsilon)
    return base - charge


def d_hat_all(net: TreeNetwork, gains: GainSet) -> np.ndarray:
    n = net.n_vertices
    return np.array([
        gains.D - sum(2.0 * gains.sigma * (gains.eta[i] + gains.gamma[i] + gains.zeta[i]
                                           + gains.eta[j] + gains.gamma[j])
                      for j in net.neighbors[i]) for i in range(n)])


def d_tilde_all(net: TreeNetwork, gains: GainSet) -> np.ndarray:
    dh = d_hat_all(net, gains)
    out = dh.copy()
    for i in range(net.n_vertices):
        out[i] -= sum(gains.Upsilon * gains.tbar[i, j] ** 2 + gains.Omega * gains.tbar[i, j]
                      for j in net.neighbors[i])
    return out


# ---------------------------------------------------------------------------
# virtual-point baseline (uncertified reference controller)


@dataclass
class VirtualPointGains:
    """Tracking gains of the baseline: u_i = K (p_i - x_i) - d v_i."""

    K: float = 50.0
    d: float = 3.0


class VirtualPointLayer:
    """Kinematic virtual points carrying the connectivity control, with the
    robots PD-tracking them. The operator force acts on virtual point 1:

        p_dot_i = -sum_{j: link alive} w(||p_ij||)(p_i - p_j) + informed_i f,
        f = sat(k0 (x0 - p_1)).

    Information exchange is gated by the ROBOT link distances: once
    ||x_ij|| >= r the robots stop hearing each other and the corresponding
    gradient term drops out. Nothing here is certified; this controller is
    the reference that demonstrates how inertia + tracking error can break
    links that the kinematic layer alone would keep.
    """

    def __init__(self, positions: np.ndarray, params: PotentialParams,
                 k0: float, f_max: float):
        self.p = np.asarray(positions, dtype=float).copy()
        self.params = params
        self.k0 = float(k0)
        self.f_max = float(f_max)

    def force(self, x0: np.ndarray) -> np.ndarray:
        raw = self.k0 * (np.asarray(x0, dtype=float) - self.p[0])
        nrm = float(np.linalg.norm(raw))
        if nrm <= self.f_max or nrm == 0.0:
            return raw
        return raw * (self.f_max / nrm)

    def step(self, x0: np.ndarray, robot_positions: np.ndarray,
             net: TreeNetwork, h: float) -> np.ndarray:
        """Advance the layer one tick and return the operator force used."""
        f = self.force(x0)
        pdot = np.zeros_like(self.p)
        pdot[0] = f
        for (a, b) in net.edges:
            i, j = a - 1, b - 1
            if np.linalg.norm(robot_positions[i] - robot_positions[j]) >= self.params.r:
                continue             # robots out of range: no exchange
            diff = self.p[i] - self.p[j]
            d = float(np.linalg.norm(diff))
            # the kinematic layer is a heuristic: clamp the weight near r so a
            # transient overshoot cannot produce an undefined barrier value
            w = float(coupling_weight(min(d, 0.99 * self.params.r), self.params))
            pdot[i] -= w * diff
            pdot[j] += w * diff
        self.p = self.p + h * pdot
        return f

    def control(self, i: int, x_i: np.ndarray, v_i: np.ndarray,
                gains: VirtualPointGains) -> np.ndarray:
        return gains.K * (self.p[i] - np.asarray(x_i, dtype=float)) - gains.d * np.asarray(v_i, dtype=float)
