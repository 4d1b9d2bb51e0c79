"""Per-link transmission delays, position history, and delayed lookups.

Every directed link (j -> i) carries its own bounded time-varying delay
0 <= T_ji(t) <= Tbar_ji: robot i controls against x_j(t - T_ji(t)), never
against x_j(t). Profiles are sampled once per simulation tick and are
deterministic functions of the scenario seed, so identical scenarios give
bit-identical delay sequences.

Histories are uniform-grid ring buffers of (position, velocity) samples with
linear interpolation between ticks. Buffers are pre-filled with the initial
state over [-span, 0] (the swarm starts at rest for longer than any delay
bound), so a lookup at t - T is valid from the very first tick.

Two window statistics feed the runtime monitors, both exact for the linear
interpolant because ||a - x(tau)|| is convex on each segment (the max over a
segment sits at one of its endpoints):

* mismatch_sup: sup over tau in [t - Tbar, t] of ||x(t) - x(tau)|| -- how far
  the freshest state can drift from anything a neighbor might be acting on;
* the link window supremum sup ||x_i(t) - x_j(tau)||, which must stay below
  the communication radius in BOTH directions for the link to exist.
"""
from __future__ import annotations

import numpy as np


class DelayProfile:
    """Delay value per tick for one directed link. ``sample(t)`` must be
    called once per tick in time order (the random-walk profile is stateful)."""

    bound: float

    def sample(self, t: float) -> float:
        raise NotImplementedError


class ZeroDelay(DelayProfile):
    def __init__(self):
        self.bound = 0.0

    def sample(self, t: float) -> float:
        return 0.0


class ConstantDelay(DelayProfile):
    def __init__(self, bound: float):
        if bound < 0.0:
            raise ValueError("delay bound must be nonnegative")
        self.bound = float(bound)

    def sample(self, t: float) -> float:
        return self.bound


class SinusoidalDelay(DelayProfile):
    """T(t) = bound/2 * (1 + sin(2 pi freq t + phase)), phase drawn from the
    link's seed; stays in [0, bound] for every t."""

    def __init__(self, bound: float, freq_hz: float = 1.0,
                 rng: np.random.Generator | None = None, phase: float | None = None):
        if bound < 0.0:
            raise ValueError("delay bound must be nonnegative")
        self.bound = float(bound)
        self.freq_hz = float(freq_hz)
        if phase is None:
            rng = rng or np.random.default_rng(0)
            phase = float(rng.uniform(0.0, 2.0 * np.pi))
        self.phase = float(phase)

    def sample(self, t: float) -> float:
        return 0.5 * self.bound * (1.0 + np.sin(2.0 * np.pi * self.freq_hz * t + self.phase))


class RandomWalkDelay(DelayProfile):
    """Uniform random walk clipped to [0, bound]; piecewise-constant per tick
    (deliberately discontinuous -- the certificates only need 0 <= T <= bound)."""

    def __init__(self, bound: float, rng: np.random.Generator,
                 step_frac: float = 0.1):
        if bound < 0.0:
            raise ValueError("delay bound must be nonnegative")
        self.bound = float(bound)
        self._rng = rng
        self._step = step_frac * float(bound)
        self._value = 0.5 * float(bound)

    def sample(self, t: float) -> float:
        self._value = float(np.clip(
            self._value + self._rng.uniform(-1.0, 1.0) * self._step, 0.0, self.bound))
        return self._value


def make_profile(spec: dict, scenario_seed: int, link_index: int) -> DelayProfile:
    """Build one link's profile from its scenario entry.

    The per-link RNG stream is seeded by (scenario seed, link index, optional
    per-link seed), so reordering other links never perturbs this one.
    """
    kind = spec.get("kind", "zero")
    seq = np.random.SeedSequence(
        entropy=int(scenario_seed),
        spawn_key=(link_index, int(spec.get("seed", 0))))
    rng = np.random.default_rng(seq)
    if kind == "zero":
        return ZeroDelay()
    if kind == "constant":
        return ConstantDelay(spec["bound_s"])
    if kind == "sinusoidal":
        return SinusoidalDelay(spec["bound_s"], freq_hz=spec.get("freq_hz", 1.0), rng=rng)
    if kind == "random_walk":
        return RandomWalkDelay(spec["bound_s"], rng=rng,
                               step_frac=spec.get("step_frac", 0.1))
    raise ValueError(f"unknown delay profile kind {kind!r}")


class HistoryBuffer:
    """Uniform-grid ring buffer of one robot's (position, velocity) samples.

    Spans at least ``span`` seconds plus two ticks of slack; pre-filled with
    (x0, 0) so that time -span..0 is queryable immediately.
    """

    def __init__(self, x0: np.ndarray, h: float, span: float):
        if h <= 0.0:
            raise ValueError("tick size must be positive")
        x0 = np.asarray(x0, dtype=float)
        self.h = float(h)
        self.capacity = int(np.ceil(max(span, 0.0) / h)) + 3
        self.x = np.tile(x0, (self.capacity, 1))
        self.v = np.zeros((self.capacity, x0.shape[0]))
        self.head = 0              # ring slot of the newest sample
        self.t_newest = 0.0

    def push(self, t: float, x: np.ndarray, v: np.ndarray) -> None:
        if abs(t - (self.t_newest + self.h)) > 1e-9 * max(1.0, abs(t)):
            raise ValueError("samples must arrive one tick apart")
        self.head = (self.head + 1) % self.capacity
        self.x[self.head] = x
        self.v[self.head] = v
        self.t_newest = t

    def _slot(self, steps_back: int) -> int:
        return (self.head - steps_back) % self.capacity

    def lookup(self, tau: float) -> np.ndarray:
        """Position at time tau by linear interpolation between ticks."""
        back = (self.t_newest - tau) / self.h
        if back < -1e-9:
            raise ValueError(f"lookup at {tau:.6g} is ahead of newest sample")
        if back > self.capacity - 2:
            raise ValueError(f"lookup at {tau:.6g} fell off the history window")
        back = max(back, 0.0)
        k = int(np.floor(back))
        frac = back - k
        if frac <= 1e-12:
            return self.x[self._slot(k)].copy()
        return (1.0 - frac) * self.x[self._slot(k)] + frac * self.x[self._slot(k + 1)]

    def window(self, span: float) -> np.ndarray:
        """Samples covering [t_newest - span, t_newest]: the interpolated
        left endpoint followed by every grid sample inside the window,
        oldest first, shape (m, n)."""
        back = span / self.h
        k = int(np.floor(back + 1e-12))
        pts = [self.lookup(self.t_newest - span)]
        for m in range(k, -1, -1):
            pts.append(self.x[self._slot(m)])
        return np.asarray(pts)

    def velocity_window(self, span: float) -> tuple[np.ndarray, np.ndarray]:
        """(times_back, speeds^2) on the grid covering the last ``span``
        seconds (grid part only; used by live telemetry quadrature)."""
        k = int(np.floor(span / self.h + 1e-12))
        k = min(k, self.capacity - 2)
        idx = [self._slot(m) for m in range(k, -1, -1)]
        tb = np.arange(k, -1, -1) * self.h
        w = np.einsum("mn,mn->m", self.v[idx], self.v[idx])
        return tb, w


def mismatch_sup(buffer: HistoryBuffer, tbar: float) -> float:
    """sup over tau in [t - tbar, t] of ||x(t) - x(tau)|| (exact for the
    interpolant: segment maxima sit at segment endpoints)."""
    pts = buffer.window(tbar)
    return float(np.max(np.linalg.norm(pts - pts[-1], axis=1)))


def delayed_link_distance(x_i: np.ndarray, buffer_j: HistoryBuffer,
                          delay_now: float, tbar_ji: float) -> tuple[float, float]:
    """(||x_i - x_j(t - delay_now)||, sup over the whole window).

    The first value is what robot i's controller acts on this tick; the
    second is the link-existence statistic: the link (j -> i) is alive only
    while the window supremum stays below the communication radius.
    """
    x_i = np.asarray(x_i, dtype=float)
    x_jd = buffer_j.lookup(buffer_j.t_newest - delay_now)
    pts = buffer_j.window(tbar_ji)
    wsup = float(np.max(np.linalg.norm(pts - x_i, axis=1)))
    return float(np.linalg.norm(x_i - x_jd)), wsup
