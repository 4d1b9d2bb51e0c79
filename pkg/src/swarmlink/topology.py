"""Tree communication topology and its spectral constants.

The swarm exchanges state over a fixed undirected tree: N vertices (robots,
1-based labels), N-1 edges, no cycles. All controller certificates depend on
two spectral constants of that tree:

* ``lambda_l``  -- algebraic connectivity, the second-smallest eigenvalue of
  the unweighted Laplacian L = D D^T (equivalently the smallest eigenvalue of
  the edge Laplacian D^T D, because a tree has a trivial cycle space);
* ``lambda_l_max`` -- the largest eigenvalue of the edge Laplacian D^T D.

``D`` is the incidence matrix with one +1 (head, smaller label) and one -1
(tail, larger label) per column, columns in lexicographic edge order. Edge
orientation is a bookkeeping convention only; every certified quantity is
orientation-invariant and a test pins that down.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .potential import PotentialParams, coupling_weight

SPECTRAL_TOL = 1e-9


class TopologyError(ValueError):
    """The declared graph is not a tree on the declared vertex set."""


@dataclass(frozen=True)
class TreeNetwork:
    """Immutable tree topology plus precomputed spectral data.

    Vertices are 1-based in ``edges`` (matching operator-facing labels) and
    0-based everywhere else (``incidence`` rows, ``neighbors``).
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    incidence: np.ndarray = field(repr=False)
    lambda_l: float
    lambda_l_max: float
    neighbors: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def unweighted_laplacian(self) -> np.ndarray:
        return self.incidence @ self.incidence.T

    def edge_laplacian(self) -> np.ndarray:
        return self.incidence.T @ self.incidence

    def edge_index(self, i: int, j: int) -> int:
        """Index of the edge joining 1-based vertices i and j."""
        key = (min(i, j), max(i, j))
        try:
            return self._edge_lookup[key]
        except KeyError:
            raise TopologyError(f"no edge between {i} and {j}") from None

    @property
    def _edge_lookup(self) -> dict[tuple[int, int], int]:
        # frozen dataclass: cache on first use through object.__setattr__
        cached = self.__dict__.get("_edge_lookup_cache")
        if cached is None:
            cached = {e: k for k, e in enumerate(self.edges)}
            object.__setattr__(self, "_edge_lookup_cache", cached)
        return cached

    def directed_links(self) -> tuple[tuple[int, int], ...]:
        """All ordered pairs (j, i), 0-based: transmission from j to i.

        Each undirected edge yields two directed links; order is edge order,
        (head->tail) before (tail->head).
        """
        out = []
        for (a, b) in self.edges:
            out.append((a - 1, b - 1))
            out.append((b - 1, a - 1))
        return tuple(out)


def build_tree(n_vertices: int, edges: list[tuple[int, int]]) -> TreeNetwork:
    """Validate a vertex/edge list as a tree and precompute its spectra.

    Rejects: empty edge lists, labels outside 1..N, self-loops, duplicate
    edges, wrong edge count, and disconnected graphs (cycles are implied by
    edge count + disconnection, but get their own message when detectable).
    """
    if n_vertices < 2:
        raise TopologyError("a swarm needs at least 2 robots")
    if not edges:
        raise TopologyError("edge list is empty")
    norm: list[tuple[int, int]] = []
    for (i, j) in edges:
        if not (1 <= i <= n_vertices and 1 <= j <= n_vertices):
            raise TopologyError(f"edge ({i},{j}) uses labels outside 1..{n_vertices}")
        if i == j:
            raise TopologyError(f"self-loop at vertex {i}")
        norm.append((min(i, j), max(i, j)))
    if len(set(norm)) != len(norm):
        raise TopologyError("duplicate edge")
    if len(norm) != n_vertices - 1:
        raise TopologyError(
            f"a tree on {n_vertices} vertices needs {n_vertices - 1} edges, got {len(norm)}"
        )

    # union-find: with exactly N-1 distinct edges, any cycle implies disconnection
    parent = list(range(n_vertices + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (i, j) in norm:
        ri, rj = find(i), find(j)
        if ri == rj:
            raise TopologyError(f"edge ({i},{j}) closes a cycle")
        parent[ri] = rj
    roots = {find(v) for v in range(1, n_vertices + 1)}
    if len(roots) != 1:
        raise TopologyError("graph is disconnected")

    norm.sort()
    D = np.zeros((n_vertices, n_vertices - 1))
    nbrs: list[list[int]] = [[] for _ in range(n_vertices)]
    for k, (i, j) in enumerate(norm):
        D[i - 1, k] = 1.0
        D[j - 1, k] = -1.0
        nbrs[i - 1].append(j - 1)
        nbrs[j - 1].append(i - 1)

    lap_eigs = np.linalg.eigvalsh(D @ D.T)
    edge_eigs = np.linalg.eigvalsh(D.T @ D)
    lambda_l = float(lap_eigs[1])
    lambda_l_max = float(edge_eigs[-1])
    # trees have trivial cycle space: the edge Laplacian spectrum must equal the
    # nonzero Laplacian spectrum, so the two lambda_l readings must agree
    if abs(float(edge_eigs[0]) - lambda_l) > SPECTRAL_TOL:
        raise TopologyError("spectral cross-check failed; graph is not a tree")

    return TreeNetwork(
        n_vertices=n_vertices,
        edges=tuple(norm),
        incidence=D,
        lambda_l=lambda_l,
        lambda_l_max=lambda_l_max,
        neighbors=tuple(tuple(sorted(n)) for n in nbrs),
    )


@dataclass(frozen=True)
class WeightedGraphView:
    """State-dependent weighted Laplacian snapshot at one swarm configuration.

    Edge weights are the coupling strengths ``a_ij = 2 P (r^2+Q) /
    (r^2 - ||x_ij||^2 + Q)^2`` (the scalar factor of the potential gradient),
    so L(x) = D diag(a) D^T is exactly the stiffness the controllers exert.
    """

    weights: np.ndarray          # (n_edges,)
    laplacian: np.ndarray        # (N, N)
    distances: np.ndarray        # (n_edges,)


def weighted_view(net: TreeNetwork, positions: np.ndarray,
                  params: PotentialParams) -> WeightedGraphView:
    """Weighted Laplacian at ``positions`` ((N, n) array, row v = robot v+1).

    Rejects any linked pair at distance >= r: the weight diverges as the
    distance approaches the communication radius and is undefined past it.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape[0] != net.n_vertices:
        raise ValueError(
            f"positions has {positions.shape[0]} rows for {net.n_vertices} robots"
        )
    diffs = positions[[i - 1 for i, _ in net.edges]] - positions[[j - 1 for _, j in net.edges]]
    dists = np.linalg.norm(diffs, axis=1)
    if np.any(dists >= params.r):
        k = int(np.argmax(dists >= params.r))
        i, j = net.edges[k]
        raise ValueError(
            f"linked pair ({i},{j}) at distance {dists[k]:.6g} >= r={params.r}: "
            "link broken, weighted view undefined"
        )
    w = coupling_weight(dists, params)
    lap = net.incidence @ (w[:, None] * net.incidence.T)
    return WeightedGraphView(weights=w, laplacian=lap, distances=dists)
