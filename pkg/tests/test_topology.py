"""Tree network construction, incidence convention, spectral quantities."""
from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from swarmlink.potential import certify_conditions
from swarmlink.topology import TopologyError, build_tree, weighted_view

from conftest import random_linked_positions, random_tree_edges


def test_star3_spectrum():
    net = build_tree(3, [(1, 2), (1, 3)])
    assert net.n_edges == 2
    assert_allclose(net.lambda_l, 1.0, rtol=1e-12)
    assert_allclose(net.lambda_l_max, 3.0, rtol=1e-12)


def test_path3_spectrum():
    net = build_tree(3, [(1, 2), (2, 3)])
    assert_allclose(net.lambda_l, 1.0, rtol=1e-12)
    assert_allclose(net.lambda_l_max, 3.0, rtol=1e-12)


def test_path4_star4_spectra():
    # path: 2 - 2 cos(pi/4); star: 1 and N
    path = build_tree(4, [(1, 2), (2, 3), (3, 4)])
    assert_allclose(path.lambda_l, 2.0 - np.sqrt(2.0), rtol=1e-10)
    star = build_tree(4, [(1, 2), (1, 3), (1, 4)])
    assert_allclose(star.lambda_l, 1.0, rtol=1e-10)
    assert_allclose(star.lambda_l_max, 4.0, rtol=1e-10)


def test_incidence_convention():
    net = build_tree(3, [(1, 2), (1, 3)])
    D = net.incidence
    assert D.shape == (3, 2)
    for k, (a, b) in enumerate(net.edges):
        assert a < b
        assert D[a - 1, k] == 1.0 and D[b - 1, k] == -1.0
    assert_allclose(D.sum(axis=0), 0.0, atol=0)
    assert_allclose(D @ D.T, net.unweighted_laplacian(), atol=0)
    assert_allclose(D.T @ D, net.edge_laplacian(), atol=0)


def test_spectral_identities_random_trees():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        net = build_tree(n, random_tree_edges(rng, n))
        evals = np.linalg.eigvalsh(net.unweighted_laplacian())
        assert abs(evals[0]) < 1e-9
        assert_allclose(net.lambda_l, evals[1], rtol=1e-9, atol=1e-12)
        assert_allclose(net.lambda_l_max, evals[-1], rtol=1e-9)
        # tree: edge Laplacian spectrum = nonzero vertex Laplacian spectrum
        edge_evals = np.sort(np.linalg.eigvalsh(net.edge_laplacian()))
        assert_allclose(edge_evals, evals[1:], rtol=1e-9, atol=1e-9)
        assert edge_evals[0] > 1e-9


def test_neighbors_and_edge_index():
    net = build_tree(4, [(1, 2), (2, 3), (2, 4)])
    assert net.neighbors[0] == (1,)
    assert set(net.neighbors[1]) == {0, 2, 3}
    assert net.neighbors[2] == (1,)
    for k, (a, b) in enumerate(net.edges):
        assert net.edge_index(a, b) == k
        assert net.edge_index(b, a) == k
    links = net.directed_links()
    assert len(links) == 2 * net.n_edges
    assert set(links) == {(j, i) for (i, j) in links}


def test_rejects_non_trees():
    with pytest.raises(TopologyError):
        build_tree(3, [(1, 2), (2, 3), (1, 3)])   # cycle
    with pytest.raises(TopologyError):
        build_tree(4, [(1, 2), (3, 4)])           # wrong edge count
    with pytest.raises(TopologyError):
        build_tree(4, [(1, 2), (1, 2), (3, 4)])   # duplicate edge
    with pytest.raises(TopologyError):
        build_tree(3, [(1, 1), (2, 3)])           # self loop
    with pytest.raises(TopologyError):
        build_tree(3, [(1, 2), (2, 4)])           # label out of range
    with pytest.raises(TopologyError):
        build_tree(1, [])                         # too small


def test_weighted_view_matches_manual_assembly():
    rng = np.random.default_rng(5)
    params = certify_conditions(0.1, 0.08, 0.02, 0.0, 5, 1.0, 20.0, 0.0)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        net = build_tree(n, random_tree_edges(rng, n))
        x = random_linked_positions(rng, net.edges, n, params.r)
        view = weighted_view(net, x, params)
        W = np.diag(view.weights)
        assert_allclose(view.laplacian, net.incidence @ W @ net.incidence.T,
                        rtol=1e-12, atol=1e-15)
        assert np.all(view.weights > 0.0)
        # weighted Laplacian is PSD with a single zero eigenvalue on a tree
        evals = np.linalg.eigvalsh(view.laplacian)
        assert abs(evals[0]) < 1e-9
        assert evals[1] > 0.0


def test_weighted_view_rejects_broken_link():
    net = build_tree(2, [(1, 2)])
    params = certify_conditions(0.1, 0.08, 0.02, 0.0, 2, 1.0, 20.0, 0.0)
    x = np.array([[0.0, 0.0], [0.11, 0.0]])
    with pytest.raises(ValueError):
        weighted_view(net, x, params)
