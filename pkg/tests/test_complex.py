import numpy as np
import pytest

from conftest import random_complex
from oracles import bfs_pattern, cliques, dense_boundary, random_graph
from simplexnet.complex import Graph, boundary_operator, build_complex, graph_from_dict, hop_neighborhood
from simplexnet.sparse import abs_entries, spgemm


def test_graph_normalizes_edges():
    g = Graph(3, ((1, 0), (0, 1), (2, 1)))
    assert g.edges == ((0, 1), (1, 2))


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 3),)])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        Graph(3, edges)


def test_triangle_counts(triangle):
    assert triangle.counts == [3, 3, 1]


def test_path_has_no_triangles(path3):
    assert path3.counts == [3, 2, 0]
    assert path3.max_dim == 2
    assert boundary_operator(path3, 2).shape == (2, 0)


def test_complete_graph_matches_enumeration():
    n = 4
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    c = build_complex(Graph(n, tuple(edges)), 2)
    expected = cliques(n, edges, 2)
    assert [len(level) for level in expected] == [4, 6, 4]
    assert [list(level) for level in c.simplices] == expected


def test_clamps_dimension_to_largest_nonempty():
    c = build_complex(Graph(3, ((0, 1), (1, 2))), 5)
    assert c.max_dim == 1


def test_empty_graph():
    c = build_complex(Graph(4, ()), 2)
    assert c.counts == [4, 0, 0]


def test_edge_boundary_signs():
    c = build_complex(Graph(2, ((0, 1),)), 1)
    np.testing.assert_array_equal(boundary_operator(c, 1).to_dense(), [[-1.0], [1.0]])


def test_triangle_boundary_signs(triangle):
    # edge order (0,1), (0,2), (1,2)
    np.testing.assert_array_equal(boundary_operator(triangle, 2).to_dense().ravel(), [1.0, -1.0, 1.0])
    assert spgemm(triangle.boundary[1], triangle.boundary[2]).nnz == 0


def test_boundary_out_of_range(triangle):
    for k in (0, 3):
        with pytest.raises(ValueError):
            boundary_operator(triangle, k)


def test_random_complexes_against_oracles(rng):
    for _ in range(40):
        n, edges = random_graph(rng, int(rng.integers(1, 10)), 0.5)
        c = build_complex(Graph(n, tuple(edges)), 3)
        expected = cliques(n, edges, c.max_dim)
        assert [list(level) for level in c.simplices] == expected
        for k in range(1, c.max_dim + 1):
            b = c.boundary[k].to_dense()
            np.testing.assert_array_equal(b, dense_boundary(expected[k - 1], expected[k]))
            assert np.all((np.abs(b) > 0).sum(axis=0) == k + 1)
            if k < c.max_dim:
                assert spgemm(c.boundary[k], c.boundary[k + 1]).nnz == 0


def test_edge_boundary_is_incidence(rng):
    c = random_complex(rng, 10, 0.5)
    inc = np.zeros((c.num(0), c.num(1)))
    for j, (u, v) in enumerate(c.simplices[1]):
        inc[u, j] = inc[v, j] = 1.0
    np.testing.assert_array_equal(abs_entries(c.boundary[1]).to_dense(), inc)


def test_deterministic_build():
    a = build_complex(Graph(5, ((3, 4), (0, 1), (1, 2), (0, 2), (2, 3))), 2)
    b = build_complex(Graph(5, ((2, 0), (0, 1), (4, 3), (1, 2), (3, 2), (0, 1))), 2)
    assert a == b


def test_hop_neighborhood_basics(triangle):
    assert hop_neighborhood(triangle, 0, 0, 0) == {0}
    assert hop_neighborhood(triangle, 0, 0, 1) == {0, 1, 2}


def test_hop_neighborhood_matches_bfs(rng):
    from simplexnet.spectral import hodge_laplacian

    for _ in range(30):
        c = random_complex(rng, 10, 0.4)
        for k in range(c.max_dim + 1):
            if c.num(k) == 0:
                continue
            pattern = hodge_laplacian(c, k).matrix.to_dense() != 0
            seed = int(rng.integers(c.num(k)))
            for radius in range(4):
                assert hop_neighborhood(c, k, seed, radius) == bfs_pattern(pattern, seed, radius)


def test_graph_document_signals():
    g, sig = graph_from_dict({"num_nodes": 2, "edges": [[0, 1]], "node_signals": [1.0, 2.0]})
    assert sig["node_signals"].shape == (2, 1)
    with pytest.raises(ValueError):
        graph_from_dict({"num_nodes": 2, "edges": [[0, 1]], "edge_signals": [[1.0], [2.0]]})
