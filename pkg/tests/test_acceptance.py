"""Exit criteria, one test per criterion, at the tolerances they state.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import subprocess
import sys
import time

import numpy as np

from conftest import DATA
from oracles import bfs_pattern, contract, jacobi_eigvalsh, laguerre_matrix, random_graph
from simplexnet import model as mdl
from simplexnet.cli import run
from simplexnet.complex import Graph, build_complex
from simplexnet.pooling import AttentionParams, NodeClustering, attention_logits, attention_weights, cluster_nodes, downsample, softmax_diagonal
from simplexnet.projection import MSIWeights, project_chain
from simplexnet.sparse import SparseMatrix, spgemm, transpose
from simplexnet.spectral import FilterBank, eigensystem, filter_exact, filter_poly, hodge_laplacian, laguerre_response


def corpus(seed, count, n_max, p=0.4, K=2):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n, edges = random_graph(rng, int(rng.integers(1, n_max + 1)), p)
        out.append(build_complex(Graph(n, tuple(edges)), K))
    return out


def filled_triangle():
    return build_complex(Graph(3, ((0, 1), (1, 2), (0, 2))), 2)


def test_ac01_chain_complex_identity():
    start = time.perf_counter()
    for c in corpus(101, 200, 15):
        if c.max_dim >= 2:
            assert spgemm(c.boundary[1], c.boundary[2]).nnz == 0
            assert not (c.boundary[1].to_dense() @ c.boundary[2].to_dense()).any()
    assert time.perf_counter() - start < 5.0


def test_ac02_node_laplacian_is_graph_laplacian():
    for c in corpus(101, 200, 15):
        a = c.graph().adjacency()
        expected = np.diag(a.sum(axis=1)) - a
        np.testing.assert_array_equal(hodge_laplacian(c, 0).matrix.to_dense(), expected)


def test_ac03_known_spectra():
    tri = filled_triangle()
    l0 = hodge_laplacian(tri, 0)
    oracle = jacobi_eigvalsh(l0.matrix.to_dense())
    np.testing.assert_allclose(oracle, [0.0, 3.0, 3.0], atol=1e-8)
    np.testing.assert_allclose(eigensystem(l0).eigenvalues, oracle, atol=1e-8)
    l1 = hodge_laplacian(tri, 1)
    np.testing.assert_allclose(l1.matrix.to_dense(), 3 * np.eye(3), atol=1e-8)
    np.testing.assert_allclose(eigensystem(l1).eigenvalues, jacobi_eigvalsh(l1.matrix.to_dense()), atol=1e-8)
    np.testing.assert_allclose(eigensystem(l1).eigenvalues, [3.0, 3.0, 3.0], atol=1e-8)


def test_ac04_polynomial_matches_spectral():
    rng = np.random.default_rng(404)
    cases = 0
    while cases < 50:
        n, edges = random_graph(rng, int(rng.integers(3, 16)), 0.4)
        c = build_complex(Graph(n, tuple(edges)), 2)
        k = int(rng.integers(0, c.max_dim + 1))
        lap = hodge_laplacian(c, k)
        if not 1 <= lap.n <= 50:
            continue
        P = int(rng.integers(1, 7))
        d_in, d_out = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        fb = FilterBank(k, rng.normal(size=(P, d_in, d_out)))
        x = rng.normal(size=(lap.n, d_in))
        es = eigensystem(lap)
        exact = np.zeros((lap.n, d_out))
        for i in range(d_in):
            for o in range(d_out):
                exact[:, o] += filter_exact(es, laguerre_response(fb.theta[:, i, o]), x[:, i])
        assert np.abs(filter_poly(lap, fb, x) - exact).max() <= 1e-8
        cases += 1


def test_ac05_locality():
    rng = np.random.default_rng(505)
    for c in corpus(505, 100, 15):
        dims = [k for k in range(c.max_dim + 1) if c.num(k) > 0]
        k = dims[int(rng.integers(len(dims)))]
        lap = hodge_laplacian(c, k)
        pattern = lap.matrix.to_dense() != 0
        seed = int(rng.integers(lap.n))
        x = np.zeros((lap.n, 1))
        x[seed] = 1.0
        for P in (1, 2, 3, 4):
            out = filter_poly(lap, FilterBank(k, rng.normal(size=(P, 1, 1))), x)
            outside = sorted(set(range(lap.n)) - bfs_pattern(pattern, seed, P - 1))
            assert np.all(out[outside] == 0.0)


def test_ac06_projection_duality():
    for c in corpus(606, 100, 15):
        if c.max_dim < 2:
            continue
        for a in range(3):
            for b in range(3):
                if a != b:
                    assert project_chain(c, a, b).matrix == transpose(project_chain(c, b, a).matrix)


def test_ac07_attention_sanity():
    rng = np.random.default_rng(707)
    for c in corpus(707, 30, 12, p=0.5):
        if c.num(1) == 0:
            continue
        d, dk = 4, 3
        ops = (project_chain(c, 1, 0), project_chain(c, 0, 1))
        x0, x1 = rng.normal(size=(c.num(0), d)), rng.normal(size=(c.num(1), d))
        zero = AttentionParams({0: np.zeros((d, dk)), 1: np.zeros((d, dk))},
                               {0: np.zeros((d, dk)), 1: np.zeros((d, dk))}, {0: 0.5, 1: 0.5})
        a0, a1 = attention_weights(x0, x1, ops, zero)
        assert np.abs(a0 - 1 / c.num(0)).max() <= 1e-12
        assert np.abs(a1 - 1 / c.num(1)).max() <= 1e-12
        p = AttentionParams({0: rng.normal(size=(d, dk)), 1: rng.normal(size=(d, dk))},
                            {0: rng.normal(size=(d, dk)), 1: rng.normal(size=(d, dk))},
                            {0: float(rng.random()), 1: float(rng.random())})
        for z in attention_logits(x0, x1, ops, p):
            shifted = z + rng.normal(size=(z.shape[0], 1)) * 5
            assert np.abs(softmax_diagonal(shifted) - softmax_diagonal(z)).max() <= 1e-12
        for a in attention_weights(x0, x1, ops, p):
            assert np.all(a > 0) and np.all(a <= 1)


def test_ac08_downsampling_matches_contraction():
    start = time.perf_counter()
    for c in corpus(808, 200, 12):
        nc = cluster_nodes(c)
        res = downsample(c, nc)
        coarse, assign = contract(c.simplices, list(nc.cluster_of))
        assert [list(level) for level in res.coarse_complex.simplices] == coarse
        for s, expected in zip(res.assignment, assign):
            np.testing.assert_array_equal(s.to_dense(), expected)
        b = res.coarse_complex.boundary
        for k in range(1, res.coarse_complex.max_dim):
            assert spgemm(b[k], b[k + 1]).nnz == 0
    assert time.perf_counter() - start < 30.0


def test_ac09_identity_coarsening():
    for c in [filled_triangle()] + corpus(909, 50, 12):
        res = downsample(c, NodeClustering.identity(c.num(0)))
        assert res.coarse_complex == c
        for k, s in enumerate(res.assignment):
            assert s == SparseMatrix.identity(c.num(k))


def _nested_params(rng, base):
    """Parameter sets for M1..M4 where each added stage is a pass-through."""
    m1 = mdl.ablation_config("M1", **base)
    p1 = mdl.init_params(m1, int(rng.integers(1 << 30)))
    m2 = mdl.ablation_config("M2", **base)
    p2 = mdl.init_params(m2, 0)
    for b, bp in enumerate(p2.blocks):
        bp.filters[0] = p1.blocks[b].filters[0]
        bp.filters[1] = [FilterBank(1, np.zeros_like(fb.theta)) for fb in bp.filters[1]]
    edge_width = base["filters_per_layer"][-1]
    w0 = p1.head_weights[0]
    p2.head_weights = [np.vstack([w0, np.zeros((edge_width, w0.shape[1]))])] + list(p1.head_weights[1:])
    p2.head_biases = list(p1.head_biases)
    m3 = mdl.ablation_config("M3", **base)
    p3 = mdl.ModelParams(
        [mdl.BlockParams(bp.filters, MSIWeights.passthrough(d)) for bp, d in zip(p2.blocks, base["filters_per_layer"])],
        p2.head_weights, p2.head_biases,
    )
    m4 = mdl.ablation_config("M4", **base, clustering="identity")
    p4_init = mdl.init_params(m4, 1)
    p4 = mdl.ModelParams(
        [mdl.BlockParams(bp.filters, bp.msi, q.attention) for bp, q in zip(p3.blocks, p4_init.blocks)],
        p3.head_weights, p3.head_biases,
    )
    m4_off = mdl.ablation_config("M4", **base, pooling_enabled=[False] * base["num_blocks"])
    return [(m1, p1), (m2, p2), (m3, p3), (m4, p4), (m4_off, p4)]


def test_ac10_ablation_passthrough():
    rng = np.random.default_rng(1010)
    base = dict(num_blocks=2, conv_layers_per_block=[2, 1], filters_per_layer=[4, 5], poly_order=3,
                qk_dim=3, fc_layers=[6, 2], pe_dims=(2, 3), node_in=2, edge_in=1)
    n, edges = random_graph(rng, 12, 0.4)
    for c in (filled_triangle(), build_complex(Graph(n, tuple(edges)), 2)):
        x0 = rng.normal(size=(c.num(0), 2))
        x1 = rng.normal(size=(c.num(1), 1))
        outs = [mdl.forward(c, x0, x1, p, cfg) for cfg, p in _nested_params(rng, base)]
        m1, m2, m3, m4, m4_off = outs
        assert np.all(np.isfinite(m1))
        assert np.abs(m2 - m1).max() <= 1e-8
        assert np.abs(m3 - m2).max() <= 1e-8
        assert np.abs(m4 - m3).max() <= 1e-8
        assert np.abs(m4_off - m3).max() <= 1e-8


def test_ac11_demo_is_byte_identical(tmp_path):
    src = DATA / "random12.json"
    for name in ("a", "b"):
        assert run(["demo", "--input", str(src), "--output", str(tmp_path / name), "--seed", "42"]) == 0
    subprocess.run([sys.executable, "-m", "simplexnet", "demo", "--input", str(src),
                    "--output", str(tmp_path / "c"), "--seed", "42"], check=True, capture_output=True)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["config.json", "params.json", "prediction.csv"]
    for f in files:
        ref = (tmp_path / "a" / f).read_bytes()
        assert (tmp_path / "b" / f).read_bytes() == ref
        assert (tmp_path / "c" / f).read_bytes() == ref


def test_ac12_filter_superposition():
    rng = np.random.default_rng(1212)
    cases = 0
    while cases < 50:
        n, edges = random_graph(rng, int(rng.integers(3, 13)), 0.4)
        c = build_complex(Graph(n, tuple(edges)), 2)
        k = int(rng.integers(0, c.max_dim + 1))
        lap = hodge_laplacian(c, k)
        if lap.n == 0:
            continue
        P, d_in, d_out = int(rng.integers(1, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
        ta, tb = rng.normal(size=(2, P, d_in, d_out))
        xa, xb = rng.normal(size=(2, lap.n, d_in))
        f = lambda t, x: filter_poly(lap, FilterBank(k, t), x)  # noqa: E731
        assert np.abs(f(ta + tb, xa) - (f(ta, xa) + f(tb, xa))).max() <= 1e-10
        assert np.abs(f(ta, xa + xb) - (f(ta, xa) + f(ta, xb))).max() <= 1e-10
        # derivative with respect to theta[p, i, o] is T_p(L) x_i placed in column o
        p, i, o = int(rng.integers(P)), int(rng.integers(d_in)), int(rng.integers(d_out))
        unit = np.zeros_like(ta)
        unit[p, i, o] = 1.0
        grad = f(unit, xa)
        basis = laguerre_matrix(lap.matrix.to_dense(), P)[p] @ xa[:, i]
        assert np.abs(grad[:, o] - basis).max() <= 1e-10
        assert not np.delete(grad, o, axis=1).any()
        cases += 1

