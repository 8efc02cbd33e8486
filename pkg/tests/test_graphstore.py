from __future__ import annotations

import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowertail.graphstore import (
    Graph,
    SizeError,
    brute_force_triangles,
    codegree,
    cut_norm_deviation,
    max_cut_fraction,
    read_edge_list,
    toggle_edge,
    write_edge_list,
)


def _maxcut_oracle(g: Graph) -> float:
    best = 0
    edges = g.edges()
    for bits in itertools.product((0, 1), repeat=g.n):
        best = max(best, sum(bits[u] != bits[v] for u, v in edges))
    return best / len(edges)


def _cutnorm_oracle(g: Graph, q: float) -> float:
    M = g.adjacency(np.float64) - q
    np.fill_diagonal(M, 0.0)
    vecs = [np.array(b, dtype=float) for b in itertools.product((0, 1), repeat=g.n)]
    return max(x @ M @ y for x in vecs for y in vecs)


class TestToggle:
    def test_empty(self):
        g = Graph(4)
        assert toggle_edge(g, 1, 2) == (1, 0)

    def test_path_closes_triangle(self):
        g = Graph(4, [(1, 2), (2, 3)])
        assert toggle_edge(g, 1, 3) == (1, 1)
        assert g.triangle_count == 1

    def test_k4_removal(self):
        g = Graph.complete(4)
        assert g.triangle_count == 4
        assert toggle_edge(g, 1, 2) == (-1, -2)
        assert g.triangle_count == brute_force_triangles(g)

    def test_self_loop(self):
        with pytest.raises(ValueError):
            Graph(3).toggle(1, 1)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(3, 30), st.lists(st.tuples(st.integers(0, 29), st.integers(0, 29)), max_size=200))
    def test_counters_match_brute_force(self, n, ops):
        g = Graph(n)
        for u, v in ops:
            u, v = u % n, v % n
            if u != v:
                g.toggle(u, v)
        assert g.triangle_count == brute_force_triangles(g)
        assert g.edge_count * 2 == int(g.degree.sum())
        assert g.edge_count == len(g.edges())
        A = g.adjacency()
        assert np.array_equal(A, A.T) and not A.diagonal().any()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 12), st.integers(0, 2**30))
    def test_double_toggle_identity(self, n, seed):
        rng = np.random.default_rng(seed)
        g = Graph.gnp(n, 0.5, rng)
        before = (g.edge_count, g.triangle_count, g.degree.copy(), [set(s) for s in g.adj])
        u, v = rng.choice(n, 2, replace=False)
        g.toggle(int(u), int(v))
        g.toggle(int(u), int(v))
        assert (g.edge_count, g.triangle_count) == before[:2]
        assert np.array_equal(g.degree, before[2]) and g.adj == before[3]


class TestCodegree:
    def test_k3(self):
        assert codegree(Graph.complete(3), 1, 2) == 1

    def test_star(self):
        g = Graph(6, [(0, i) for i in range(1, 6)])
        assert codegree(g, 1, 2) == 1

    def test_random_against_intersection(self):
        rng = np.random.default_rng(3)
        g = Graph.gnp(8, 0.5, rng)
        A = g.adjacency(np.int64)
        for u in range(8):
            for v in range(8):
                if u != v:
                    assert codegree(g, u, v) == int(sum(A[u, w] and A[v, w] for w in range(8)))

    def test_degrees(self):
        g = Graph(5, [(0, 1), (0, 2), (0, 3)])
        assert g.max_degree == 3 and g.min_degree == 0


class TestMaxCut:
    def test_bipartite(self):
        g = Graph.complete_bipartite(3, 4)
        assert max_cut_fraction(g, "exact").maxcut_fraction == 1.0
        assert max_cut_fraction(g, "local_search", restarts=4, seed=1).maxcut_fraction == 1.0

    def test_triangle(self):
        assert max_cut_fraction(Graph.complete(3), "exact").maxcut_fraction == pytest.approx(2 / 3)

    def test_empty_convention(self):
        assert max_cut_fraction(Graph(5), "exact").maxcut_fraction == 0.0

    def test_size_limit(self):
        with pytest.raises(SizeError):
            max_cut_fraction(Graph.cycle(25), "exact")

    @pytest.mark.parametrize("seed", range(6))
    def test_exact_matches_oracle(self, seed):
        g = Graph.gnp(10, 0.4, np.random.default_rng(seed))
        if g.edge_count:
            assert max_cut_fraction(g, "exact").maxcut_fraction == pytest.approx(_maxcut_oracle(g))

    @pytest.mark.parametrize("seed", range(4))
    def test_local_search_lower_bound_and_deterministic(self, seed):
        g = Graph.gnp(16, 0.3, np.random.default_rng(seed))
        ex = max_cut_fraction(g, "exact").maxcut_fraction
        a = max_cut_fraction(g, "local_search", restarts=10, seed=seed).maxcut_fraction
        b = max_cut_fraction(g, "local_search", restarts=10, seed=seed).maxcut_fraction
        assert a == b
        assert a <= ex + 1e-15
        assert a >= 0.5  # every local optimum cuts at least half the edges


class TestCutNorm:
    def test_empty(self):
        assert cut_norm_deviation(Graph(4), 0.0, "exact") == 0.0

    def test_single_edge(self):
        assert cut_norm_deviation(Graph(2, [(0, 1)]), 0.0, "exact") == 2.0

    def test_exact_matches_double_loop(self):
        g = Graph.gnp(6, 0.5, np.random.default_rng(8))
        assert cut_norm_deviation(g, 0.3, "exact") == pytest.approx(_cutnorm_oracle(g, 0.3))

    def test_exact_equals_exhaustive_alternating(self):
        g = Graph.gnp(10, 0.5, np.random.default_rng(11))
        ex = cut_norm_deviation(g, 0.5, "exact")
        alt = cut_norm_deviation(g, 0.5, "alternating", restarts=2**10, seed=0)
        assert alt == pytest.approx(ex)

    def test_alternating_frequency(self):
        hits = 0
        trials = 40
        for s in range(trials):
            g = Graph.gnp(10, 0.5, np.random.default_rng(100 + s))
            ex = cut_norm_deviation(g, 0.5, "exact")
            alt = cut_norm_deviation(g, 0.5, "alternating", restarts=64, seed=s)
            assert alt <= ex + 1e-9
            hits += abs(alt - ex) < 1e-9
        assert hits >= 0.9 * trials

    def test_size_limit(self):
        with pytest.raises(SizeError):
            cut_norm_deviation(Graph(15), 0.1, "exact")


class TestIO:
    def test_round_trip(self, tmp_path):
        g = Graph.gnp(12, 0.3, np.random.default_rng(2))
        path = tmp_path / "g.txt"
        write_edge_list(g, path)
        assert path.read_text().splitlines()[0] == "n 12"
        assert read_edge_list(path) == g

    def test_stream_and_isolated_vertices(self):
        buf = io.StringIO()
        write_edge_list(Graph(5, [(0, 1)]), buf)
        h = read_edge_list(io.StringIO(buf.getvalue()))
        assert h.n == 5 and h.edges() == [(0, 1)]

    @pytest.mark.parametrize("text", ["0 1\n", "n 3\n0 3\n", "n 3\n1 1\n", "n 3\n0 1 2\n"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            read_edge_list(io.StringIO(text))
