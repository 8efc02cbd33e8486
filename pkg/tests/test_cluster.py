from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowertail.cluster import (
    BudgetExceeded,
    Cluster,
    ClusterExpansion,
    OutOfRegionError,
    cluster_series,
    connected_subsets,
    enumerate_clusters,
    penrose_tree_sum,
    tree_approx,
    tree_count_check,
    truncated_log_xi,
    ursell,
    ursell_bruteforce,
)
from lowertail.exact import exact_Xi, subset_count_table
from lowertail.graphstore import Graph, SizeError


def _log_taylor(H, zeta, k):
    """Taylor coefficients of log Xi_H in lambda up to order k (exact polynomial algebra)."""
    table = subset_count_table(H)
    m = np.arange(table.shape[1])
    a = (table * (1 - zeta) ** m).sum(axis=1)
    a = np.concatenate([a, np.zeros(k + 1)])[: k + 1]
    # b = log(a): n b_n = n a_n - sum_{j<n} j b_j a_{n-j}, with a_0 = 1
    b = np.zeros(k + 1)
    for n in range(1, k + 1):
        b[n] = (n * a[n] - sum(j * b[j] * a[n - j] for j in range(1, n))) / n
    return b


def _graphs():
    rng = np.random.default_rng(17)
    out = [Graph(1), Graph.complete(2), Graph.complete(3), Graph.cycle(5), Graph.complete_bipartite(2, 3)]
    out += [Graph.gnp(6, 0.4, rng) for _ in range(3)]
    return out


class TestEnumeration:
    def test_k1(self):
        H = Graph.cycle(6)
        assert sorted(g.vertices for g in enumerate_clusters(H, 1)) == [(v,) for v in range(6)]

    def test_k2_hand_count(self):
        got = sorted(g.vertices for g in enumerate_clusters(Graph.complete(2), 2))
        assert got == [(0,), (0, 0), (0, 1), (1,), (1, 0), (1, 1)]

    def test_single_vertex(self):
        assert [g.vertices for g in enumerate_clusters(Graph(1), 3)] == [(0,), (0, 0), (0, 0, 0)]

    @pytest.mark.parametrize("H", _graphs()[3:], ids=lambda g: f"n{g.n}e{g.edge_count}")
    def test_matches_brute_force_tuples(self, H):
        k = 4
        want = set()
        for size in range(1, k + 1):
            for tup in itertools.product(range(H.n), repeat=size):
                if Cluster.from_tuple(H, tup).is_connected():
                    want.add(tup)
        got = [g.vertices for g in enumerate_clusters(H, k)]
        assert len(got) == len(set(got))
        assert set(got) == want

    def test_connected_subsets_unique(self):
        H = Graph.gnp(9, 0.35, np.random.default_rng(3))
        got = list(connected_subsets(H, 9))
        assert len(got) == len(set(got))
        want = 0
        for r in range(1, 10):
            for S in itertools.combinations(range(9), r):
                if Cluster.from_tuple(H, S).is_connected():
                    want += 1
        assert len(got) == want

    def test_budget(self):
        with pytest.raises(BudgetExceeded) as info:
            list(enumerate_clusters(Graph.cycle(10), 5, budget=100))
        assert info.value.count == 100

    def test_size_cap(self):
        with pytest.raises(SizeError):
            next(enumerate_clusters(Graph(1), 9))


class TestUrsell:
    def test_small_values(self):
        H = Graph(3, [(0, 1), (1, 2)])
        z = 0.35
        assert ursell(Cluster.from_tuple(H, (0,)), z) == 1.0
        assert ursell(Cluster.from_tuple(H, (1, 1)), z) == pytest.approx(-0.5)
        assert ursell(Cluster.from_tuple(H, (0, 1)), z) == pytest.approx(-z / 2)
        assert ursell(Cluster.from_tuple(H, (0, 1, 2)), z) == pytest.approx(z * z / 6)

    def test_pure_repeats(self):
        for k in range(1, 7):
            g = Cluster.from_tuple(Graph(1), (0,) * k)
            assert ursell(g, 0.5) == pytest.approx((-1) ** (k - 1) / k, rel=1e-12)

    def test_disconnected_is_zero(self):
        g = Cluster.from_tuple(Graph(2), (0, 1))
        assert ursell(g, 0.7) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 5), st.floats(0.0, 1.0))
    def test_against_edge_subset_sum(self, seed, k, zeta):
        rng = np.random.default_rng(seed)
        H = Graph.gnp(4, 0.6, rng)
        tup = tuple(int(x) for x in rng.integers(0, 4, size=k))
        g = Cluster.from_tuple(H, tup)
        if len(g.edges) <= 14:
            assert ursell(g, zeta) == pytest.approx(ursell_bruteforce(g, zeta), abs=1e-13)

    @pytest.mark.parametrize("H", _graphs(), ids=lambda g: f"n{g.n}e{g.edge_count}")
    def test_multiset_recursion_matches(self, H):
        E = ClusterExpansion(H, 0.45)
        for g in enumerate_clusters(H, 5):
            assert E.phi(g) == pytest.approx(ursell(g, 0.45), abs=1e-14)

    @pytest.mark.parametrize("zeta", [0.0, 0.3, 1.0])
    def test_penrose_every_cluster(self, zeta):
        H = Graph.gnp(6, 0.5, np.random.default_rng(5))
        for g in enumerate_clusters(H, 5):
            lhs = abs(math.factorial(g.size) * ursell(g, zeta))
            assert lhs <= penrose_tree_sum(g, zeta) * (1 + 1e-9) + 1e-12

    def test_size_error(self):
        with pytest.raises(SizeError):
            ursell(Cluster.from_tuple(Graph(1), (0,) * 9), 0.5)


class TestSeries:
    @pytest.mark.parametrize("H", _graphs(), ids=lambda g: f"n{g.n}e{g.edge_count}")
    @pytest.mark.parametrize("zeta", [0.0, 0.4, 1.0])
    def test_coefficients_are_taylor_coefficients(self, H, zeta):
        k = 6
        want = _log_taylor(H, zeta, k)
        got = ClusterExpansion(H, zeta).coefficients(k)
        for size in range(1, k + 1):
            assert got[size]["coefficient"] == pytest.approx(want[size], rel=1e-10, abs=1e-10)

    def test_k2_order_two(self):
        lam, z = 0.03, 0.6
        v, _ = truncated_log_xi(Graph.complete(2), lam, z, 2)
        assert v == pytest.approx(2 * lam - (1 + z) * lam**2, rel=1e-14)

    def test_single_vertex_log1p(self):
        lam = 0.2
        v, tail = truncated_log_xi(Graph(1), lam, 0.5, 8)
        want = sum((-1) ** (j - 1) * lam**j / j for j in range(1, 9))
        assert v == pytest.approx(want, rel=1e-14)
        assert abs(v - math.log1p(lam)) <= tail

    def test_cycle10(self):
        H = Graph.cycle(10)
        s = cluster_series(H, 0.05, 0.8, 6)
        assert abs(s.value - exact_Xi(H, 0.05, 0.8).log_Z) <= s.tail_bound
        assert s.gamma == pytest.approx(math.e * 0.05 * 2.6, rel=1e-8)
        assert s.cluster_counts_by_size[1] == 10

    @pytest.mark.parametrize("seed", range(4))
    def test_agreement_k7(self, seed):
        H = Graph.gnp(8, 0.3, np.random.default_rng(seed))
        lam = 0.9 / (math.e * (1 + 0.5 * max(H.max_degree, 1)))
        s = cluster_series(H, lam, 0.5, 7)
        assert abs(s.value - exact_Xi(H, lam, 0.5).log_Z) <= s.tail_bound

    def test_per_size_bound(self):
        H = Graph.gnp(7, 0.5, np.random.default_rng(8))
        lam, z = 0.04, 0.7
        gamma = math.e * lam * (1 + z * H.max_degree) * (1 + 1e-9)
        coeffs = ClusterExpansion(H, z).coefficients(6)
        for k, row in coeffs.items():
            assert row["abs_sum"] * lam**k <= math.e * H.n * lam * gamma ** (k - 1)

    def test_tail_monotone(self):
        H = Graph.cycle(8)
        tails = [truncated_log_xi(H, 0.05, 0.5, k)[1] for k in range(1, 8)]
        assert all(b < a for a, b in zip(tails, tails[1:]))

    def test_out_of_region(self):
        with pytest.raises(OutOfRegionError) as info:
            truncated_log_xi(Graph.cycle(5), 0.5, 1.0, 4)
        assert info.value.gamma == pytest.approx(math.e * 0.5 * 3)

    def test_counts_json(self):
        s = cluster_series(Graph.complete(2), 0.01, 0.3, 2)
        assert s.to_dict()["cluster_counts_by_size"] == {"1": 2, "2": 4}


class TestTreeApprox:
    def test_small_argument(self):
        t = tree_approx(5.0, 1e-9, 0.5)
        assert t.alpha_value == pytest.approx(1e-9, rel=1e-6)
        assert tree_approx(5.0, 0.3, 1.0).rho_value == 0.0

    def test_alpha_range(self):
        for lam in (0.001, 0.1, 2.0):
            t = tree_approx(7.0, lam, 0.4)
            assert 0 < t.alpha_value <= lam
            assert t.rho_value >= 0

    def test_derivative_identities(self):
        D, lam, z = 20.0, 0.01, 0.5
        h = 1e-6
        df_l = (tree_approx(D, lam + h, z).f_value - tree_approx(D, lam - h, z).f_value) / (2 * h)
        df_z = (tree_approx(D, lam, z + h).f_value - tree_approx(D, lam, z - h).f_value) / (2 * h)
        t = tree_approx(D, lam, z)
        assert abs(lam * df_l - t.alpha_value) <= 1e-8
        assert abs(-(1 - z) * df_z - t.rho_value) <= 1e-8

    def test_validation(self):
        with pytest.raises(ValueError):
            tree_approx(0.0, 0.1, 0.5)
        with pytest.raises(ValueError):
            tree_approx(3.0, 0.1, 0.0)


def _trees_bruteforce(H, ell, v):
    edges = list(H.edges())
    count = 0
    for sub in itertools.combinations(edges, ell - 1):
        verts = {x for e in sub for x in e} if sub else {v}
        if len(verts) != ell or v not in verts:
            continue
        parent = {x: x for x in verts}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for a, b in sub:
            ra, rb = find(a), find(b)
            if ra == rb:
                ok = False
                break
            parent[ra] = rb
        count += ok
    return count


class TestTreeCount:
    def test_trivial(self):
        H = Graph.gnp(8, 0.4, np.random.default_rng(2))
        assert tree_count_check(H, 1, 3)[0] == 1
        assert tree_count_check(H, 2, 3)[0] == H.degree[3]

    @pytest.mark.parametrize("ell", [3, 4])
    def test_against_edge_subsets(self, ell):
        H = Graph.gnp(7, 0.5, np.random.default_rng(ell))
        assert tree_count_check(H, ell, 0)[0] == _trees_bruteforce(H, ell, 0)

    def test_k88(self):
        count, pred = tree_count_check(Graph.complete_bipartite(8, 8), 3, 0)
        assert count == 84 and pred == pytest.approx(96.0)
        assert 0.8 <= count / pred <= 1.2
