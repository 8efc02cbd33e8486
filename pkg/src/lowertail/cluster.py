"""Cluster expansion of log Xi_H(lambda, zeta) and the regular-tree approximation.

A cluster is an ordered tuple of vertices of H whose incompatibility graph
is connected: positions i, j are joined with weight -1 when they hold the
same vertex and with weight -zeta when they hold adjacent vertices. The
Ursell weight is the connected-spanning-subgraph sum over that graph,
divided by k!.

The series is summed over multiset classes (a connected support plus
multiplicities) instead of ordered tuples. The Ursell weight is symmetric, so
a class with multiplicities m stands for k!/prod m_v! tuples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from .graphstore import Graph, SizeError
from .specfun import lambert_w0

__all__ = [
    "DEFAULT_TRUNCATION",
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "OutOfRegionError",
    "Cluster",
    "ClusterSeries",
    "TreeApprox",
    "connected_subsets",
    "cluster_classes",
    "enumerate_clusters",
    "ursell",
    "ursell_bruteforce",
    "penrose_tree_sum",
    "penrose_violations",
    "ClusterExpansion",
    "admissible_gamma",
    "tail_bound",
    "truncated_log_xi",
    "cluster_series",
    "tree_approx",
    "tree_count_check",
    "spanning_tree_count",
]

DEFAULT_TRUNCATION = 6
DEFAULT_BUDGET = 5_000_000
MAX_CLUSTER_SIZE = 8


class BudgetExceeded(RuntimeError):
    """Cluster enumeration hit its configured budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"cluster budget {budget} exceeded after {count} clusters")
        self.count = count
        self.budget = budget


class OutOfRegionError(ValueError):
    """(lambda, zeta) outside the region where the expansion is certified."""

    def __init__(self, gamma: float):
        super().__init__(f"e*lambda*(1+zeta*Delta) = {gamma:.6g} >= 1: no admissible gamma < 1")
        self.gamma = gamma


# --- clusters -------------------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    """Ordered vertex tuple with its incompatibility edges.

    ``edges`` holds (i, j, kind) for positions i < j, where kind is
    "same" (weight -1) or "adjacent" (weight -zeta).
    """

    vertices: Tuple[int, ...]
    edges: Tuple[Tuple[int, int, str], ...]

    @classmethod
    def from_tuple(cls, H: Graph, vertices: Sequence[int]) -> "Cluster":
        vs = tuple(int(v) for v in vertices)
        edges = []
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                if vs[i] == vs[j]:
                    edges.append((i, j, "same"))
                elif H.has_edge(vs[i], vs[j]):
                    edges.append((i, j, "adjacent"))
        return cls(vs, tuple(edges))

    @property
    def size(self) -> int:
        return len(self.vertices)

    def weights(self, zeta: float) -> List[Tuple[int, int, float]]:
        return [(i, j, -1.0 if kind == "same" else -zeta) for i, j, kind in self.edges]

    def is_connected(self) -> bool:
        k = self.size
        if k == 0:
            return False
        seen = {0}
        stack = [0]
        nbrs: Dict[int, List[int]] = {i: [] for i in range(k)}
        for i, j, _ in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        while stack:
            i = stack.pop()
            for j in nbrs[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == k


def connected_subsets(H: Graph, max_size: int) -> Iterator[Tuple[int, ...]]:
    """Every connected vertex subset of size <= max_size exactly once (sorted tuples).

    Each subset is grown from its smallest vertex, only through exclusive
    neighbours (the ESU scheme), which makes the enumeration duplicate-free.
    """
    adj = H.adj

    def grow(sub, ext, closed, root):
        yield tuple(sorted(sub))
        if len(sub) == max_size:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new = [u for u in adj[w] if u > root and u not in closed]
            yield from grow(sub | {w}, ext + new, closed | set(new) | {w}, root)

    for r in range(H.n):
        start_ext = [u for u in adj[r] if u > r]
        yield from grow({r}, start_ext, {r} | set(adj[r]) | set(range(r)), r)


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def cluster_classes(H: Graph, k_max: int) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """(support, multiplicities) for every multiset class of clusters of size <= k_max."""
    for support in connected_subsets(H, k_max):
        s = len(support)
        for k in range(s, k_max + 1):
            for mult in _compositions(k, s):
                yield support, mult


def _multiset_permutations(items: List[int]) -> Iterator[Tuple[int, ...]]:
    # lexicographic next-permutation over a sorted multiset
    a = sorted(items)
    n = len(a)
    while True:
        yield tuple(a)
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])


def enumerate_clusters(H: Graph, k_max: int, budget: int = DEFAULT_BUDGET) -> Iterator[Cluster]:
    """Stream every cluster of H with at most k_max positions, each once.

    Tuples are produced class by class: a connected support, a choice of
    multiplicities, then all distinct orderings.
    """
    if k_max > MAX_CLUSTER_SIZE:
        raise SizeError(f"cluster size limited to {MAX_CLUSTER_SIZE}")
    count = 0
    for support, mult in cluster_classes(H, k_max):
        items = [v for v, m in zip(support, mult) for _ in range(m)]
        for perm in _multiset_permutations(items):
            count += 1
            if count > budget:
                raise BudgetExceeded(count - 1, budget)
            yield Cluster.from_tuple(H, perm)


# --- Ursell weights -------------------------------------------------------

def ursell(gamma: Cluster, zeta: float) -> float:
    """phi_zeta(Gamma) by a subset recursion over positions.

    With f(T) = prod_{e in E(T)} (1 + w_e) (the sum over all edge subsets
    inside T) the connected sum obeys
    c(T) = f(T) - sum_{root(T) in U, U proper} c(U) f(T \\ U).
    """
    k = gamma.size
    if k == 0:
        raise ValueError("empty cluster")
    if k > MAX_CLUSTER_SIZE:
        raise SizeError(f"ursell limited to {MAX_CLUSTER_SIZE} positions")
    w = np.zeros((k, k))
    for i, j, wt in gamma.weights(zeta):
        w[i, j] = w[j, i] = wt
    full = (1 << k) - 1
    f = np.ones(full + 1)
    for mask in range(1, full + 1):
        pos = [i for i in range(k) if mask >> i & 1]
        val = 1.0
        for a, b in itertools.combinations(pos, 2):
            val *= 1.0 + w[a, b]
        f[mask] = val
    c = np.zeros(full + 1)
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        total = f[mask]
        sub = rest
        # U = low | sub for proper subsets sub of rest
        while True:
            sub = (sub - 1) & rest
            if sub == rest:
                break
            U = low | sub
            total -= c[U] * f[mask ^ U]
            if sub == 0:
                break
        c[mask] = total
    return float(c[full] / math.factorial(k))


def ursell_bruteforce(gamma: Cluster, zeta: float) -> float:
    """Direct sum over connected spanning edge subsets (small clusters only)."""
    k = gamma.size
    edges = gamma.weights(zeta)
    if len(edges) > 22:
        raise SizeError("too many incompatibility edges for brute force")
    total = 0.0
    for mask in range(1 << len(edges)):
        chosen = [edges[i] for i in range(len(edges)) if mask >> i & 1]
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = k
        for i, j, _ in chosen:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                comps -= 1
        if comps == 1:
            total += math.prod(wt for _, _, wt in chosen)
    return total / math.factorial(k)


def penrose_tree_sum(gamma: Cluster, zeta: float) -> float:
    """Sum over spanning trees of H_Gamma of prod |w_e| (weighted matrix-tree theorem)."""
    k = gamma.size
    if k == 1:
        return 1.0
    L = np.zeros((k, k))
    for i, j, wt in gamma.weights(zeta):
        a = abs(wt)
        L[i, j] -= a
        L[j, i] -= a
        L[i, i] += a
        L[j, j] += a
    return float(max(np.linalg.det(L[1:, 1:]), 0.0))


def spanning_tree_count(H: Graph, vertices: Sequence[int]) -> int:
    """Number of spanning trees of the induced subgraph H[vertices] (Kirchhoff)."""
    vs = list(vertices)
    k = len(vs)
    if k == 1:
        return 1
    L = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            if H.has_edge(vs[a], vs[b]):
                L[a, b] = L[b, a] = -1.0
                L[a, a] += 1.0
                L[b, b] += 1.0
    return int(round(np.linalg.det(L[1:, 1:])))


# --- series ---------------------------------------------------------------

class ClusterExpansion:
    """Connected sums c(m) = k! phi over multiset classes, memoised for one (H, zeta).

    The position recursion collapses to multisets: f of a position set is
    zero unless all its vertices differ, so only vertex sets T are removed,
    and the number of ways to pick their positions is
    prod_{v in T} m_v, with one copy of the root vertex held back.
    """

    def __init__(self, H: Graph, zeta: float):
        if not 0.0 <= zeta <= 1.0:
            raise ValueError("zeta must lie in [0, 1]")
        self.H = H
        self.zeta = float(zeta)
        self._memo: Dict[Tuple[Tuple[int, int], ...], float] = {}

    def _edge_power(self, verts: Sequence[int]) -> float:
        e = sum(1 for a, b in itertools.combinations(verts, 2) if self.H.has_edge(a, b))
        return 1.0 if e == 0 else (1.0 - self.zeta) ** e

    def _connected(self, verts: Sequence[int]) -> bool:
        vs = set(verts)
        start = verts[0]
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in self.H.adj[u]:
                if w in vs and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(vs)

    def connected_sum(self, support: Sequence[int], mult: Sequence[int]) -> float:
        key = tuple(sorted(zip(support, mult)))
        return self._c(key)

    def _c(self, key: Tuple[Tuple[int, int], ...]) -> float:
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        verts = [v for v, _ in key]
        m = dict(key)
        if len(verts) > 1 and not self._connected(verts):
            self._memo[key] = 0.0
            return 0.0
        r = verts[0]
        total = self._edge_power(verts) if all(x == 1 for x in m.values()) else 0.0
        s = len(verts)
        for mask in range(1, 1 << s):
            T = [verts[i] for i in range(s) if mask >> i & 1]
            if r in T and m[r] == 1:
                continue  # the root copy must stay in the remainder
            ways = 1
            for v in T:
                ways *= (m[v] - 1) if v == r else m[v]
            if ways == 0:
                continue
            rest = dict(m)
            for v in T:
                rest[v] -= 1
            rest_key = tuple((v, rest[v]) for v in verts if rest[v] > 0)
            total -= ways * self._c(rest_key) * self._edge_power(T)
        self._memo[key] = total
        return total

    def phi(self, gamma: Cluster) -> float:
        counts: Dict[int, int] = {}
        for v in gamma.vertices:
            counts[v] = counts.get(v, 0) + 1
        return self._c(tuple(sorted(counts.items()))) / math.factorial(gamma.size)

    def coefficients(self, k_max: int, budget: int = DEFAULT_BUDGET) -> Dict[int, dict]:
        """Per size k: the series coefficient a_k (log Xi = sum a_k lambda^k),
        the number of ordered clusters and sum of |phi| over them.

        ``budget`` caps the number of multiset classes visited.
        """
        out = {k: {"coefficient": 0.0, "clusters": 0, "abs_sum": 0.0} for k in range(1, k_max + 1)}
        for i, (support, mult) in enumerate(cluster_classes(self.H, k_max)):
            if i >= budget:
                raise BudgetExceeded(i, budget)
            k = sum(mult)
            denom = math.prod(math.factorial(x) for x in mult)
            c = self.connected_sum(support, mult)
            n_tuples = math.factorial(k) // denom
            out[k]["coefficient"] += c / denom
            out[k]["clusters"] += n_tuples
            out[k]["abs_sum"] += abs(c) / denom
        return out


def penrose_violations(H: Graph, zeta: float, k_max: int) -> Tuple[int, int]:
    """(classes checked, classes with |k! phi| above the Penrose tree sum).

    Both sides are invariant under reordering the tuple, so one ordering per
    multiset class covers every cluster.
    """
    E = ClusterExpansion(H, zeta)
    checked = bad = 0
    for support, mult in cluster_classes(H, k_max):
        rep = Cluster.from_tuple(H, [v for v, m in zip(support, mult) for _ in range(m)])
        lhs = abs(E.connected_sum(support, mult))
        bound = penrose_tree_sum(rep, zeta)
        checked += 1
        if lhs > bound * (1.0 + 1e-9) + 1e-12:
            bad += 1
    return checked, bad


def admissible_gamma(H: Graph, lam: float, zeta: float) -> float:
    """Tightest gamma with e lambda (1 + zeta Delta) < gamma."""
    return math.e * lam * (1.0 + zeta * H.max_degree) * (1.0 + 1e-9)


def tail_bound(n: int, lam: float, gamma: float, k: int) -> float:
    """Bound on the sum of |phi lambda^{|Gamma|}| over clusters larger than k."""
    return math.e * n * lam * gamma**k / (1.0 - gamma)


@dataclass
class ClusterSeries:
    value: float
    tail_bound: float
    gamma: float
    k: int
    cluster_counts_by_size: Dict[int, int]
    coefficients: Dict[int, float]

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "tail_bound": self.tail_bound,
            "gamma": self.gamma,
            "k": self.k,
            "cluster_counts_by_size": {str(k): v for k, v in self.cluster_counts_by_size.items()},
        }


def cluster_series(
    H: Graph,
    lam: float,
    zeta: float,
    k: int = DEFAULT_TRUNCATION,
    budget: int = DEFAULT_BUDGET,
) -> ClusterSeries:
    """Truncated series plus its certified tail, gamma and cluster counts."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if k < 1 or k > MAX_CLUSTER_SIZE:
        raise SizeError(f"truncation must lie in 1..{MAX_CLUSTER_SIZE}")
    gamma = admissible_gamma(H, lam, zeta)
    if gamma >= 1.0:
        raise OutOfRegionError(gamma / (1.0 + 1e-9))
    coeffs = ClusterExpansion(H, zeta).coefficients(k, budget)
    value = sum(c["coefficient"] * lam**size for size, c in coeffs.items())
    return ClusterSeries(
        value=value,
        tail_bound=tail_bound(H.n, lam, gamma, k),
        gamma=gamma,
        k=k,
        cluster_counts_by_size={size: c["clusters"] for size, c in coeffs.items()},
        coefficients={size: c["coefficient"] for size, c in coeffs.items()},
    )


def truncated_log_xi(H: Graph, lam: float, zeta: float, k: int = DEFAULT_TRUNCATION) -> Tuple[float, float]:
    """Sum of phi(Gamma) lambda^{|Gamma|} over clusters with |Gamma| <= k, and the tail bound."""
    s = cluster_series(H, lam, zeta, k)
    return s.value, s.tail_bound


# --- tree approximation ---------------------------------------------------

@dataclass(frozen=True)
class TreeApprox:
    Delta: float
    f_value: float
    alpha_value: float
    rho_value: float


def tree_approx(Delta: float, lam: float, zeta: float) -> TreeApprox:
    """f = W(2+W)/(2 zeta Delta), alpha = W/(zeta Delta), rho = Delta (1-zeta) alpha^2 / 2, W = W(zeta Delta lambda)."""
    if not Delta > 0:
        raise ValueError("Delta must be positive")
    if not 0.0 < zeta <= 1.0:
        raise ValueError("zeta must lie in (0, 1]")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    x = zeta * Delta
    W = lambert_w0(x * lam)
    alpha = W / x
    return TreeApprox(
        Delta=Delta,
        f_value=W * (2.0 + W) / (2.0 * x),
        alpha_value=alpha,
        rho_value=0.5 * Delta * (1.0 - zeta) * alpha * alpha,
    )


def tree_count_check(
    H: Graph,
    ell: int,
    v: int,
    budget: int = DEFAULT_BUDGET,
) -> Tuple[int, float]:
    """Number of ell-vertex subtrees of H containing v, and (Delta ell)^{ell-1}/ell!."""
    if ell < 1 or ell > 6:
        raise SizeError("tree counts limited to ell <= 6")
    count = 0
    seen = 0
    for S in connected_subsets(H, ell):
        seen += 1
        if seen > budget:
            raise BudgetExceeded(seen - 1, budget)
        if len(S) == ell and v in S:
            count += spanning_tree_count(H, S)
    Delta = H.max_degree
    prediction = (Delta * ell) ** (ell - 1) / math.factorial(ell)
    return count, float(prediction)
