"""Mutable labeled graph with incremental edge/triangle counters, plus cut observables."""

from __future__ import annotations

import enum
import io
import os
from dataclasses import dataclass
from typing import Iterable, List, Optional, Set, Tuple, Union

import numba as nb
import numpy as np

__all__ = [
    "SizeError",
    "Graph",
    "CutMethod",
    "CutStats",
    "toggle_edge",
    "codegree",
    "brute_force_triangles",
    "max_cut_fraction",
    "cut_norm_deviation",
    "read_edge_list",
    "write_edge_list",
    "MAXCUT_EXACT_LIMIT",
    "CUTNORM_EXACT_LIMIT",
]

MAXCUT_EXACT_LIMIT = 24
CUTNORM_EXACT_LIMIT = 14


class SizeError(ValueError):
    """Instance too large for an exhaustive routine."""


class Graph:
    """Simple undirected graph on vertices 0..n-1.

    Neighbour sets, degrees, the edge count |G| and the triangle count X(G)
    are kept exact under :meth:`toggle`.
    """

    __slots__ = ("n", "adj", "degree", "edge_count", "triangle_count")

    def __init__(self, n: int, edges: Iterable[Tuple[int, int]] = ()):
        if n < 0:
            raise ValueError("n must be nonnegative")
        self.n = int(n)
        self.adj: List[Set[int]] = [set() for _ in range(self.n)]
        self.degree = np.zeros(self.n, dtype=np.int64)
        self.edge_count = 0
        self.triangle_count = 0
        for u, v in edges:
            if not self.has_edge(u, v):
                self.toggle(u, v)

    # construction helpers
    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, ((u, v) for u in range(n) for v in range(u + 1, n)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, ((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def complete_bipartite(cls, a: int, b: int) -> "Graph":
        return cls(a + b, ((u, a + v) for u in range(a) for v in range(b)))

    @classmethod
    def from_adjacency(cls, A: np.ndarray) -> "Graph":
        A = np.asarray(A)
        n = A.shape[0]
        iu, ju = np.nonzero(np.triu(A, 1))
        return cls(n, zip(iu.tolist(), ju.tolist()))

    @classmethod
    def gnp(cls, n: int, p: float, rng: np.random.Generator) -> "Graph":
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < p
        return cls(n, zip(iu[keep].tolist(), ju[keep].tolist()))

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g.adj = [set(s) for s in self.adj]
        g.degree = self.degree.copy()
        g.edge_count = self.edge_count
        g.triangle_count = self.triangle_count
        return g

    # queries
    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def neighbors(self, u: int) -> List[int]:
        return sorted(self.adj[u])

    def edges(self) -> List[Tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self.adj[u]) if v > u]

    def codegree(self, u: int, v: int) -> int:
        a, b = self.adj[u], self.adj[v]
        if len(a) > len(b):
            a, b = b, a
        return sum(1 for w in a if w in b)

    @property
    def max_degree(self) -> int:
        return int(self.degree.max()) if self.n else 0

    @property
    def min_degree(self) -> int:
        return int(self.degree.min()) if self.n else 0

    def adjacency(self, dtype=np.uint8) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        for u, v in self.edges():
            A[u, v] = A[v, u] = 1
        return A

    def induced_edge_count(self, subset: Iterable[int]) -> int:
        s = set(subset)
        return sum(1 for u in s for v in self.adj[u] if v in s and u < v)

    # mutation
    def toggle(self, u: int, v: int) -> Tuple[int, int]:
        """Flip the pair {u, v}; returns (edge delta, triangle delta)."""
        if u == v:
            raise ValueError("self-loops are not allowed")
        d = self.codegree(u, v)
        if v in self.adj[u]:
            self.adj[u].discard(v)
            self.adj[v].discard(u)
            self.degree[u] -= 1
            self.degree[v] -= 1
            self.edge_count -= 1
            self.triangle_count -= d
            return -1, -d
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.degree[u] += 1
        self.degree[v] += 1
        self.edge_count += 1
        self.triangle_count += d
        return 1, d

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.adj == other.adj

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count}, triangles={self.triangle_count})"


def toggle_edge(g: Graph, u: int, v: int) -> Tuple[int, int]:
    return g.toggle(u, v)


def codegree(g: Graph, u: int, v: int) -> int:
    if u == v:
        raise ValueError("codegree needs two distinct vertices")
    return g.codegree(u, v)


def brute_force_triangles(g: Graph) -> int:
    """O(n^3) triangle count, used as a test oracle."""
    A = g.adjacency(np.int64)
    return int(np.trace(A @ A @ A) // 6)


# --- cuts ---------------------------------------------------------------

class CutMethod(str, enum.Enum):
    EXACT = "exact"
    LOCAL_SEARCH = "local_search"
    ALTERNATING = "alternating"


@dataclass(frozen=True)
class CutStats:
    maxcut_fraction: float
    cutnorm_dev: Optional[float]
    method: CutMethod


def _csr(g: Graph) -> Tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(g.n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(g.degree)
    idx = np.empty(int(ptr[-1]), dtype=np.int64)
    for u in range(g.n):
        idx[ptr[u]:ptr[u + 1]] = sorted(g.adj[u])
    return ptr, idx


@nb.njit(cache=True)
def _maxcut_gray(n, ptr, idx):
    # side[v] in {0,1}; vertex 0 stays on side 0
    side = np.zeros(n, dtype=np.int8)
    cut = 0
    best = 0
    total = 1 << (n - 1)
    for k in range(1, total):
        # bit that flips between gray(k-1) and gray(k)
        b = 0
        t = k
        while (t & 1) == 0:
            t >>= 1
            b += 1
        v = b + 1
        s = side[v]
        same = 0
        for j in range(ptr[v], ptr[v + 1]):
            if side[idx[j]] == s:
                same += 1
        deg = ptr[v + 1] - ptr[v]
        cut += 2 * same - deg
        side[v] = 1 - s
        if cut > best:
            best = cut
    return best


@nb.njit(cache=True)
def _local_search(n, ptr, idx, init, order):
    side = init.copy()
    # gain[v] = (same-side neighbours) - (other-side neighbours)
    gain = np.zeros(n, dtype=np.int64)
    cut = 0
    for v in range(n):
        for j in range(ptr[v], ptr[v + 1]):
            if side[idx[j]] == side[v]:
                gain[v] += 1
            else:
                gain[v] -= 1
                cut += 1
    cut //= 2
    improved = True
    while improved:
        improved = False
        for t in range(n):
            v = order[t]
            if gain[v] > 0:
                cut += gain[v]
                s = side[v]
                side[v] = 1 - s
                gain[v] = -gain[v]
                for j in range(ptr[v], ptr[v + 1]):
                    w = idx[j]
                    if side[w] == s:
                        gain[w] -= 2
                    else:
                        gain[w] += 2
                improved = True
    return cut


def max_cut_fraction(
    g: Graph,
    mode: Union[str, CutMethod] = "local_search",
    restarts: int = 8,
    seed: Optional[int] = 0,
) -> CutStats:
    """Largest fraction of edges crossing a bipartition.

    ``exact`` enumerates bipartitions by Gray code (n <= 24); ``local_search``
    returns the best single-vertex hill-climbing cut over random restarts,
    a lower bound on the true value.
    """
    mode = CutMethod(mode)
    if g.edge_count == 0:
        return CutStats(0.0, None, mode)
    ptr, idx = _csr(g)
    if mode is CutMethod.EXACT:
        if g.n > MAXCUT_EXACT_LIMIT:
            raise SizeError(f"exact max cut limited to n <= {MAXCUT_EXACT_LIMIT}, got {g.n}")
        best = _maxcut_gray(g.n, ptr, idx)
    elif mode is CutMethod.LOCAL_SEARCH:
        rng = np.random.default_rng(seed)
        best = 0
        for _ in range(max(1, restarts)):
            init = rng.integers(0, 2, g.n).astype(np.int8)
            order = rng.permutation(g.n).astype(np.int64)
            best = max(best, _local_search(g.n, ptr, idx, init, order))
    else:
        raise ValueError(f"unsupported max-cut mode {mode}")
    return CutStats(best / g.edge_count, None, mode)


def _deviation_matrix(g: Graph, q: float) -> np.ndarray:
    M = g.adjacency(np.float64) - q
    np.fill_diagonal(M, 0.0)
    return M


def _best_response(M: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, float]:
    s = x @ M
    y = (s > 0).astype(np.float64)
    return y, float(np.maximum(s, 0.0).sum())


def cut_norm_deviation(
    g: Graph,
    q: float,
    mode: Union[str, CutMethod] = "alternating",
    restarts: int = 16,
    seed: Optional[int] = 0,
    max_rounds: int = 200,
) -> float:
    """max over 0/1 vectors x, y of x^T (A - q(J - I)) y.

    The exact mode scans every x with y chosen optimally (n <= 14). The
    alternating mode iterates best responses x -> y -> x from random starts
    until a fixed point; it never exceeds the exact value.
    """
    mode = CutMethod(mode)
    M = _deviation_matrix(g, q)
    n = g.n
    if n == 0:
        return 0.0
    if mode is CutMethod.EXACT:
        if n > CUTNORM_EXACT_LIMIT:
            raise SizeError(f"exact cut norm limited to n <= {CUTNORM_EXACT_LIMIT}, got {n}")
        codes = np.arange(1 << n, dtype=np.int64)
        X = ((codes[:, None] >> np.arange(n)) & 1).astype(np.float64)
        S = X @ M
        return float(np.maximum(S, 0.0).sum(axis=1).max())
    if mode is not CutMethod.ALTERNATING:
        raise ValueError(f"unsupported cut-norm mode {mode}")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(max(1, restarts)):
        x = rng.integers(0, 2, n).astype(np.float64)
        val = -np.inf
        for _ in range(max_rounds):
            y, _ = _best_response(M, x)
            x_new, v = _best_response(M.T, y)
            if v <= val + 1e-12:
                break
            x, val = x_new, v
        best = max(best, val)
    return best


# --- edge-list IO -------------------------------------------------------

def write_edge_list(g: Graph, dest: Union[str, os.PathLike, io.TextIOBase]) -> None:
    """Header ``n <count>`` then one ``u v`` line per edge, 0-indexed."""
    lines = [f"n {g.n}"] + [f"{u} {v}" for u, v in g.edges()]
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_edge_list(src: Union[str, os.PathLike, io.TextIOBase]) -> Graph:
    if hasattr(src, "read"):
        text = src.read()
    else:
        with open(src, encoding="utf-8") as fh:
            text = fh.read()
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "n" or len(rows[0]) != 2:
        raise ValueError("edge list must start with a header line 'n <count>'")
    n = int(rows[0][1])
    edges = []
    for r in rows[1:]:
        if len(r) != 2:
            raise ValueError(f"malformed edge line: {' '.join(r)!r}")
        u, v = int(r[0]), int(r[1])
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ValueError(f"invalid edge ({u}, {v}) for n={n}")
        edges.append((u, v))
    return Graph(n, edges)
