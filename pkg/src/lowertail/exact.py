"""Exhaustive oracles for tiny instances.

Every graph on n <= 7 labelled vertices is visited once by a Gray code over
the edge bitmask; the result is a count table N[e, t] of graphs with e edges
and t triangles. Z(lambda, zeta), Gibbs expectations and lower-tail
probabilities are then polynomial sums over that table. The same idea with
vertex subsets gives Xi_H for host graphs up to 22 vertices.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numba as nb
import numpy as np

from .graphstore import Graph, SizeError

__all__ = [
    "GibbsParams",
    "ExactSummary",
    "Residuals",
    "Z_LIMIT",
    "XI_LIMIT",
    "graph_count_table",
    "subset_count_table",
    "exact_Z",
    "exact_Xi",
    "exact_lower_tail",
    "derivative_identity_check",
]

Z_LIMIT = 7
XI_LIMIT = 22


@dataclass(frozen=True)
class GibbsParams:
    """(n, lambda, zeta) with p = lambda / (1 + lambda) and c = p sqrt(n).

    Scaled inputs follow p = c / sqrt(n) and lambda = p / (1 - p).
    """

    n: int
    lam: float
    zeta: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta}")

    @classmethod
    def from_c(cls, n: int, c: float, zeta: float) -> "GibbsParams":
        return cls.from_p(n, c / math.sqrt(n), zeta)

    @classmethod
    def from_p(cls, n: int, p: float, zeta: float) -> "GibbsParams":
        if not 0.0 <= p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        return cls(n, p / (1.0 - p), zeta)

    @property
    def p(self) -> float:
        return self.lam / (1.0 + self.lam)

    @property
    def c(self) -> float:
        return self.p * math.sqrt(self.n)

    @property
    def pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def to_dict(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "zeta": self.zeta, "p": self.p, "c": self.c}


@dataclass(frozen=True)
class ExactSummary:
    """Exact log partition function and first moments.

    For Z the moments are of |G| and X(G); for Xi they are of |S| and
    |E(S)|. lower_tail_mass is the probability of the zero-penalty set
    (triangle-free graphs, or independent sets).
    """

    log_Z: float
    expect_edges: float
    expect_triangles: float
    lower_tail_mass: float

    def to_dict(self) -> dict:
        return {
            "log_Z": self.log_Z,
            "expect_edges": self.expect_edges,
            "expect_triangles": self.expect_triangles,
            "lower_tail_mass": self.lower_tail_mass,
        }


# --- enumeration kernels --------------------------------------------------

@nb.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@nb.njit(cache=True)
def _gray_graph_table(n, eu, ev):
    m = eu.size
    table = np.zeros((m + 1, n * (n - 1) * (n - 2) // 6 + 1), dtype=np.int64)
    nbr = np.zeros(n, dtype=np.int64)
    present = np.zeros(m, dtype=np.uint8)
    e = 0
    t = 0
    table[0, 0] = 1
    for k in range(1, 1 << m):
        j = 0
        x = k
        while (x & 1) == 0:
            x >>= 1
            j += 1
        u = eu[j]
        v = ev[j]
        d = _popcount(nbr[u] & nbr[v])
        if present[j]:
            present[j] = 0
            nbr[u] &= ~(1 << v)
            nbr[v] &= ~(1 << u)
            e -= 1
            t -= d
        else:
            present[j] = 1
            nbr[u] |= 1 << v
            nbr[v] |= 1 << u
            e += 1
            t += d
        table[e, t] += 1
    return table


@nb.njit(cache=True)
def _gray_subset_table(n, nbr, m):
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    s = 0
    size = 0
    edges = 0
    table[0, 0] = 1
    for k in range(1, 1 << n):
        j = 0
        x = k
        while (x & 1) == 0:
            x >>= 1
            j += 1
        d = _popcount(nbr[j] & s)
        if (s >> j) & 1:
            s &= ~(1 << j)
            size -= 1
            edges -= d
        else:
            s |= 1 << j
            size += 1
            edges += d
        table[size, edges] += 1
    return table


@functools.lru_cache(maxsize=None)
def _graph_table_cached(n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    table = _gray_graph_table(n, iu.astype(np.int64), ju.astype(np.int64))
    table.setflags(write=False)
    return table


def graph_count_table(n: int) -> np.ndarray:
    """N[e, t]: number of labelled graphs on n vertices with e edges and t triangles."""
    if n > Z_LIMIT:
        raise SizeError(f"exact enumeration limited to n <= {Z_LIMIT}, got {n}")
    if n < 1:
        raise ValueError("n must be positive")
    return _graph_table_cached(int(n))


def subset_count_table(H: Graph) -> np.ndarray:
    """N[s, m]: number of vertex subsets S of H with |S| = s and |E(S)| = m."""
    if H.n > XI_LIMIT:
        raise SizeError(f"exact Xi limited to |V(H)| <= {XI_LIMIT}, got {H.n}")
    nbr = np.zeros(H.n, dtype=np.int64)
    for u in range(H.n):
        for v in H.adj[u]:
            nbr[u] |= 1 << v
    return _gray_subset_table(H.n, nbr, H.edge_count)


# --- sums over count tables ----------------------------------------------

def _log_weights(table: np.ndarray, lam: float, zeta: float) -> np.ndarray:
    """log(N[a, b] lam^a (1-zeta)^b), -inf where the term vanishes."""
    a = np.arange(table.shape[0])[:, None]
    b = np.arange(table.shape[1])[None, :]
    with np.errstate(divide="ignore"):
        logN = np.log(table.astype(np.float64))
        la = np.where(a == 0, 0.0, a * math.log(lam)) if lam > 0 else np.where(a == 0, 0.0, -np.inf)
        one_minus = 1.0 - zeta
        lb = np.where(b == 0, 0.0, b * math.log(one_minus)) if one_minus > 0 else np.where(b == 0, 0.0, -np.inf)
    return logN + la + lb


def _summarize(table: np.ndarray, lam: float, zeta: float) -> ExactSummary:
    lw = _log_weights(table, lam, zeta)
    top = lw.max()
    w = np.exp(lw - top)
    total = w.sum()
    a = np.arange(table.shape[0])[:, None]
    b = np.arange(table.shape[1])[None, :]
    return ExactSummary(
        log_Z=float(top + math.log(total)),
        expect_edges=float((w * a).sum() / total),
        expect_triangles=float((w * b).sum() / total),
        lower_tail_mass=float(w[:, 0].sum() / total),
    )


def _signed_value(table: np.ndarray, lam: float, zeta: float) -> float:
    # plain polynomial evaluation; valid for zeta slightly outside [0, 1]
    a = np.arange(table.shape[0], dtype=np.float64)[:, None]
    b = np.arange(table.shape[1], dtype=np.float64)[None, :]
    return float((table * lam**a * (1.0 - zeta) ** b).sum())


def exact_Z(params: GibbsParams) -> ExactSummary:
    """Z(lambda, zeta) = sum over graphs of lambda^{|G|} (1 - zeta)^{X(G)}."""
    return _summarize(graph_count_table(params.n), params.lam, params.zeta)


def exact_Xi(H: Graph, lam: float, zeta: float) -> ExactSummary:
    """Xi_H(lambda, zeta) = sum over S of lambda^{|S|} (1 - zeta)^{|E(S)|}."""
    if lam < 0 or not 0.0 <= zeta <= 1.0:
        raise ValueError("need lambda >= 0 and zeta in [0, 1]")
    return _summarize(subset_count_table(H), lam, zeta)


def exact_lower_tail(n: int, p: float, eta: float) -> float:
    """P_p(X <= eta E_p X) for G(n, p), with E_p X = C(n, 3) p^3."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    table = graph_count_table(n)
    m = n * (n - 1) // 2
    threshold = eta * math.comb(n, 3) * p**3
    t_max = math.floor(threshold * (1.0 + 1e-12) + 1e-12)
    e = np.arange(table.shape[0])
    logw = e * math.log(p) + (m - e) * math.log1p(-p)
    counts = table[:, : t_max + 1].sum(axis=1).astype(np.float64)
    return float(min(1.0, (counts * np.exp(logw)).sum()))


class Residuals(NamedTuple):
    edge: float
    triangle: float
    xi_size: Optional[float] = None
    xi_edges: Optional[float] = None


def _fd_log(table: np.ndarray, lam: float, zeta: float, step: float, wrt: str) -> float:
    if wrt == "lam":
        up, dn = _signed_value(table, lam + step, zeta), _signed_value(table, lam - step, zeta)
    else:
        up, dn = _signed_value(table, lam, zeta + step), _signed_value(table, lam, zeta - step)
    return (math.log(up) - math.log(dn)) / (2.0 * step)


def derivative_identity_check(
    params: GibbsParams,
    step: float = 1e-4,
    H: Optional[Graph] = None,
) -> Residuals:
    """Central-difference check of the moment identities.

    lambda d/dlambda log Z = E|G| and -(1 - zeta) d/dzeta log Z = E X; with a
    host graph H the analogous identities for log Xi_H and (|S|, |E(S)|).
    """
    if not step > 0.0:
        raise ValueError("step must be positive")
    if params.lam > 0 and step > params.lam / 10.0:
        raise ValueError("step must not exceed lambda / 10")
    lam, zeta = params.lam, params.zeta

    def residuals(table, summary):
        r_edge = abs(lam * _fd_log(table, lam, zeta, step, "lam") - summary.expect_edges)
        r_tri = abs(-(1.0 - zeta) * _fd_log(table, lam, zeta, step, "zeta") - summary.expect_triangles)
        return r_edge, r_tri

    table = graph_count_table(params.n)
    r_edge, r_tri = residuals(table, _summarize(table, lam, zeta))
    if H is None:
        return Residuals(r_edge, r_tri)
    htable = subset_count_table(H)
    r_size, r_hedges = residuals(htable, _summarize(htable, lam, zeta))
    return Residuals(r_edge, r_tri, r_size, r_hedges)
