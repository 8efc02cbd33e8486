"""Glauber dynamics for the edge model mu_{lambda,zeta} and the vertex model nu_{H,lambda,zeta}.

Both chains pick a uniform site (a pair of vertices, or a vertex of the
host H) and resample it from its conditional law:

    P(include) = lambda (1-zeta)^d / (1 + lambda (1-zeta)^d)

where d is the codegree of the pair, or the number of occupied neighbours
of the vertex. Each step consumes two uniforms from the chain's stream:
column 0 selects the site as floor(U * #sites), column 1 decides inclusion.
The numba kernels and the single-step Python functions consume the stream
identically, so trajectories agree step for step.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numba as nb
import numpy as np

from .exact import GibbsParams, subset_count_table
from .graphstore import Graph, SizeError
from .records import RunRecord
from .seeding import stream
from .stats import DEFAULT_BATCHES, batch_means

__all__ = [
    "MU_OBSERVABLES",
    "NU_OBSERVABLES",
    "ChainState",
    "CouplingRecord",
    "RegimeWarning",
    "default_burn_in",
    "steps_per_sweep",
    "step_mu",
    "step_nu",
    "run_chain",
    "run_chains",
    "local_conditioning_check",
    "contraction_estimate",
    "expected_one_step_distance",
    "transition_matrix_mu",
    "domination_run",
]

MU_OBSERVABLES = ("edges", "triangles", "maxdeg", "mindeg", "tagged_degree")
NU_OBSERVABLES = ("size", "induced_edges")
_CHUNK = 1 << 20


class RegimeWarning(UserWarning):
    """Parameters outside the regime where a theoretical bound applies."""


# --- kernels --------------------------------------------------------------

@nb.njit(cache=True, nogil=True)
def _incl_prob(lam, omz, d):
    if d == 0:
        w = lam
    else:
        w = lam * omz**d
    return w / (1.0 + w)


@nb.njit(cache=True, nogil=True)
def _codeg(adj, nbr, deg, u, v):
    if deg[u] > deg[v]:
        a, b = v, u
    else:
        a, b = u, v
    d = 0
    for j in range(deg[a]):
        if adj[b, nbr[a, j]]:
            d += 1
    return d


@nb.njit(cache=True, nogil=True)
def _add_edge(adj, nbr, deg, pos, u, v):
    adj[u, v] = 1
    adj[v, u] = 1
    pos[u, v] = deg[u]
    nbr[u, deg[u]] = v
    deg[u] += 1
    pos[v, u] = deg[v]
    nbr[v, deg[v]] = u
    deg[v] += 1


@nb.njit(cache=True, nogil=True)
def _drop_half(nbr, deg, pos, u, v):
    i = pos[u, v]
    last = nbr[u, deg[u] - 1]
    nbr[u, i] = last
    pos[u, last] = i
    deg[u] -= 1


@nb.njit(cache=True, nogil=True)
def _remove_edge(adj, nbr, deg, pos, u, v):
    adj[u, v] = 0
    adj[v, u] = 0
    _drop_half(nbr, deg, pos, u, v)
    _drop_half(nbr, deg, pos, v, u)


@nb.njit(cache=True, nogil=True)
def _mu_kernel(adj, nbr, deg, pos, pu, pv, lam, omz, U, counters, stride, out, tag):
    """Run U.shape[0] steps; every `stride` steps write a row of observables.

    counters = [edges, triangles, max triangles seen]. Returns rows written.
    """
    npairs = pu.size
    n = deg.size
    rows = 0
    for k in range(U.shape[0]):
        e = int(U[k, 0] * npairs)
        if e >= npairs:
            e = npairs - 1
        u = pu[e]
        v = pv[e]
        d = _codeg(adj, nbr, deg, u, v)
        inc = U[k, 1] < _incl_prob(lam, omz, d)
        if inc and adj[u, v] == 0:
            _add_edge(adj, nbr, deg, pos, u, v)
            counters[0] += 1
            counters[1] += d
            if counters[1] > counters[2]:
                counters[2] = counters[1]
        elif (not inc) and adj[u, v] == 1:
            _remove_edge(adj, nbr, deg, pos, u, v)
            counters[0] -= 1
            counters[1] -= d
        if stride > 0 and (k + 1) % stride == 0:
            mx = 0
            mn = n
            for w in range(n):
                if deg[w] > mx:
                    mx = deg[w]
                if deg[w] < mn:
                    mn = deg[w]
            out[rows, 0] = counters[0]
            out[rows, 1] = counters[1]
            out[rows, 2] = mx
            out[rows, 3] = mn
            out[rows, 4] = deg[tag]
            rows += 1
    return rows


@nb.njit(cache=True, nogil=True)
def _nu_kernel(ptr, idx, occ, cnt, lam, omz, U, counters, stride, out):
    """Vertex chain; counters = [size, induced edges, max induced edges seen]."""
    n = occ.size
    rows = 0
    for k in range(U.shape[0]):
        u = int(U[k, 0] * n)
        if u >= n:
            u = n - 1
        d = cnt[u]
        inc = U[k, 1] < _incl_prob(lam, omz, d)
        if inc and occ[u] == 0:
            occ[u] = 1
            for j in range(ptr[u], ptr[u + 1]):
                cnt[idx[j]] += 1
            counters[0] += 1
            counters[1] += d
            if counters[1] > counters[2]:
                counters[2] = counters[1]
        elif (not inc) and occ[u] == 1:
            occ[u] = 0
            for j in range(ptr[u], ptr[u + 1]):
                cnt[idx[j]] -= 1
            counters[0] -= 1
            counters[1] -= d
        if stride > 0 and (k + 1) % stride == 0:
            out[rows, 0] = counters[0]
            out[rows, 1] = counters[1]
            rows += 1
    return rows


@nb.njit(cache=True, nogil=True)
def _coupled_mu(ay, az, pu, pv, lam, omz, U, trace):
    """Identically coupled pair on adjacency matrices; adds distance to trace[t]."""
    n = ay.shape[0]
    npairs = pu.size
    dist = 0
    for i in range(npairs):
        if ay[pu[i], pv[i]] != az[pu[i], pv[i]]:
            dist += 1
    trace[0] += dist
    for k in range(U.shape[0]):
        if dist == 0:
            # coalesced: distance stays 0
            break
        e = int(U[k, 0] * npairs)
        if e >= npairs:
            e = npairs - 1
        u = pu[e]
        v = pv[e]
        dy = 0
        dz = 0
        for w in range(n):
            if ay[u, w] and ay[v, w]:
                dy += 1
            if az[u, w] and az[v, w]:
                dz += 1
        before = ay[u, v] != az[u, v]
        yi = 1 if U[k, 1] < _incl_prob(lam, omz, dy) else 0
        zi = 1 if U[k, 1] < _incl_prob(lam, omz, dz) else 0
        ay[u, v] = yi
        ay[v, u] = yi
        az[u, v] = zi
        az[v, u] = zi
        dist += (1 if yi != zi else 0) - (1 if before else 0)
        trace[k + 1] += dist
    return dist


@nb.njit(cache=True, nogil=True)
def _coupled_nu(ptr, idx, oy, oz, lam, omz, U, trace):
    n = oy.size
    dist = 0
    for i in range(n):
        if oy[i] != oz[i]:
            dist += 1
    trace[0] += dist
    for k in range(U.shape[0]):
        if dist == 0:
            break
        u = int(U[k, 0] * n)
        if u >= n:
            u = n - 1
        dy = 0
        dz = 0
        for j in range(ptr[u], ptr[u + 1]):
            dy += oy[idx[j]]
            dz += oz[idx[j]]
        before = oy[u] != oz[u]
        yi = 1 if U[k, 1] < _incl_prob(lam, omz, dy) else 0
        zi = 1 if U[k, 1] < _incl_prob(lam, omz, dz) else 0
        oy[u] = yi
        oz[u] = zi
        dist += (1 if yi != zi else 0) - (1 if before else 0)
        trace[k + 1] += dist
    return dist


@nb.njit(cache=True, nogil=True)
def _domination_kernel(adj, nbr, deg, pos, big, pu, pv, lam, omz, p, U, counters):
    """mu-chain and G(n,p)-chain sharing uniforms.

    counters = [current violations, steps with a violation].
    """
    npairs = pu.size
    for k in range(U.shape[0]):
        e = int(U[k, 0] * npairs)
        if e >= npairs:
            e = npairs - 1
        u = pu[e]
        v = pv[e]
        before = 1 if (adj[u, v] == 1 and big[u, v] == 0) else 0
        d = _codeg(adj, nbr, deg, u, v)
        inc = U[k, 1] < _incl_prob(lam, omz, d)
        if inc and adj[u, v] == 0:
            _add_edge(adj, nbr, deg, pos, u, v)
        elif (not inc) and adj[u, v] == 1:
            _remove_edge(adj, nbr, deg, pos, u, v)
        b = 1 if U[k, 1] < p else 0
        big[u, v] = b
        big[v, u] = b
        after = 1 if (adj[u, v] == 1 and big[u, v] == 0) else 0
        counters[0] += after - before
        if counters[0] > 0:
            counters[1] += 1


# --- state ----------------------------------------------------------------

def _all_pairs(n: int):
    iu, ju = np.triu_indices(n, 1)
    return iu.astype(np.int64), ju.astype(np.int64)


def _csr(H: Graph):
    ptr = np.zeros(H.n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(H.degree)
    idx = np.empty(int(ptr[-1]), dtype=np.int64)
    for u in range(H.n):
        idx[ptr[u]:ptr[u + 1]] = sorted(H.adj[u])
    return ptr, idx


@dataclass
class ChainState:
    """Current configuration of one chain plus its random stream.

    For the edge model the configuration is an adjacency structure; for the
    vertex model it is an occupancy vector over the host graph.
    """

    kind: str
    params: GibbsParams
    rng: np.random.Generator
    step_index: int = 0
    arrays: dict = field(default_factory=dict)
    host: Optional[Graph] = None

    @classmethod
    def for_graph(
        cls,
        params: GibbsParams,
        rng: np.random.Generator,
        init: Optional[Graph] = None,
        pairs: Optional[Sequence[tuple]] = None,
    ) -> "ChainState":
        n = params.n
        if pairs is None:
            pu, pv = _all_pairs(n)
        else:
            arr = np.array(sorted((min(a, b), max(a, b)) for a, b in pairs), dtype=np.int64).reshape(-1, 2)
            pu, pv = arr[:, 0].copy(), arr[:, 1].copy()
        if pu.size == 0:
            raise ValueError("the edge chain needs at least one pair")
        adj = np.zeros((n, n), dtype=np.uint8)
        nbr = np.zeros((n, max(1, n - 1)), dtype=np.int64)
        deg = np.zeros(n, dtype=np.int64)
        pos = np.zeros((n, n), dtype=np.int64)
        counters = np.zeros(3, dtype=np.int64)
        state = cls("mu", params, rng, arrays=dict(adj=adj, nbr=nbr, deg=deg, pos=pos, pu=pu, pv=pv, counters=counters))
        if init is not None:
            if init.n != n:
                raise ValueError("initial graph has the wrong number of vertices")
            for u, v in init.edges():
                _add_edge(adj, nbr, deg, pos, u, v)
            counters[0] = init.edge_count
            counters[1] = init.triangle_count
            counters[2] = init.triangle_count
        return state

    @classmethod
    def for_subset(
        cls,
        host: Graph,
        params: GibbsParams,
        rng: np.random.Generator,
        init: Iterable[int] = (),
    ) -> "ChainState":
        if host.n == 0:
            raise ValueError("host graph must have vertices")
        ptr, idx = _csr(host)
        occ = np.zeros(host.n, dtype=np.int64)
        cnt = np.zeros(host.n, dtype=np.int64)
        counters = np.zeros(3, dtype=np.int64)
        s = sorted(set(init))
        for u in s:
            occ[u] = 1
        for u in s:
            for w in host.adj[u]:
                cnt[w] += 1
        counters[0] = len(s)
        counters[1] = counters[2] = host.induced_edge_count(s)
        return cls("nu", params, rng, arrays=dict(ptr=ptr, idx=idx, occ=occ, cnt=cnt, counters=counters), host=host)

    @property
    def sites(self) -> int:
        return self.arrays["pu"].size if self.kind == "mu" else self.host.n

    @property
    def counters(self) -> tuple:
        c = self.arrays["counters"]
        return int(c[0]), int(c[1])

    def graph(self) -> Graph:
        if self.kind != "mu":
            raise TypeError("vertex-model state has no graph")
        return Graph.from_adjacency(self.arrays["adj"])

    def subset(self) -> List[int]:
        if self.kind != "nu":
            raise TypeError("edge-model state has no vertex subset")
        return np.nonzero(self.arrays["occ"])[0].tolist()

    def advance(self, steps: int, stride: int = 0, out: Optional[np.ndarray] = None, tag: int = 0) -> int:
        """Run `steps` updates, recording every `stride` steps into `out`. Returns rows written."""
        a = self.arrays
        lam, omz = float(self.params.lam), 1.0 - float(self.params.zeta)
        written = 0
        remaining = int(steps)
        dummy = np.zeros((1, 5), dtype=np.int64)
        while remaining > 0:
            if stride > 0:
                # blocks are whole multiples of the recording stride
                block = min(remaining, stride * max(1, _CHUNK // stride))
            else:
                block = min(remaining, _CHUNK)
            U = self.rng.random((block, 2))
            target = out[written:] if (stride > 0 and out is not None) else dummy
            s = stride if stride > 0 else 0
            if self.kind == "mu":
                written += _mu_kernel(a["adj"], a["nbr"], a["deg"], a["pos"], a["pu"], a["pv"],
                                      lam, omz, U, a["counters"], s, target, tag)
            else:
                written += _nu_kernel(a["ptr"], a["idx"], a["occ"], a["cnt"], lam, omz, U, a["counters"], s, target)
            remaining -= block
        self.step_index += int(steps)
        return written


def steps_per_sweep(state: ChainState) -> int:
    return state.sites


def default_burn_in(kind: str, size: int) -> int:
    """20 n^2 ln n steps for the edge chain, 20 n ln n for the vertex chain."""
    if size < 2:
        return 0
    if kind == "mu":
        return int(math.ceil(20 * size * size * math.log(size)))
    return int(math.ceil(20 * size * math.log(size)))


def step_mu(state: ChainState) -> ChainState:
    """One edge-model update; draws exactly two uniforms."""
    if state.kind != "mu":
        raise TypeError("step_mu needs an edge-model state")
    a = state.arrays
    U = state.rng.random(2).reshape(1, 2)
    _mu_kernel(a["adj"], a["nbr"], a["deg"], a["pos"], a["pu"], a["pv"], float(state.params.lam),
               1.0 - float(state.params.zeta), U, a["counters"], 0, np.zeros((1, 5), dtype=np.int64), 0)
    state.step_index += 1
    return state


def step_nu(state: ChainState) -> ChainState:
    """One vertex-model update; draws exactly two uniforms."""
    if state.kind != "nu":
        raise TypeError("step_nu needs a vertex-model state")
    a = state.arrays
    U = state.rng.random(2).reshape(1, 2)
    _nu_kernel(a["ptr"], a["idx"], a["occ"], a["cnt"], float(state.params.lam),
               1.0 - float(state.params.zeta), U, a["counters"], 0, np.zeros((1, 2), dtype=np.int64))
    state.step_index += 1
    return state


# --- runs -----------------------------------------------------------------

def _validate_budget(sweeps: int, thin: int, burn_in: Optional[int]) -> None:
    if sweeps < 1:
        raise ValueError(f"sweeps must be >= 1, got {sweeps}")
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    if thin > sweeps:
        raise ValueError(f"thin ({thin}) exceeds sweeps ({sweeps}); no measurement would be recorded")
    if burn_in is not None and burn_in < 0:
        raise ValueError("burn-in must be nonnegative")


def run_chain(
    init,
    params: GibbsParams,
    sweeps: int,
    thin: int = 1,
    observables: Optional[Sequence[str]] = None,
    seed: int = 0,
    chain: int = 0,
    burn_in: Optional[int] = None,
    host: Optional[Graph] = None,
    pairs: Optional[Sequence[tuple]] = None,
    tag_vertex: int = 0,
    batches: int = DEFAULT_BATCHES,
    stream_tag: str = "glauber",
    grid: int = 0,
) -> RunRecord:
    """Seeded Glauber run with burn-in, recording observables every `thin` sweeps.

    Parameters
    ----------
    init : Graph, "empty", "gnp", None, or an iterable of vertices
        Starting state. With ``host`` given the chain is the vertex model
        on that host and ``init`` is a vertex subset.
    sweeps : int
        Measurement sweeps after burn-in; a sweep is one step per site.
    burn_in : int, optional
        Burn-in in single steps; defaults to :func:`default_burn_in`.
    pairs : sequence of (u, v), optional
        Restrict the edge chain to these pairs (all others stay absent).
    """
    _validate_budget(sweeps, thin, burn_in)
    rng = stream(seed, stream_tag, chain, grid)
    if host is None:
        start = None
        if isinstance(init, Graph):
            start = init
        elif isinstance(init, str) and init == "gnp":
            start = Graph.gnp(params.n, params.p, rng)
        elif init not in (None, "empty"):
            raise ValueError(f"unsupported initial state {init!r}")
        state = ChainState.for_graph(params, rng, start, pairs)
        names = tuple(observables or MU_OBSERVABLES)
        allowed = MU_OBSERVABLES
        size = params.n
    else:
        state = ChainState.for_subset(host, params, rng, () if init in (None, "empty") else init)
        names = tuple(observables or NU_OBSERVABLES)
        allowed = NU_OBSERVABLES
        size = host.n
    bad = [o for o in names if o not in allowed]
    if bad:
        raise ValueError(f"unknown observables {bad}; choose from {allowed}")

    burn = default_burn_in(state.kind, size) if burn_in is None else int(burn_in)
    state.advance(burn)
    per_sweep = steps_per_sweep(state)
    n_rec = sweeps // thin
    out = np.zeros((n_rec, len(allowed)), dtype=np.int64)
    rows = state.advance(n_rec * thin * per_sweep, stride=thin * per_sweep, out=out, tag=tag_vertex)
    assert rows == n_rec

    series = {"sweep": [thin * (i + 1) for i in range(n_rec)]}
    summary = {}
    for name in names:
        col = out[:, allowed.index(name)]
        series[name] = col.tolist()
        mean, se = batch_means(col, batches)
        summary[name] = {"mean": mean, "stderr": se, "count": int(col.size)}
    summary["steps"] = {"burn_in": burn, "measured": n_rec * thin * per_sweep}
    summary["support"] = {"max_penalised": int(state.arrays["counters"][2])}
    config = {
        "model": state.kind,
        "params": params.to_dict(),
        "sweeps": sweeps,
        "thin": thin,
        "burn_in": burn,
        "seed": seed,
        "chain": chain,
        "grid": grid,
        "observables": list(names),
        "init": init if isinstance(init, str) or init is None else "custom",
        "restricted_pairs": None if pairs is None else len(pairs),
        "host_n": None if host is None else host.n,
    }
    return RunRecord(config=config, series=series, summary=summary).finish()


def run_chains(
    params: GibbsParams,
    chains: int,
    sweeps: int,
    workers: int = 1,
    **kwargs,
) -> List[RunRecord]:
    """Independent chains on streams (seed, tag, chain index); order of results is by chain index."""
    if chains < 1:
        raise ValueError("chains must be >= 1")
    init = kwargs.pop("init", None)

    def one(i):
        return run_chain(init, params, sweeps, chain=i, **kwargs)

    if workers <= 1:
        return [one(i) for i in range(chains)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(chains)))


# --- local conditioning ---------------------------------------------------

def _neighbourhood_law(H: Graph, v_label: int, lam: float, zeta: float) -> np.ndarray:
    """Law of d_G(v) given G - v = H, from whole-graph Gibbs weights."""
    m = H.n
    omz = 1.0 - zeta
    # graph on host vertices plus v appended as index m
    log_w = []
    sizes = []
    for mask in range(1 << m):
        G = Graph(m + 1, H.edges())
        for u in range(m):
            if mask >> u & 1:
                G.toggle(u, m)
        if G.triangle_count > 0 and omz == 0.0:
            continue
        lw = G.edge_count * math.log(lam)
        if G.triangle_count:
            lw += G.triangle_count * math.log(omz)
        log_w.append(lw)
        sizes.append(G.degree[m])
    log_w = np.array(log_w)
    w = np.exp(log_w - log_w.max())
    law = np.bincount(np.array(sizes), weights=w, minlength=m + 1)
    return law / law.sum()


def _subset_size_law(H: Graph, lam: float, zeta: float) -> np.ndarray:
    table = subset_count_table(H).astype(np.float64)
    s = np.arange(table.shape[0])[:, None]
    e = np.arange(table.shape[1])[None, :]
    omz = 1.0 - zeta
    if omz > 0:
        le = e * math.log(omz)
    else:
        le = np.where(e == 0, 0.0, -np.inf)
    lw = np.log(np.where(table > 0, table, 1.0)) + s * math.log(lam) + le
    lw = np.where(table > 0, lw, -np.inf)
    w = np.exp(lw - lw.max())
    law = w.sum(axis=1)
    return law / law.sum()


def local_conditioning_check(
    params: GibbsParams,
    v: int,
    samples: int,
    seed: int = 0,
    sweeps_between: int = 1,
) -> float:
    """Max total-variation gap between the conditional degree law of v and nu_{G-v}.

    Graphs are drawn from the edge chain; for each, both laws are computed
    exactly (2^{n-1} neighbourhoods), so the gap should vanish to rounding.
    """
    if params.n > 6:
        raise SizeError("local conditioning check limited to n <= 6")
    if params.lam <= 0:
        raise ValueError("lambda must be positive")
    if not 0 <= v < params.n:
        raise ValueError("vertex out of range")
    rng = stream(seed, "conditioning")
    state = ChainState.for_graph(params, rng)
    state.advance(default_burn_in("mu", params.n))
    others = [u for u in range(params.n) if u != v]
    relabel = {u: i for i, u in enumerate(others)}
    worst = 0.0
    for _ in range(samples):
        state.advance(sweeps_between * state.sites)
        G = state.graph()
        H = Graph(len(others), [(relabel[a], relabel[b]) for a, b in G.edges() if v not in (a, b)])
        a = _neighbourhood_law(H, v, params.lam, params.zeta)
        b = _subset_size_law(H, params.lam, params.zeta)
        worst = max(worst, 0.5 * float(np.abs(a - b).sum()))
    return worst


# --- coupling diagnostics -------------------------------------------------

@dataclass
class CouplingRecord:
    hamming_trace: List[float]
    slope_estimate: float
    xi: float
    theory_rate: float
    sites: int
    pairs: int
    horizon: int

    @property
    def contraction_rate(self) -> float:
        """Estimated per-step contraction, -slope."""
        return -self.slope_estimate

    def to_dict(self) -> dict:
        return {
            "slope_estimate": self.slope_estimate,
            "contraction_rate": self.contraction_rate,
            "xi": self.xi,
            "theory_rate": self.theory_rate,
            "sites": self.sites,
            "pairs": self.pairs,
            "horizon": self.horizon,
        }


def _fit_log_slope(trace: np.ndarray, floor: float) -> float:
    t = np.arange(trace.size, dtype=np.float64)
    mask = trace > floor
    if mask.sum() < 2:
        return -math.inf
    y = np.log(trace[mask])
    x = t[mask]
    x0 = x - x.mean()
    return float((x0 * (y - y.mean())).sum() / (x0 * x0).sum())


def contraction_estimate(
    params: GibbsParams,
    pairs: int,
    horizon: int,
    seed: int = 0,
    host: Optional[Graph] = None,
) -> CouplingRecord:
    """Coupled chains one site apart; log-linear fit of the mean Hamming distance.

    Starting states are taken from a stationary run of a reference chain;
    the partner differs in one uniformly chosen site. Both copies then use
    the same uniforms. For the edge model the reference rate is
    xi / C(n, 2) with xi = 1 - 2 zeta c^2; for the vertex model it is
    (1 - Delta lambda zeta) / |V(H)|.
    """
    if pairs < 1 or horizon < 1:
        raise ValueError("pairs and horizon must be positive")
    lam, omz = float(params.lam), 1.0 - float(params.zeta)
    rng = stream(seed, "coupling")
    trace = np.zeros(horizon + 1, dtype=np.float64)
    if host is None:
        xi = 1.0 - 2.0 * params.zeta * params.c**2
        ref = ChainState.for_graph(params, rng)
        sites = ref.sites
        theory = xi / sites
        if xi <= 0:
            warnings.warn(f"xi = {xi:.4g} <= 0: the contraction bound does not apply", RegimeWarning)
        ref.advance(default_burn_in("mu", params.n))
        pu, pv = ref.arrays["pu"], ref.arrays["pv"]
        for _ in range(pairs):
            ref.advance(sites)
            ay = ref.arrays["adj"].copy()
            az = ay.copy()
            e = min(int(rng.random() * sites), sites - 1)
            u, v = pu[e], pv[e]
            az[u, v] = az[v, u] = 1 - az[u, v]
            _coupled_mu(ay, az, pu, pv, lam, omz, rng.random((horizon, 2)), trace)
    else:
        delta = host.max_degree
        xi = 1.0 - delta * lam * params.zeta
        ref = ChainState.for_subset(host, params, rng)
        sites = host.n
        theory = xi / sites
        if xi <= 0:
            warnings.warn(f"1 - Delta lambda zeta = {xi:.4g} <= 0: the contraction bound does not apply", RegimeWarning)
        ref.advance(default_burn_in("nu", host.n))
        ptr, idx = ref.arrays["ptr"], ref.arrays["idx"]
        for _ in range(pairs):
            ref.advance(sites)
            oy = ref.arrays["occ"].copy()
            oz = oy.copy()
            u = min(int(rng.random() * sites), sites - 1)
            oz[u] = 1 - oz[u]
            _coupled_nu(ptr, idx, oy, oz, lam, omz, rng.random((horizon, 2)), trace)
    # coalesced pairs stop early; their distance stays 0, so the partial sums are exact
    mean = trace / pairs
    slope = _fit_log_slope(mean, floor=5.0 / pairs)
    return CouplingRecord(mean.tolist(), slope, xi, theory, sites, pairs, horizon)


def expected_one_step_distance(Y: Graph, Z: Graph, params: GibbsParams) -> float:
    """Exact E[d(Y', Z')] after one identically coupled edge step."""
    n = params.n
    pairs = list(itertools.combinations(range(n), 2))
    omz = 1.0 - params.zeta
    dist = sum(Y.has_edge(u, v) != Z.has_edge(u, v) for u, v in pairs)
    total = 0.0
    for u, v in pairs:
        py = _incl_prob(params.lam, omz, Y.codegree(u, v))
        pz = _incl_prob(params.lam, omz, Z.codegree(u, v))
        total += dist - (Y.has_edge(u, v) != Z.has_edge(u, v)) + abs(py - pz)
    return total / len(pairs)


# --- exact transition matrix ---------------------------------------------

def transition_matrix_mu(n: int, lam: float, zeta: float):
    """Full transition matrix of the edge chain and its Gibbs weights.

    States are edge bitmasks over the pairs in lexicographic order.

    Returns
    -------
    (P, pi) with P row-stochastic and pi the normalised Gibbs measure.
    """
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    if m > 10:
        raise SizeError("transition matrix limited to n <= 5")
    size = 1 << m
    P = np.zeros((size, size))
    weights = np.zeros(size)
    omz = 1.0 - zeta
    for s in range(size):
        G = Graph(n, [pairs[i] for i in range(m) if s >> i & 1])
        weights[s] = lam**G.edge_count * (omz**G.triangle_count if G.triangle_count else 1.0)
        for i, (u, v) in enumerate(pairs):
            q = _incl_prob(lam, omz, G.codegree(u, v))
            on, off = s | (1 << i), s & ~(1 << i)
            P[s, on] += q / m
            P[s, off] += (1.0 - q) / m
    return P, weights / weights.sum()


def domination_run(params: GibbsParams, steps: int, seed: int = 0) -> dict:
    """Edge chain for mu_{lambda,zeta} coupled to the zeta = 0 chain (stationary law G(n, p)).

    Both chains start empty and share every uniform; inclusion in the mu
    chain then implies inclusion in the product chain. Reports how many
    steps ended with the containment broken.
    """
    rng = stream(seed, "domination")
    state = ChainState.for_graph(params, rng)
    a = state.arrays
    big = np.zeros((params.n, params.n), dtype=np.uint8)
    counters = np.zeros(2, dtype=np.int64)
    remaining = int(steps)
    while remaining > 0:
        block = min(remaining, _CHUNK)
        _domination_kernel(a["adj"], a["nbr"], a["deg"], a["pos"], big, a["pu"], a["pv"],
                           float(params.lam), 1.0 - float(params.zeta), float(params.p),
                           rng.random((block, 2)), counters)
        remaining -= block
    contained = bool(np.all(a["adj"] <= big))
    return {
        "steps": int(steps),
        "violating_steps": int(counters[1]),
        "final_contained": contained,
        "edges_mu": int(a["adj"].sum() // 2),
        "edges_product": int(big.sum() // 2),
    }
