"""Monte Carlo estimators checked against the closed-form predictions.

Densities of |G| and X(G) under mu_{lambda,zeta}, the degree fixed point
2 zeta b^2 = W(2 zeta c^2), log Z by thermodynamic integration, structural
observables of sampled graphs, and naive lower-tail simulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import ratefn
from .exact import GibbsParams
from .glauber import ChainState, default_burn_in, run_chains, steps_per_sweep
from .graphstore import Graph, cut_norm_deviation, max_cut_fraction
from .records import RunRecord
from .seeding import stream
from .specfun import lambert_w0
from .stats import DEFAULT_BATCHES, pooled_batch_means

__all__ = [
    "SmallNWarning",
    "DensityReport",
    "IntegrationResult",
    "StructureReport",
    "MomentCheck",
    "implied_eta",
    "predicted_degree_coeff",
    "estimate_densities",
    "fixed_point_residual",
    "thermodynamic_integration",
    "log_z_by_integration",
    "log_z_prediction",
    "sample_graphs",
    "structure_report",
    "mismatched_null_cutnorm",
    "lower_tail_mc",
    "gnm_triangle_moment",
]

SMALL_N = 50
ZETA_FLOOR = 1e-6


class SmallNWarning(UserWarning):
    """An asymptotic prediction was compared at a size where it is not meant to hold."""


def _w_over_2zeta(c: float, zeta: float) -> float:
    # W(2 zeta c^2)/(2 zeta), continuous at zeta = 0 where it equals c^2
    x = 2.0 * zeta * c * c
    if x < 1e-12:
        return c * c * (1.0 - x)
    return lambert_w0(x) / (2.0 * zeta)


def predicted_degree_coeff(c: float, zeta: float) -> float:
    """b with 2 zeta b^2 = W(2 zeta c^2): typical degree is b sqrt(n)."""
    return math.sqrt(_w_over_2zeta(c, zeta))


def implied_eta(c: float, zeta: float) -> float:
    """eta = (1 - zeta) exp(-1.5 W(2 zeta c^2)), the inverse of solve_zeta."""
    return ratefn.zeta_lhs(zeta, c)


@dataclass
class DensityReport:
    """Pooled chain estimates next to their predicted values."""

    mean_edges: float
    stderr_edges: float
    mean_triangles: float
    stderr_triangles: float
    mean_degree: float
    predicted_edges: float
    predicted_triangles: float
    predicted_degree_coeff: float
    n: int
    c: float
    zeta: float
    eta: float
    regime: str
    chains: int
    sweeps: int
    records: List[RunRecord] = field(default_factory=list, repr=False)

    @property
    def mean_degree_scaled(self) -> float:
        return self.mean_degree / math.sqrt(self.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("records")
        d["mean_degree_scaled"] = self.mean_degree_scaled
        return d


def estimate_densities(
    params: GibbsParams,
    chains: int,
    sweeps: int,
    seed: int = 0,
    thin: int = 1,
    burn_in: Optional[int] = None,
    workers: int = 1,
    batches: int = DEFAULT_BATCHES,
) -> DensityReport:
    """Run independent chains and compare E|G|, E X with the fixed-point predictions.

    The predictions are
    E|G| ~ (1/2) sqrt(W(2 zeta c^2)/(2 zeta)) n^{3/2} and
    E X ~ ((1 - zeta)/6) (W(2 zeta c^2)/(2 zeta))^{3/2} n^{3/2},
    with c = p sqrt(n). They are reported whatever the regime; ``regime``
    says whether c lies below c_bar(eta).
    """
    recs = run_chains(
        params, chains, sweeps, workers=workers, seed=seed, thin=thin, burn_in=burn_in,
        observables=("edges", "triangles", "maxdeg", "mindeg"), batches=batches, stream_tag="estimate",
    )
    me, se_e = pooled_batch_means([r.series["edges"] for r in recs], batches)
    mt, se_t = pooled_batch_means([r.series["triangles"] for r in recs], batches)
    n, c, zeta = params.n, params.c, params.zeta
    s = _w_over_2zeta(c, zeta)
    eta = implied_eta(c, zeta)
    regime = ratefn.Regime.INSIDE_WINDOW if c < ratefn.c_bar(eta) else ratefn.Regime.OUTSIDE_VALIDITY
    return DensityReport(
        mean_edges=me,
        stderr_edges=se_e,
        mean_triangles=mt,
        stderr_triangles=se_t,
        mean_degree=2.0 * me / n,
        predicted_edges=0.5 * math.sqrt(s) * n**1.5,
        predicted_triangles=(1.0 - zeta) / 6.0 * s**1.5 * n**1.5,
        predicted_degree_coeff=math.sqrt(s),
        n=n,
        c=c,
        zeta=zeta,
        eta=eta,
        regime=regime.value,
        chains=chains,
        sweeps=sweeps,
        records=recs,
    )


def fixed_point_residual(report: DensityReport, params: GibbsParams) -> float:
    """|2 zeta b^2 - W(2 zeta c^2)| / W(2 zeta c^2) with b = mean degree / sqrt(n)."""
    if params.zeta < ZETA_FLOOR:
        raise ValueError(f"fixed-point residual needs zeta >= {ZETA_FLOOR}")
    if params.n < SMALL_N:
        warnings.warn(f"asymptotic prediction, small-n (n={params.n})", SmallNWarning, stacklevel=2)
    w = lambert_w0(2.0 * params.zeta * params.c**2)
    b = report.mean_degree / math.sqrt(params.n)
    return abs(2.0 * params.zeta * b * b - w) / w


# --- thermodynamic integration --------------------------------------------

@dataclass
class IntegrationResult:
    log_Z: float
    error: float
    quadrature_error: float
    mc_stderr: float
    nodes: List[float]
    mean_edges: List[float]
    stderr_edges: List[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _grid(lam: float, points: int, span: float) -> np.ndarray:
    # 0, then `points` geometric nodes from lam/span up to lam
    return np.concatenate([[0.0], lam * span ** (-np.linspace(1.0, 0.0, points))])


def _trapezoid(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def thermodynamic_integration(
    n: int,
    c_target: float,
    zeta: float,
    grid: int = 16,
    chains: int = 2,
    seed: int = 0,
    sweeps: int = 1000,
    burn_in: Optional[int] = None,
    span: float = 64.0,
    workers: int = 1,
) -> IntegrationResult:
    """log Z(lambda, zeta) = C(n,2) log(1 + lambda) + int_0^lambda (E_theta|G| - C(n,2) theta/(1+theta)) / theta dtheta.

    The subtracted term is the zeta = 0 expectation, so the remaining
    integrand vanishes at theta = 0 (the analytic endpoint) and is zero
    everywhere when zeta = 0. The quadrature error is the Richardson
    estimate |T_h - T_2h| / 3 from the nested grid; the returned ``error``
    adds three Monte Carlo standard errors.
    """
    if grid < 8:
        raise ValueError("grid must have at least 8 points")
    if span <= 1.0:
        raise ValueError("span must exceed 1")
    lam = GibbsParams.from_c(n, c_target, zeta).lam
    pairs = n * (n - 1) // 2
    x = _grid(lam, grid, span)
    y = np.zeros_like(x)
    se = np.zeros_like(x)
    means = [0.0]
    ses = [0.0]
    for j, theta in enumerate(x[1:], start=1):
        base = pairs * theta / (1.0 + theta)
        if zeta == 0.0:
            m, s = base, 0.0
        else:
            recs = run_chains(GibbsParams(n, float(theta), zeta), chains, sweeps, workers=workers, seed=seed,
                              burn_in=burn_in, observables=("edges",), stream_tag="integration", grid=j)
            m, s = pooled_batch_means([r.series["edges"] for r in recs])
        means.append(m)
        ses.append(s)
        y[j] = (m - base) / theta
        se[j] = s / theta

    fine = _trapezoid(x, y)
    # coarse grid: the endpoint 0 plus every other geometric node ending at lam
    keep = np.concatenate([[0], np.arange(grid, 0, -2)[::-1]])
    coarse = _trapezoid(x[keep], y[keep])
    quad = abs(fine - coarse) / 3.0
    # trapezoid weights of each node for the MC error
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    mc = float(math.sqrt(np.sum((w * se) ** 2)))
    value = pairs * math.log1p(lam) + fine
    return IntegrationResult(
        log_Z=value,
        error=quad + 3.0 * mc,
        quadrature_error=quad,
        mc_stderr=mc,
        nodes=x.tolist(),
        mean_edges=means,
        stderr_edges=ses,
    )


def log_z_by_integration(
    n: int,
    c_target: float,
    zeta: float,
    grid: int = 16,
    chains: int = 2,
    seed: int = 0,
    **kwargs,
) -> Tuple[float, float]:
    """(log Z estimate, quadrature + Monte Carlo error budget)."""
    r = thermodynamic_integration(n, c_target, zeta, grid, chains, seed, **kwargs)
    return r.log_Z, r.error


def log_z_prediction(n: int, c: float, zeta: float) -> float:
    """n^{3/2} (W^{3/2} + 3 W^{1/2}) / (6 sqrt(2 zeta)) with W = W(2 zeta c^2)."""
    return n**1.5 * ratefn._log_z_coeff(c, zeta)


# --- structure ------------------------------------------------------------

class StructureReport(NamedTuple):
    maxcut: float
    cutnorm_norm: float
    degree_spread: float


def sample_graphs(
    params: GibbsParams,
    chains: int,
    sweeps: int,
    seed: int = 0,
    samples: int = 4,
    pairs: Optional[Sequence[tuple]] = None,
    burn_in: Optional[int] = None,
    stream_tag: str = "structure",
) -> List[Graph]:
    """Snapshots of each chain after burn-in, spaced sweeps // samples sweeps apart."""
    if samples < 1 or sweeps < samples:
        raise ValueError("need 1 <= samples <= sweeps")
    out = []
    for i in range(chains):
        state = ChainState.for_graph(params, stream(seed, stream_tag, i), None, pairs)
        state.advance(default_burn_in("mu", params.n) if burn_in is None else burn_in)
        gap = (sweeps // samples) * steps_per_sweep(state)
        for _ in range(samples):
            state.advance(gap)
            out.append(state.graph())
    return out


def _structure_of(graphs: Sequence[Graph], q: float, seed: int, restarts: int) -> StructureReport:
    n = graphs[0].n
    cuts, norms, spread = [], [], []
    for i, g in enumerate(graphs):
        cuts.append(max_cut_fraction(g, "local_search", restarts=restarts, seed=seed + i).maxcut_fraction)
        norms.append(cut_norm_deviation(g, q, "alternating", seed=seed + i) / (q * n * n))
        spread.append(g.max_degree - g.min_degree)
    return StructureReport(float(np.mean(cuts)), float(np.mean(norms)), float(np.mean(spread)))


def structure_report(
    params: GibbsParams,
    chains: int,
    sweeps: int,
    seed: int = 0,
    samples: int = 4,
    pairs: Optional[Sequence[tuple]] = None,
    q: Optional[float] = None,
    restarts: int = 8,
    burn_in: Optional[int] = None,
) -> StructureReport:
    """Averages of max-cut fraction, cut-norm deviation / (q n^2) and Delta - delta over sampled graphs.

    q defaults to the conditional edge density at (c, eta) with eta implied
    by zeta. ``pairs`` restricts the sampler (a test hook).
    """
    if params.n > 2000:
        raise ValueError("structure_report limited to n <= 2000")
    if q is None:
        q = ratefn.conditional_edge_density_q(params.c, implied_eta(params.c, params.zeta), params.n)[0]
    graphs = sample_graphs(params, chains, sweeps, seed, samples, pairs, burn_in)
    return _structure_of(graphs, q, seed, restarts)


def mismatched_null_cutnorm(n: int, q: float, samples: int, seed: int = 0) -> float:
    """Mean cut-norm deviation / (q n^2) from q of G(n, 2q) graphs."""
    rng = stream(seed, "null")
    vals = []
    for i in range(samples):
        g = Graph.gnp(n, 2.0 * q, rng)
        vals.append(cut_norm_deviation(g, q, "alternating", seed=seed + i) / (q * n * n))
    return float(np.mean(vals))


# --- direct simulation ----------------------------------------------------

def _triangle_counts(A: np.ndarray) -> np.ndarray:
    return np.einsum("bij,bij->b", A @ A, A) / 6.0


def lower_tail_mc(n: int, p: float, eta: float, trials: int, seed: int = 0) -> Tuple[float, float]:
    """Fraction of G(n, p) draws with X <= eta C(n,3) p^3, and its binomial standard error."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0.0 <= p <= 1.0 or eta < 0:
        raise ValueError("need p in [0, 1] and eta >= 0")
    threshold = eta * math.comb(n, 3) * p**3
    if threshold >= math.comb(n, 3):
        return 1.0, 0.0
    rng = stream(seed, "lower_tail")
    iu, ju = np.triu_indices(n, 1)
    batch = max(1, min(trials, 4_000_000 // max(1, n * n)))
    hits = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        A = np.zeros((b, n, n), dtype=np.float64)
        mask = rng.random((b, iu.size)) < p
        A[:, iu, ju] = mask
        A[:, ju, iu] = mask
        hits += int(np.count_nonzero(_triangle_counts(A) <= threshold + 1e-9))
        done += b
    est = hits / trials
    return est, math.sqrt(est * (1.0 - est) / trials)


class MomentCheck(NamedTuple):
    mean: float
    stderr: float
    prediction: float
    edges: int


def gnm_triangle_moment(n: int, b: float, samples: int, seed: int = 0) -> MomentCheck:
    """Mean triangle count of G(n, m) with m = b n^{3/2}/2 against b^3 n^{3/2}/6."""
    if samples < 2:
        raise ValueError("need at least two samples")
    pairs = n * (n - 1) // 2
    m = int(round(b * n**1.5 / 2.0))
    if not 0 <= m <= pairs:
        raise ValueError("edge count out of range")
    rng = stream(seed, "gnm")
    iu, ju = np.triu_indices(n, 1)
    counts = np.empty(samples)
    for s in range(samples):
        chosen = rng.choice(pairs, size=m, replace=False)
        A = np.zeros((1, n, n))
        A[0, iu[chosen], ju[chosen]] = 1.0
        A[0, ju[chosen], iu[chosen]] = 1.0
        counts[s] = _triangle_counts(A)[0]
    return MomentCheck(
        mean=float(counts.mean()),
        stderr=float(counts.std(ddof=1) / math.sqrt(samples)),
        prediction=b**3 * n**1.5 / 6.0,
        edges=m,
    )
