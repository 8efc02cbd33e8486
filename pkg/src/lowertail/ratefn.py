"""Closed-form lower-tail rate functions and thresholds.

Parameterisation: p = c / sqrt(n) for G(n, p) and m = b n^{3/2} / 2 for
G(n, m). Rates are the coefficient of n^{3/2} in log P(X <= eta E X).

Most formulas are written through s = 2 zeta c^2 and the identity
W(s) / s = exp(-W(s)), which keeps the zeta -> 0 end (eta -> 1) free of 0/0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .specfun import entropy_h, lambert_w0, rel_entropy_ip

__all__ = [
    "ETA_LOWER",
    "Regime",
    "RegimeError",
    "NoCrossingError",
    "RateQuery",
    "RateResult",
    "eta_star",
    "c_bar",
    "zeta_lhs",
    "solve_zeta",
    "rate_gnp",
    "rate_trianglefree",
    "rate_gnm",
    "gnm_threshold_b",
    "gnm_regime",
    "poisson_bound",
    "replica_symmetric_bound",
    "replica_symmetric_limit",
    "conditional_edge_density_q",
    "q_coeff",
    "large_c_limit",
    "crossing_point",
    "two_block_bound",
    "two_block_optimum",
    "block_model_triangles",
    "evaluate",
]

# Threshold below which the two-block bound beats replica symmetry as
# c -> infinity. Quoted from the literature, not computed here.
ETA_LOWER = 0.0091


class Regime(str, enum.Enum):
    INSIDE_WINDOW = "inside_window"
    OUTSIDE_VALIDITY = "outside_validity"


class RegimeError(ValueError):
    """Requested quantity is only defined for c < c_bar(eta)."""


class NoCrossingError(RuntimeError):
    """No sign change between the rate formula and a lower bound."""


@dataclass(frozen=True)
class RateQuery:
    eta: float
    c: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if (self.c is None) == (self.b is None):
            raise ValueError("exactly one of c or b must be given")
        x = self.c if self.c is not None else self.b
        if not x > 0.0:
            raise ValueError("c (or b) must be positive")


@dataclass(frozen=True)
class RateResult:
    rate: float
    zeta: float
    q_coeff: float
    regime: Regime

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "zeta": self.zeta,
            "q_coeff": self.q_coeff,
            "regime": self.regime.value,
        }


def eta_star() -> float:
    """(W(2/e) / (2/e))^{3/2}, about 0.49928."""
    return math.exp(-1.5 * lambert_w0(2.0 / math.e))


def c_bar(eta: float) -> float:
    """Upper end of the c-window where the rate formula is proven."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    es = eta_star()
    if eta >= es:
        return math.inf
    return 1.0 / math.sqrt(math.e * (1.0 - eta / es))


def zeta_lhs(zeta: float, c: float) -> float:
    """(1 - zeta) (W(2 zeta c^2) / (2 zeta c^2))^{3/2}; equals 1 at zeta = 0."""
    return (1.0 - zeta) * math.exp(-1.5 * lambert_w0(2.0 * zeta * c * c))


def solve_zeta(c: float, eta: float) -> float:
    """Unique zeta in [0, 1] with zeta_lhs(zeta, c) == eta.

    The left side decreases from 1 to 0 on [0, 1], so plain bisection is
    run until the bracket stops shrinking in floating point.
    """
    if not c > 0.0:
        raise ValueError("c must be positive")
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    if eta == 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if zeta_lhs(mid, c) > eta:
            lo = mid
        else:
            hi = mid
    # pick the endpoint with the smaller residual
    if abs(zeta_lhs(lo, c) - eta) <= abs(zeta_lhs(hi, c) - eta):
        return lo
    return hi


def _regime(c: float, eta: float) -> Regime:
    return Regime.INSIDE_WINDOW if c < c_bar(eta) else Regime.OUTSIDE_VALIDITY


def q_coeff(c: float, zeta: float) -> float:
    """sqrt(W(2 zeta c^2) / (2 zeta)), the conditional edge density times sqrt(n)."""
    w = lambert_w0(2.0 * zeta * c * c)
    return c * math.exp(-0.5 * w)


def _log_z_coeff(c: float, zeta: float) -> float:
    # (W^{3/2} + 3 W^{1/2}) / (6 sqrt(2 zeta)) with W = W(2 zeta c^2)
    w = lambert_w0(2.0 * zeta * c * c)
    return c * math.exp(-0.5 * w) * (w + 3.0) / 6.0


def rate_gnp(c: float, eta: float) -> RateResult:
    """Lower-tail rate for G(n, c/sqrt(n)) and the associated zeta, q sqrt(n).

    For c >= c_bar(eta) the same analytic expression is returned with the
    regime flagged as outside validity.
    """
    zeta = solve_zeta(c, eta)
    tilt = 0.0
    if eta > 0.0:
        tilt = -math.log1p(-zeta) * eta * c**3 / 3.0
    rate = 0.5 * (2.0 * _log_z_coeff(c, zeta) + tilt - c)
    return RateResult(rate=rate, zeta=zeta, q_coeff=q_coeff(c, zeta), regime=_regime(c, eta))


def rate_trianglefree(c: float) -> float:
    """Rate of P(X = 0): (1/2)[(W^{3/2} + 3 W^{1/2}) / (3 sqrt 2) - c], W = W(2c^2)."""
    if not c > 0.0:
        raise ValueError("c must be positive")
    w = lambert_w0(2.0 * c * c)
    return 0.5 * ((w**1.5 + 3.0 * math.sqrt(w)) / (3.0 * math.sqrt(2.0)) - c)


def _poisson_factor(eta: float) -> float:
    if eta == 0.0:
        return 1.0
    return 1.0 - eta + eta * math.log(eta)


def rate_gnm(b: float, eta: float) -> float:
    """-(b^3/6)(1 - eta + eta log eta), the G(n, m) rate with m = b n^{3/2}/2."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    return -(b**3) / 6.0 * _poisson_factor(eta)


def gnm_regime(b: float, eta: float) -> Regime:
    return Regime.INSIDE_WINDOW if b < gnm_threshold_b(eta) else Regime.OUTSIDE_VALIDITY


def gnm_threshold_b(eta: float, tol: float = 1e-12) -> float:
    """Largest b for the G(n, m) formula: the root of b exp((1-eta) b^2) = c_bar(eta)."""
    target = c_bar(eta)
    if math.isinf(target):
        return math.inf
    g = lambda b: b * math.exp((1.0 - eta) * b * b) - target
    lo, hi = 0.0, target   # g(target) >= 0 since exp(...) >= 1
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def poisson_bound(c: float, eta: float) -> float:
    """-(c^3/6)(1 - eta + eta log eta)."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta}")
    return -(c**3) / 6.0 * _poisson_factor(eta)


def replica_symmetric_bound(n: int, p: float, eta: float) -> float:
    """Relative entropy of G(n, eta^{1/3} p) against G(n, p), summed over pairs.

    This is the (positive) cost; the corresponding lower bound on the
    log-probability is its negative.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    pairs = n * (n - 1) / 2.0
    q = eta ** (1.0 / 3.0) * p
    first = 0.0
    if eta > 0.0:
        first = p / 3.0 * eta ** (1.0 / 3.0) * math.log(eta)
    second = (1.0 - q) * (math.log1p(-q) - math.log1p(-p))
    return pairs * (first + second)


def replica_symmetric_limit(c: float, eta: float) -> float:
    """n^{-3/2} limit of replica_symmetric_bound at p = c/sqrt(n): (c/2) h(eta^{1/3})."""
    return 0.5 * c * entropy_h(eta ** (1.0 / 3.0))


def conditional_edge_density_q(c: float, eta: float, n: int) -> Tuple[float, float]:
    """Edge density of the lower-tail conditional graph.

    Returns
    -------
    (q, q_coeff) with q = q_coeff / sqrt(n).
    """
    if c >= c_bar(eta):
        raise RegimeError(f"c={c} is outside the window c < c_bar({eta}) = {c_bar(eta)}")
    coeff = q_coeff(c, solve_zeta(c, eta))
    return coeff / math.sqrt(n), coeff


def large_c_limit(eta: float) -> float:
    """lim_{c -> inf} rate_gnp(c, eta) / c = -h(eta^{1/3}) / 2."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return -0.5 * entropy_h(eta ** (1.0 / 3.0))


def crossing_point(
    eta: float,
    lower_bound: Callable[[float], float],
    bracket: Optional[Tuple[float, float]] = None,
    c_max: float = 50.0,
    step: float = 0.01,
    tol: float = 1e-6,
) -> float:
    """First c where rate_gnp(c, eta) drops to a lower bound on the rate.

    Without a bracket, c is scanned upward from c_bar(eta)/2 (or from
    `step` when c_bar is infinite) to c_max.
    """
    diff = lambda c: rate_gnp(c, eta).rate - lower_bound(c)
    if bracket is None:
        cb = c_bar(eta)
        start = cb / 2.0 if math.isfinite(cb) else step
        lo = start
        d_lo = diff(lo)
        found = None
        k = 1
        while True:
            hi = start + k * step
            if hi > c_max + 1e-12:
                break
            d_hi = diff(hi)
            if (d_lo > 0.0) != (d_hi > 0.0):
                found = (lo, hi)
                break
            lo, d_lo = hi, d_hi
            k += 1
        if found is None:
            raise NoCrossingError(f"no sign change for eta={eta} on ({start}, {c_max}]")
        lo, hi = found
    else:
        lo, hi = bracket
        if (diff(lo) > 0.0) == (diff(hi) > 0.0):
            raise NoCrossingError(f"bracket {bracket} does not straddle a crossing")
    d_lo = diff(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        d_mid = diff(mid)
        if (d_mid > 0.0) == (d_lo > 0.0):
            lo, d_lo = mid, d_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- two-block (bipartite-like) mean-field bound -------------------------

def _pairs(x: float) -> float:
    return x * (x - 1.0) / 2.0


def _triples(x: float) -> float:
    return x * (x - 1.0) * (x - 2.0) / 6.0


def block_model_triangles(n: int, a: float, q_in: float, q_out: float) -> float:
    """Expected triangles in a two-block model with blocks of size a n, (1-a) n."""
    n1 = a * n
    n2 = n - n1
    within = (_triples(n1) + _triples(n2)) * q_in**3
    mixed = (_pairs(n1) * n2 + _pairs(n2) * n1) * q_in * q_out**2
    return within + mixed


def _block_entropy(n: int, a: float, p: float, q_in: float, q_out: float) -> float:
    n1 = a * n
    n2 = n - n1
    return (_pairs(n1) + _pairs(n2)) * rel_entropy_ip(q_in, p) + n1 * n2 * rel_entropy_ip(q_out, p)


def _best_q_in(n: int, a: float, p: float, q_out: float, budget: float) -> Optional[float]:
    # entropy is convex in q_in with minimum at p, and the triangle count is
    # increasing in q_in, so the constrained optimum is min(p, root)
    if block_model_triangles(n, a, p, q_out) <= budget:
        return p
    if block_model_triangles(n, a, 0.0, q_out) > budget:
        return None
    lo, hi = 0.0, p
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if block_model_triangles(n, a, mid, q_out) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


def two_block_optimum(
    n: int,
    p: float,
    eta: float,
    grid: int = 50,
    iterations: int = 200,
) -> Tuple[float, dict]:
    """Minimum relative entropy over two-block models meeting the triangle target.

    The within-block probability is eliminated exactly (the constraint is
    active or q_in = p), leaving a search over the split fraction a in
    [0, 1/2] and the cross probability q_out in [0, p]: a grid seed followed
    by coordinate descent with shrinking steps.

    Returns
    -------
    (value, argmin) where argmin has keys a, q_in, q_out.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    budget = eta * _triples(n) * p**3
    budget *= 1.0 + 1e-12

    def objective(a: float, q_out: float):
        q_in = _best_q_in(n, a, p, q_out, budget)
        if q_in is None:
            return math.inf, None
        return _block_entropy(n, a, p, q_in, q_out), q_in

    # replica-symmetric point is always feasible
    q_rs = eta ** (1.0 / 3.0) * p
    best = (_block_entropy(n, 0.5, p, q_rs, q_rs), 0.5, q_rs, q_rs)
    for i in range(grid):
        a = 0.5 * i / (grid - 1)
        for j in range(grid):
            q_out = p * j / (grid - 1)
            val, q_in = objective(a, q_out)
            if val < best[0]:
                best = (val, a, q_in, q_out)

    val, a, q_in, q_out = best
    step_a, step_q = 0.5 / (grid - 1), p / (grid - 1)
    for _ in range(iterations):
        improved = False
        for da, dq in ((step_a, 0.0), (-step_a, 0.0), (0.0, step_q), (0.0, -step_q)):
            a2 = min(0.5, max(0.0, a + da))
            q2 = min(p, max(0.0, q_out + dq))
            v2, qi2 = objective(a2, q2)
            if v2 < val:
                val, a, q_in, q_out = v2, a2, qi2, q2
                improved = True
        if not improved:
            step_a *= 0.5
            step_q *= 0.5
            if step_a < 1e-12 and step_q < 1e-12 * p:
                break
    return val, {"a": a, "q_in": q_in, "q_out": q_out}


def two_block_bound(n: int, p: float, eta: float, grid: int = 50, iterations: int = 200) -> float:
    """Value of :func:`two_block_optimum`; never above the replica-symmetric cost."""
    return two_block_optimum(n, p, eta, grid, iterations)[0]


def evaluate(query: RateQuery) -> dict:
    """Rate record for the CLI: G(n, p) when c is given, G(n, m) when b is given."""
    if query.c is not None:
        return rate_gnp(query.c, query.eta).to_dict()
    b = query.b
    regime = gnm_regime(b, query.eta)
    # the G(n, m) formula comes from the G(n, p) one at c = b e^{(1-eta) b^2}
    c = b * math.exp((1.0 - query.eta) * b * b)
    zeta = 1.0 - query.eta
    return {
        "rate": rate_gnm(b, query.eta),
        "zeta": zeta,
        "q_coeff": q_coeff(c, zeta),
        "regime": regime.value,
    }
