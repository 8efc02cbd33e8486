"""Scalar special functions: principal Lambert-W, h(x) = x log x - x + 1, and
the Bernoulli relative entropy."""

from __future__ import annotations

import math

__all__ = [
    "DomainError",
    "lambert_w0",
    "entropy_h",
    "rel_entropy_ip",
]

_INV_E = math.exp(-1.0)
_BRANCH_SLACK = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _initial_guess(x: float) -> float:
    if x < -0.25:
        # series about the branch point in p = sqrt(2(ex + 1))
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if x < 3.0:
        # Pade-type guess, good on [-1/4, 3]
        return x * (1.0 + 4.0 / 3.0 * x) / (1.0 + 7.0 / 3.0 * x + 5.0 / 6.0 * x * x)
    lx = math.log(x)
    llx = math.log(lx)
    return lx - llx + llx / lx


def _bisect_w(x: float) -> float:
    lo, hi = -1.0, max(1.0, math.log(x + 1.0) + 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert-W function, the inverse of w e^w.

    Halley iteration from a branch-point / Pade / asymptotic seed; falls back
    to bisection if an iterate leaves [-1, inf).

    Parameters
    ----------
    x : float
        Argument, x >= -1/e. Values up to 1e-12 below -1/e are clamped.

    Returns
    -------
    float
        w >= -1 with w * exp(w) == x to about machine precision.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of NaN")
    if x < -_INV_E:
        if x < -_INV_E - _BRANCH_SLACK:
            raise DomainError(f"lambert_w0 undefined for x={x!r} < -1/e")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    if x + _INV_E < 1e-300:
        return -1.0

    w = _initial_guess(x)
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 <= 0.0:
            return _bisect_w(x)
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w_new = w - dw
        if not math.isfinite(w_new) or w_new < -1.0:
            return _bisect_w(x)
        w = w_new
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


def entropy_h(x: float) -> float:
    """h(x) = x log x - x + 1 with h(0) = 1.

    Uses the series sum_{k>=2} (-1)^k t^k / (k(k-1)) in t = x - 1 near x = 1,
    where the direct form cancels.
    """
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"entropy_h requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    t = x - 1.0
    if abs(t) < 0.1:
        total = 0.0
        term = -t  # (-t)^(k-1), advanced to (-t)^k inside the loop
        for k in range(2, 40):
            term *= -t
            contrib = term / (k * (k - 1))
            total += contrib
            if abs(contrib) < 1e-18 * max(total, 1e-300):
                break
        return total
    return x * math.log(x) - t


def rel_entropy_ip(q: float, p: float) -> float:
    """Bernoulli relative entropy i_p(q) = q log(q/p) + (1-q) log((1-q)/(1-p))."""
    q = float(q)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"rel_entropy_ip requires p in (0, 1), got {p!r}")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"rel_entropy_ip requires q in [0, 1], got {q!r}")
    out = 0.0
    if q > 0.0:
        out += q * math.log(q / p)
    if q < 1.0:
        out += (1.0 - q) * (math.log1p(-q) - math.log1p(-p))
    # rounding can leave a tiny negative value at q == p
    return max(out, 0.0)
