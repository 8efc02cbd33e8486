from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowertail.specfun import DomainError, entropy_h, lambert_w0, rel_entropy_ip


def _bisect_oracle(x: float) -> float:
    lo, hi = -1.0, 50.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _newton_oracle(x: float) -> float:
    w = 1.0
    for _ in range(100):
        w -= (w * math.exp(w) - x) / (math.exp(w) * (w + 1.0))
    return w


class TestLambertW:
    def test_trivial_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-15)
        assert lambert_w0(-1.0 / math.e) == pytest.approx(-1.0, abs=1e-7)

    def test_two_over_e_against_bisection(self):
        x = 2.0 / math.e
        assert lambert_w0(x) == pytest.approx(_bisect_oracle(x), abs=1e-13)
        assert lambert_w0(x) == pytest.approx(0.46305, abs=1e-5)

    def test_omega_constant_against_newton(self):
        assert lambert_w0(1.0) == pytest.approx(_newton_oracle(1.0), abs=1e-14)
        assert lambert_w0(1.0) == pytest.approx(0.567143, abs=1e-6)

    def test_matches_scipy(self):
        scipy_special = pytest.importorskip("scipy.special")
        xs = np.concatenate([np.linspace(-0.36, 5.0, 200), np.logspace(0, 6, 50)])
        for x in xs:
            assert lambert_w0(x) == pytest.approx(scipy_special.lambertw(x).real, rel=1e-12, abs=1e-14)

    def test_branch_clamp_and_domain(self):
        assert lambert_w0(-1.0 / math.e - 5e-13) == -1.0
        with pytest.raises(DomainError):
            lambert_w0(-1.0 / math.e - 1e-9)
        with pytest.raises(DomainError):
            lambert_w0(float("nan"))

    def test_monotone_on_grid(self):
        xs = np.concatenate([np.linspace(-1 / math.e + 1e-9, 10.0, 3000), np.logspace(1, 6, 500)])
        ws = [lambert_w0(x) for x in xs]
        assert all(b >= a for a, b in zip(ws, ws[1:]))

    @settings(max_examples=400, deadline=None)
    @given(st.floats(min_value=-1 / math.e + 1e-9, max_value=1e6))
    def test_residual_property(self, x):
        w = lambert_w0(x)
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))


class TestEntropyH:
    def test_trivial_points(self):
        assert entropy_h(1.0) == 0.0
        assert entropy_h(0.0) == 1.0

    def test_half(self):
        direct = 0.5 * math.log(0.5) - 0.5 + 1.0
        assert entropy_h(0.5) == pytest.approx(direct, rel=1e-14)
        assert entropy_h(0.5) == pytest.approx(0.153426, abs=1e-6)

    @pytest.mark.parametrize("x", [0.9, 0.95, 0.999, 1.0 + 1e-7, 1.05, 1.0999])
    def test_series_region_matches_high_precision(self, x):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        xm = mpmath.mpf(x)
        ref = float(xm * mpmath.log(xm) - xm + 1)
        assert entropy_h(x) == pytest.approx(ref, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            entropy_h(-0.1)

    @given(st.floats(min_value=0.0, max_value=50.0))
    def test_nonnegative(self, x):
        assert entropy_h(x) >= 0.0


class TestRelEntropy:
    def test_trivial(self):
        assert rel_entropy_ip(0.3, 0.3) == 0.0
        assert rel_entropy_ip(0.0, 0.5) == pytest.approx(math.log(2.0), rel=1e-15)

    def test_against_scipy_kl(self):
        stats = pytest.importorskip("scipy.stats")
        ref = stats.entropy([0.1, 0.9], [0.3, 0.7])
        assert rel_entropy_ip(0.1, 0.3) == pytest.approx(ref, rel=1e-12)
        assert rel_entropy_ip(0.1, 0.3) == pytest.approx(0.116322, abs=1e-6)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            rel_entropy_ip(0.2, p)

    @given(st.floats(0.0, 1.0), st.floats(1e-6, 1 - 1e-6))
    def test_nonnegative(self, q, p):
        assert rel_entropy_ip(q, p) >= 0.0

    @pytest.mark.parametrize("p", [0.05, 0.3, 0.7])
    def test_convex_in_q(self, p):
        h = 1e-3
        qs = np.linspace(h, 1 - h, 400)
        for q in qs[1:-1]:
            second = (rel_entropy_ip(q + h, p) - 2 * rel_entropy_ip(q, p) + rel_entropy_ip(q - h, p)) / h**2
            assert second >= -1e-8
