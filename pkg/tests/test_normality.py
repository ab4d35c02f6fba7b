import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlmc_clt.normality import (
    ks_statistic,
    normality_report,
    qq_points,
    sample_moments,
    std_normal_cdf,
    std_normal_quantile,
)


def plug_in(n):
    return std_normal_quantile((np.arange(1, n + 1) - 0.5) / n)


class TestCdf:
    def test_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_196(self):
        assert std_normal_cdf(1.96) == pytest.approx(0.975002104851779564, abs=1e-15)

    @pytest.mark.parametrize("x", [-8.0, -3.3, -1.0, 0.2, 2.5, 6.0])
    def test_against_mpmath(self, x):
        mpmath.mp.dps = 30
        assert abs(std_normal_cdf(x) - float(mpmath.ncdf(x))) < 1e-15

    @pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
    def test_symmetry(self, x):
        assert std_normal_cdf(x) + std_normal_cdf(-x) == pytest.approx(1.0, abs=1e-15)

    def test_vectorised(self):
        xs = np.linspace(-5, 5, 11)
        assert np.allclose(std_normal_cdf(xs), [std_normal_cdf(float(x)) for x in xs], rtol=0, atol=1e-16)


def test_quantile_round_trip():
    xs = np.linspace(-6, 6, 241)
    assert np.max(np.abs(std_normal_quantile(std_normal_cdf(xs)) - xs)) < 1e-8


def test_quantile_rejects_bounds():
    with pytest.raises(ValueError):
        std_normal_quantile(1.0)


class TestKs:
    def test_plug_in_ten(self):
        assert ks_statistic(plug_in(10)) == pytest.approx(0.05, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 7, 500, 2000])
    def test_plug_in_exact(self, n):
        assert ks_statistic(plug_in(n)) == pytest.approx(0.5 / n, abs=1e-12)

    def test_single_zero(self):
        assert ks_statistic([0.0]) == 0.5

    def test_far_tail(self):
        assert ks_statistic([10.0, 11.0, 12.0]) >= 0.999

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_statistic([])

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=50), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, xs, rnd):
        shuffled = list(xs)
        rnd.shuffle(shuffled)
        d = ks_statistic(xs)
        assert ks_statistic(shuffled) == d
        assert 0.0 <= d <= 1.0


class TestMoments:
    def test_pair(self):
        mean, var, skew, kurt = sample_moments([-1.0, 1.0])
        assert (mean, var, skew) == (0.0, 2.0, 0.0)
        assert kurt is None

    def test_symmetric_triple(self):
        assert sample_moments([-3.0, 0.0, 3.0])[2] == 0.0

    def test_normal_kurtosis(self):
        x = np.random.default_rng(12345).standard_normal(10**6)
        assert abs(sample_moments(x)[3]) <= 0.02

    @given(
        st.lists(st.floats(-100, 100), min_size=4, max_size=60).filter(lambda v: np.ptp(v) > 1e-3),
        st.floats(0.01, 100),
        st.floats(-100, 100),
    )
    def test_affine_laws(self, xs, a, b):
        m, v, s, k = sample_moments(xs)
        m2, v2, s2, k2 = sample_moments(a * np.asarray(xs) + b)
        assert m2 == pytest.approx(a * m + b, rel=1e-9, abs=1e-9)
        assert v2 == pytest.approx(a * a * v, rel=1e-9)
        assert s2 == pytest.approx(s, rel=1e-6, abs=1e-10)
        assert k2 == pytest.approx(k, rel=1e-6, abs=1e-10)


class TestQq:
    def test_plug_in_on_diagonal(self):
        pts = qq_points(plug_in(50))
        assert max(abs(a - b) for a, b in pts) < 1e-10

    def test_two_points(self):
        pts = qq_points([1.0, -1.0])
        q = float(mpmath.sqrt(2) * mpmath.erfinv(0.5))
        assert pts[0][0] == pytest.approx(-q, abs=1e-12)
        assert pts[1][0] == pytest.approx(q, abs=1e-12)
        assert [p[1] for p in pts] == [-1.0, 1.0]

    def test_sorted(self):
        pts = qq_points(np.random.default_rng(1).standard_normal(100))
        assert all(b[1] >= a[1] for a, b in zip(pts, pts[1:]))


def test_report_pass_flag():
    rep = normality_report(plug_in(600))
    assert rep.critical_value == pytest.approx(1.3581 / math.sqrt(600))
    assert rep.pass_5pct is (rep.ks_stat < rep.critical_value)
    assert rep.pass_5pct


def test_empty_report():
    assert normality_report([]).n == 0
