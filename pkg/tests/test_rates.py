import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlmc_clt.rates import (
    EstimatorPlan,
    InadmissibleRatesError,
    LevelSchedule,
    RateTriplet,
    RegimeKind,
    TailDescriptor,
    classify_regime,
    level_sums,
    make_plan,
    num_levels,
    plan_for_schedule,
    sample_allocation,
    variance_ratio,
)


def geometric_schedule(beta, gamma, L, v0=1.0):
    return LevelSchedule(
        tuple(v0 * math.exp(-beta * l) for l in range(L + 1)),
        tuple(math.exp(gamma * l) for l in range(L + 1)),
    )


class TestRateTriplet:
    def test_rejects_nonpositive(self):
        with pytest.raises(InadmissibleRatesError):
            RateTriplet(0.0, 1.0, 1.0)
        with pytest.raises(InadmissibleRatesError):
            RateTriplet(1.0, 1.0, 1.0, c_alpha=-1.0)

    def test_rejects_min_beta_gamma_above_two_alpha(self):
        with pytest.raises(InadmissibleRatesError, match="min\\(beta, gamma\\) <= 2\\*alpha"):
            RateTriplet(0.1, 1.0, 1.0)

    def test_boundary_is_admissible(self):
        RateTriplet(1.0, 2.0, 3.0)


@pytest.mark.parametrize(
    "eps, c_alpha, alpha, expected",
    [(math.exp(-3), 1.0, 1.0, 3), (1.0, 2.0, 0.5, 2), (10.0, 1.0, 1.0, 1)],
)
def test_num_levels(eps, c_alpha, alpha, expected):
    assert num_levels(eps, RateTriplet(alpha, alpha, alpha, c_alpha)) == expected


def test_num_levels_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        num_levels(0.0, RateTriplet(1, 1, 1))


@pytest.mark.parametrize("k", range(1, 30))
def test_num_levels_at_exact_exponentials(k):
    assert num_levels(math.exp(-0.7 * k), RateTriplet(0.7, 0.7, 0.7, 1.0)) == k


@pytest.mark.parametrize(
    "V, C, S",
    [([1, 0.25, 0.0625], [1, 4, 16], [1, 2, 3]), ([1, 0, 1], [1, 1, 1], [1, 1, 2]), ([4], [9], [6])],
)
def test_level_sums(V, C, S):
    assert level_sums(LevelSchedule(V, C)) == pytest.approx(S, abs=1e-15)


@pytest.mark.parametrize(
    "eps, V, C, M",
    [(0.1, [1, 0.25], [1, 4], [200, 50]), (0.1, [1, 0], [1, 1], [100, 1]), (10, [1], [1], [1])],
)
def test_sample_allocation(eps, V, C, M):
    assert sample_allocation(eps, LevelSchedule(V, C)) == M


def test_plan_two_level_exact():
    plan = plan_for_schedule(0.1, LevelSchedule([1, 0.25], [1, 4]))
    assert plan.predicted_variance == pytest.approx(0.01, rel=1e-15)
    assert plan.total_samples == 250
    assert variance_ratio(plan) == pytest.approx(1.0, rel=1e-15)


def test_plan_single_level():
    plan = plan_for_schedule(0.3, LevelSchedule([1], [1]))
    assert plan.samples == (12,)
    assert plan.predicted_variance == pytest.approx(1 / 12, rel=1e-15)
    assert variance_ratio(plan) == pytest.approx((1 / 12) / 0.09, rel=1e-14)


def test_make_plan_uses_num_levels():
    rates = RateTriplet(1.0, 1.0, 0.5, 1.0)
    plan = make_plan(0.05, rates, lambda L: geometric_schedule(1.0, 0.5, L))
    assert plan.L == num_levels(0.05, rates)
    assert plan.total_samples == sum(plan.samples)
    assert isinstance(plan, EstimatorPlan)


def test_make_plan_rejects_wrong_length():
    with pytest.raises(ValueError):
        make_plan(0.05, RateTriplet(1, 1, 1), lambda L: geometric_schedule(1, 1, L + 1))


def test_zero_variance_everywhere_is_degenerate():
    plan = plan_for_schedule(0.1, LevelSchedule([0, 0], [1, 2]))
    assert plan.samples == (1, 1)
    assert plan.degenerate


schedules = st.integers(0, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(1e-8, 1e3), min_size=n + 1, max_size=n + 1),
        st.lists(st.floats(1e-3, 1e4), min_size=n + 1, max_size=n + 1),
    )
)


@settings(max_examples=200, deadline=None)
@given(schedules, st.floats(1e-3, 1.0))
def test_predicted_variance_never_exceeds_eps_squared(vc, eps):
    plan = plan_for_schedule(eps, LevelSchedule(*vc))
    assert plan.exact_predicted_variance() <= Fraction(eps) ** 2
    assert 0 < variance_ratio(plan) <= 1


@settings(max_examples=100, deadline=None)
@given(schedules, st.floats(1e-3, 1.0))
def test_halving_epsilon_never_decreases_samples(vc, eps):
    schedule = LevelSchedule(*vc)
    coarse = sample_allocation(eps, schedule)
    fine = sample_allocation(eps / 2, schedule)
    assert all(f >= c for f, c in zip(fine, coarse))


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=30), st.floats(1e-3, 1e3))
def test_level_sums_nondecreasing(V, c):
    S = level_sums(LevelSchedule(V, [c] * len(V)))
    assert all(b >= a for a, b in zip(S, S[1:]))


@pytest.mark.parametrize(
    "beta, gamma, growth",
    [
        (1.5, 0.5, lambda k: 1.0),
        (0.7, 0.7, lambda k: k),
        (0.3, 0.5, lambda k: math.exp((0.5 - 0.3) * k / 2)),
    ],
    ids=["bounded", "linear", "exponential"],
)
def test_partial_sum_asymptotics(beta, gamma, growth):
    S = level_sums(geometric_schedule(beta, gamma, 80))
    n20, n40, n80 = (S[k] / growth(k) for k in (20, 40, 80))
    assert abs(n80 / n40 - 1) < 0.05
    assert abs(n80 / n40 - 1) <= abs(n40 / n20 - 1) + 1e-12


class TestClassifier:
    def test_beta_above_gamma(self):
        assert classify_regime((1, 1.5, 1)).kind is RegimeKind.CLT_ALWAYS

    def test_balanced_partition(self):
        tail = TailDescriptor(v0_positive=True, s_divergent=True, limcond=True)
        regime = classify_regime((0.75, 0.5, 0.5), tail)
        assert regime.kind is RegimeKind.BALANCED_CONDITIONAL
        assert regime.satisfied is True

    def test_not_relevant(self):
        assert classify_regime((1, 2, 3)).kind is RegimeKind.NOT_RELEVANT

    def test_inadmissible(self):
        assert classify_regime((0.1, 1, 1)).kind is RegimeKind.INADMISSIBLE

    def test_gamma_dominant_conditions(self):
        regime = classify_regime(RateTriplet(1, 1, 1.5))
        assert regime.kind is RegimeKind.GAMMA_DOMINANT_CONDITIONAL
        assert regime.satisfied is None
        assert len(regime.conditions) == 3

    def test_upsilon_outside_range_fails(self):
        tail = TailDescriptor(limcond=True, upsilon=2.5, upsilon_condition=True)
        assert classify_regime((1, 1, 1.5), tail).satisfied is False

    @given(
        st.booleans() | st.none(),
        st.booleans() | st.none(),
        st.floats(0, 10) | st.none(),
        st.booleans() | st.none(),
    )
    def test_tail_fields_irrelevant_when_beta_dominates(self, s_div, limcond, upsilon, ups_ok):
        tail = TailDescriptor(True, s_div, limcond, upsilon, ups_ok)
        assert classify_regime((1, 1.5, 1), tail) == classify_regime((1, 1.5, 1), TailDescriptor(True))
