"""Rate constants, MLMC plan arithmetic and the CLT regime classifier.

All rates are natural-log rates per level: bias decays like ``exp(-alpha*l)``,
variance like ``exp(-beta*l)`` and cost grows like ``exp(gamma*l)``.  Code
that works with base-2 rates must convert with ``rate_nats = rate_bits * ln 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

# Equal-rate comparisons (beta == gamma, beta == 2 alpha) use this relative tolerance.
RATE_TOL = 1e-12

_DECIMAL_DIGITS = 50


class InadmissibleRatesError(ValueError):
    """Raised when a rate triplet violates positivity or min(beta, gamma) <= 2 alpha."""


@dataclass(frozen=True)
class RateTriplet:
    """Weak-error, variance and cost rates plus the bias constant."""

    alpha: float
    beta: float
    gamma: float
    c_alpha: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "c_alpha"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InadmissibleRatesError(
                    f"rate assumption violated: {name}={value!r} must be a positive finite number"
                )
        if min(self.beta, self.gamma) > 2 * self.alpha and not _close(
            min(self.beta, self.gamma), 2 * self.alpha
        ):
            raise InadmissibleRatesError(
                "rate assumption violated: min(beta, gamma) <= 2*alpha required, got "
                f"min({self.beta}, {self.gamma}) > 2*{self.alpha}"
            )

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "c_alpha": self.c_alpha}


@dataclass(frozen=True)
class LevelSchedule:
    """Exact per-level variances V_l and costs C_l for levels 0..L."""

    variances: tuple[float, ...]
    costs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if not self.variances:
            raise ValueError("schedule needs at least one level")
        if len(self.variances) != len(self.costs):
            raise ValueError("variances and costs must have the same length")
        if any(not (v >= 0 and math.isfinite(v)) for v in self.variances):
            raise ValueError("variances must be finite and nonnegative")
        if any(not (c > 0 and math.isfinite(c)) for c in self.costs):
            raise ValueError("costs must be finite and positive")

    @property
    def max_level(self) -> int:
        return len(self.variances) - 1

    @property
    def v0_positive(self) -> bool:
        return self.variances[0] > 0

    def __len__(self) -> int:
        return len(self.variances)


@dataclass(frozen=True)
class EstimatorPlan:
    epsilon: float
    L: int
    samples: tuple[int, ...]
    partial_sums: tuple[float, ...]
    total_samples: int
    predicted_variance: float
    schedule: LevelSchedule

    @property
    def variances(self) -> tuple[float, ...]:
        return self.schedule.variances

    @property
    def costs(self) -> tuple[float, ...]:
        return self.schedule.costs

    @property
    def total_cost(self) -> float:
        return math.fsum(m * c for m, c in zip(self.samples, self.costs))

    @property
    def degenerate(self) -> bool:
        return self.predicted_variance == 0

    def exact_predicted_variance(self) -> Fraction:
        """Sum of V_l / M_l in rational arithmetic (V_l taken as exact binary floats)."""
        return sum((Fraction(v) / m for v, m in zip(self.variances, self.samples)), Fraction(0))

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "L": self.L,
            "M": list(self.samples),
            "S": list(self.partial_sums),
            "V": list(self.variances),
            "C": list(self.costs),
            "n": self.total_samples,
            "predicted_variance": self.predicted_variance,
            "total_cost": self.total_cost,
        }


def num_levels(epsilon: float, rates: RateTriplet) -> int:
    """Number of levels ``max(ceil(log(c_alpha/eps)/alpha), 1)``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_DIGITS
        x = (Decimal(rates.c_alpha) / Decimal(epsilon)).ln() / Decimal(rates.alpha)
        # eps = c_alpha*exp(-alpha*k) rounded to a double lands within ~1e-16 of k
        nearest = x.to_integral_value()
        if abs(x - nearest) <= Decimal("1e-12") * max(Decimal(1), abs(nearest)):
            x = nearest
        return max(int(x.to_integral_value(rounding=ROUND_CEILING)), 1)


def level_sums(schedule: LevelSchedule) -> list[float]:
    """Partial sums S_k = sum_{l<=k} sqrt(V_l C_l)."""
    terms = [math.sqrt(v * c) for v, c in zip(schedule.variances, schedule.costs)]
    return [math.fsum(terms[: k + 1]) for k in range(len(terms))]


def sample_allocation(epsilon: float, schedule: LevelSchedule) -> list[int]:
    """Samples per level ``max(ceil(eps^-2 sqrt(V_l/C_l) S_L), 1)``.

    The argument of the ceiling is evaluated with 50 significant digits so
    that values sitting on an integer boundary are not pushed across it by
    double rounding.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_DIGITS
        V = [Decimal(v) for v in schedule.variances]
        C = [Decimal(c) for c in schedule.costs]
        s_total = sum(((v * c).sqrt() for v, c in zip(V, C)), Decimal(0))
        inv_eps2 = 1 / (Decimal(epsilon) * Decimal(epsilon))
        samples = []
        for v, c in zip(V, C):
            x = inv_eps2 * (v / c).sqrt() * s_total
            samples.append(max(int(x.to_integral_value(rounding=ROUND_CEILING)), 1))
    return samples


def plan_for_schedule(epsilon: float, schedule: LevelSchedule) -> EstimatorPlan:
    """Build a plan on a fixed schedule; L is the schedule's last level."""
    samples = sample_allocation(epsilon, schedule)
    partial = level_sums(schedule)
    exact = sum((Fraction(v) / m for v, m in zip(schedule.variances, samples)), Fraction(0))
    return EstimatorPlan(
        epsilon=float(epsilon),
        L=schedule.max_level,
        samples=tuple(samples),
        partial_sums=tuple(partial),
        total_samples=sum(samples),
        predicted_variance=float(exact),
        schedule=schedule,
    )


def make_plan(
    epsilon: float, rates: RateTriplet, schedule_for: Callable[[int], LevelSchedule]
) -> EstimatorPlan:
    """Assemble the MLMC plan for tolerance ``epsilon``.

    ``schedule_for(L)`` must return the exact schedule for levels ``0..L``.
    """
    L = num_levels(epsilon, rates)
    schedule = schedule_for(L)
    if schedule.max_level != L:
        raise ValueError(f"schedule provider returned {len(schedule)} levels, expected {L + 1}")
    return plan_for_schedule(epsilon, schedule)


def variance_ratio(plan: EstimatorPlan) -> float:
    """Var(A_ML) / eps^2, computed exactly and rounded once."""
    eps = Fraction(plan.epsilon)
    return float(plan.exact_predicted_variance() / (eps * eps))


class RegimeKind(str, Enum):
    CLT_ALWAYS = "CltAlways"
    BALANCED_CONDITIONAL = "BalancedConditional"
    GAMMA_DOMINANT_CONDITIONAL = "GammaDominantConditional"
    NOT_RELEVANT = "NotRelevant"
    INADMISSIBLE = "Inadmissible"


@dataclass(frozen=True)
class TailDescriptor:
    """Caller-supplied facts about the infinite sequences the classifier cannot decide.

    ``None`` means unknown.  ``upsilon`` is the candidate exponent in
    ``[beta, 2 alpha)`` for which ``liminf S_k exp((upsilon - gamma) k / 2) > 1``
    is claimed (``upsilon_condition``).
    """

    v0_positive: bool | None = True
    s_divergent: bool | None = None
    limcond: bool | None = None
    upsilon: float | None = None
    upsilon_condition: bool | None = None

    def as_dict(self) -> dict:
        return {
            "v0_positive": self.v0_positive,
            "s_divergent": self.s_divergent,
            "limcond": self.limcond,
            "upsilon": self.upsilon,
            "upsilon_condition": self.upsilon_condition,
        }


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    conditions: tuple[str, ...] = ()
    satisfied: bool | None = None
    notes: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "conditions": list(self.conditions),
            "satisfied": self.satisfied,
            "notes": list(self.notes),
        }


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=RATE_TOL, abs_tol=RATE_TOL)


def _all_true(flags: Sequence[bool | None]) -> bool | None:
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def classify_regime(
    rates: RateTriplet | Sequence[float], tail: TailDescriptor | None = None
) -> Regime:
    """Map (alpha, beta, gamma) and tail facts to the CLT regime.

    Accepts a raw ``(alpha, beta, gamma[, c_alpha])`` sequence so that
    inadmissible triplets are reported rather than raised.
    """
    if isinstance(rates, RateTriplet):
        alpha, beta, gamma = rates.alpha, rates.beta, rates.gamma
    else:
        alpha, beta, gamma = (float(x) for x in list(rates)[:3])
    tail = tail or TailDescriptor(v0_positive=None)

    if min(alpha, beta, gamma) <= 0 or (
        min(beta, gamma) > 2 * alpha and not _close(min(beta, gamma), 2 * alpha)
    ):
        return Regime(
            RegimeKind.INADMISSIBLE,
            ("alpha, beta, gamma > 0", "min(beta, gamma) <= 2*alpha"),
            satisfied=False,
        )

    v0 = "V_0 > 0"
    limcond = "limCond: 1{V_l>0} E[Z_l 1{Z_l > nu S_l^2 exp((2alpha-gamma)l)}] -> 0 for all nu > 0"
    if _close(beta, gamma):
        return Regime(
            RegimeKind.BALANCED_CONDITIONAL,
            (v0, "S_k -> infinity", limcond),
            satisfied=_all_true([tail.v0_positive, tail.s_divergent, tail.limcond]),
        )
    if beta > gamma:
        return Regime(RegimeKind.CLT_ALWAYS, (v0,), satisfied=_all_true([tail.v0_positive]))
    if _close(beta, 2 * alpha):
        return Regime(
            RegimeKind.NOT_RELEVANT,
            (),
            satisfied=None,
            notes=("gamma > beta = 2*alpha: M_L = O(1) cannot be excluded",),
        )
    upsilon_ok = tail.upsilon_condition
    if tail.upsilon is not None and not (beta <= tail.upsilon < 2 * alpha):
        upsilon_ok = False
    return Regime(
        RegimeKind.GAMMA_DOMINANT_CONDITIONAL,
        (v0, limcond, "exists upsilon in [beta, 2*alpha): liminf S_k exp((upsilon-gamma)k/2) > 1"),
        satisfied=_all_true([tail.v0_positive, tail.limcond, upsilon_ok]),
        notes=("liminf form adopted for the upsilon condition",),
    )
