"""Analytic CLT diagnostics: Lindeberg sums, the limit condition, UI probes,
variance-ratio sweeps and the failure witness for the heavy family."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .families import HeavyFailureFamily, LevelFamily
from .rates import EstimatorPlan, Regime, classify_regime, level_sums, num_levels, variance_ratio


@dataclass(frozen=True)
class LevelTerm:
    level: int
    weight: float
    threshold: float
    tail: float

    def as_dict(self) -> dict:
        return {"level": self.level, "weight": self.weight,
                "threshold": _finite(self.threshold), "tail": self.tail}


@dataclass(frozen=True)
class LindebergReport:
    epsilon: float
    nu: float
    terms: tuple[LevelTerm, ...]
    total: float

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "nu": self.nu, "total": self.total,
                "terms": [t.as_dict() for t in self.terms]}


def _finite(x: float):
    return x if math.isfinite(x) else None


def lindeberg_sum(family: LevelFamily, plan: EstimatorPlan, nu: float) -> LindebergReport:
    """sum_l sqrt(V_l C_l)/S_L * E[Z_l 1{Z_l > eps^2 M_l^2 nu / V_l}] over levels with V_l > 0."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    eps2 = plan.epsilon**2
    s_total = plan.partial_sums[-1]
    terms = []
    for level, (v, c, m) in enumerate(zip(plan.variances, plan.costs, plan.samples)):
        if v == 0:
            continue
        weight = math.sqrt(v * c) / s_total
        threshold = eps2 * m * m * nu / v
        terms.append(LevelTerm(level, weight, threshold, family.lindeberg_tail(level, threshold)))
    total = math.fsum(t.weight * t.tail for t in terms)
    return LindebergReport(plan.epsilon, nu, tuple(terms), total)


def lim_cond_term(family: LevelFamily, level: int, nu: float) -> float:
    """1{V_l > 0} E[Z_l 1{Z_l > nu S_l^2 exp((2 alpha - gamma) l)}]."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    if family.delta_var(level) == 0:
        return 0.0
    rates = family.rates()
    s_l = level_sums(family.schedule(level))[-1]
    log_t = math.log(nu) + 2 * math.log(s_l) + (2 * rates.alpha - rates.gamma) * level
    threshold = math.exp(log_t) if log_t < 700 else math.inf
    return family.lindeberg_tail(level, threshold)


def ui_probe(family: LevelFamily, x: float, max_level: int) -> list[float]:
    """Tail values E[Z_l 1{Z_l > x}] for l = 0..max_level."""
    if not x > 1:
        raise ValueError("probe threshold must exceed 1")
    return [family.lindeberg_tail(level, x) if family.delta_var(level) > 0 else 0.0
            for level in range(max_level + 1)]


def ui_verdict(values, tol: float = 1e-6) -> str:
    """Classify a probe sequence.

    A finite probe can only refute uniform integrability.  Returns
    ``"non-ui"`` when the tail grows and stays away from zero,
    ``"ui-consistent"`` when it has decayed below ``tol``, and
    ``"indeterminate"`` otherwise (including constant positive tails).
    """
    values = list(values)
    if not values:
        return "indeterminate"
    last = values[-1]
    if last <= tol:
        return "ui-consistent"
    half = values[len(values) // 2:]
    growing = all(b >= a - tol for a, b in zip(half, half[1:]))
    if growing and last > values[0] + tol and last >= 0.5 * max(values):
        return "non-ui"
    return "indeterminate"


def variance_ratio_sweep(family: LevelFamily, epsilons, rates=None) -> list[tuple[float, float]]:
    grid = [float(e) for e in epsilons]
    if any(e <= 0 for e in grid):
        raise ValueError("epsilon grid must be positive")
    return [(e, variance_ratio(family.plan(e, rates))) for e in grid]


def epsilon_grid(start: float = 1e-1, stop: float = 1e-3, factor: float = 10.0) -> list[float]:
    """Geometric grid from ``start`` down to ``stop`` inclusive."""
    n = int(round(math.log(start / stop) / math.log(factor)))
    return [start / factor**k for k in range(n + 1)]


@dataclass(frozen=True)
class WitnessRow:
    level: int
    epsilon: float
    last_samples: int
    last_share: float
    lindeberg_total: float

    def as_dict(self) -> dict:
        return {"level": self.level, "epsilon": self.epsilon, "M_L": self.last_samples,
                "last_level_share": self.last_share, "lindeberg_total": self.lindeberg_total}


@dataclass(frozen=True)
class FailureWitness:
    rows: tuple[WitnessRow, ...]
    nu: float
    sample_bound: int
    min_share: float
    min_total: float

    @property
    def witnessed(self) -> bool:
        return all(r.last_samples <= self.sample_bound and r.last_share >= self.min_share
                   and r.lindeberg_total >= self.min_total for r in self.rows)

    def as_dict(self) -> dict:
        return {"nu": self.nu, "sample_bound": self.sample_bound, "min_share": self.min_share,
                "min_total": self.min_total, "witnessed": self.witnessed,
                "rows": [r.as_dict() for r in self.rows]}


def epsilon_for_level(family: LevelFamily, level: int) -> float:
    """A tolerance with L(eps) = ``level`` that keeps M_L = 1 with the largest last-level share.

    M_L = ceil(K y) with K = S_L / sqrt(V_L C_L) and y = V_L / eps^2, so the
    largest admissible y is 1/K.  The result is clipped into the bracket
    (c e^{-alpha L}, c e^{-alpha (L-1)}] that maps to ``level``.
    """
    rates = family.rates()
    sched = family.schedule(level)
    v, c = sched.variances[-1], sched.costs[-1]
    k = level_sums(sched)[-1] / math.sqrt(v * c)
    eps = math.sqrt(v * k) * (1 + 1e-9)
    lo = rates.c_alpha * math.exp(-rates.alpha * level) * (1 + 1e-9)
    hi = rates.c_alpha * math.exp(-rates.alpha * (level - 1)) * (1 - 1e-9)
    eps = min(max(eps, lo), hi)
    if num_levels(eps, rates) != level:
        raise ValueError(f"no tolerance maps to level {level}")
    return eps


def failure_witness(
    family: HeavyFailureFamily,
    levels=range(8, 17),
    nu: float = 0.25,
    sample_bound: int = 10,
    min_share: float = 0.2,
    min_total: float = 0.1,
) -> FailureWitness:
    """Last-level sample count, variance share and Lindeberg sum across target levels."""
    if not isinstance(family, HeavyFailureFamily) or not family.gamma > 2 * family.alpha:
        raise ValueError("failure witness needs a heavy family with gamma > 2*alpha")
    rows = []
    for level in levels:
        eps = epsilon_for_level(family, level)
        plan = family.plan(eps)
        share = plan.variances[-1] / (plan.samples[-1] * plan.predicted_variance)
        rows.append(WitnessRow(level, eps, plan.samples[-1], share,
                               lindeberg_sum(family, plan, nu).total))
    return FailureWitness(tuple(rows), nu, sample_bound, min_share, min_total)


@dataclass
class DiagnosticsReport:
    family: dict
    regime: Regime
    lindeberg: list[LindebergReport]
    limcond: dict[float, list[float]]
    ui_x: float
    ui_values: list[float]
    ui_verdict: str
    variance_ratios: list[tuple[float, float]]
    witness: FailureWitness | None = None

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "regime": self.regime.as_dict(),
            "lindeberg": [r.as_dict() for r in self.lindeberg],
            "limcond": [{"nu": nu, "terms": terms} for nu, terms in self.limcond.items()],
            "ui_probe": {"x": self.ui_x, "values": self.ui_values, "verdict": self.ui_verdict},
            "variance_ratios": [{"epsilon": e, "ratio": r} for e, r in self.variance_ratios],
            "failure_witness": self.witness.as_dict() if self.witness else None,
        }


def diagnose(
    family: LevelFamily,
    epsilons,
    nus=(0.25, 1.0, 4.0),
    rates=None,
    ui_x: float = 2.0,
    max_level: int = 40,
    witness_levels=range(8, 17),
) -> DiagnosticsReport:
    rates = rates or family.rates()
    lindeberg = []
    for eps in epsilons:
        plan = family.plan(eps, rates)
        lindeberg.extend(lindeberg_sum(family, plan, nu) for nu in nus)
    limcond = {nu: [lim_cond_term(family, level, nu) for level in range(max_level + 1)] for nu in nus}
    probe = ui_probe(family, ui_x, max_level)
    witness = failure_witness(family, witness_levels) if isinstance(family, HeavyFailureFamily) else None
    return DiagnosticsReport(
        family=family.describe(),
        regime=classify_regime(rates, family.tail_descriptor()),
        lindeberg=lindeberg,
        limcond=limcond,
        ui_x=ui_x,
        ui_values=probe,
        ui_verdict=ui_verdict(probe),
        variance_ratios=variance_ratio_sweep(family, epsilons, rates),
        witness=witness,
    )
