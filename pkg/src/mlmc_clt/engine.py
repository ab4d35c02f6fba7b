"""MLMC replications, normalisation and mergeable moment accumulation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .families import LevelFamily
from .rates import EstimatorPlan


def substream(seed: int, replication: int, level: int) -> np.random.Generator:
    """Philox generator keyed by (seed, replication, level).

    Sample ``i`` of a level is the ``i``-th draw of this stream, so every
    (replication, level, sample index) triple is fixed independently of how
    replications are scheduled.
    """
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(int(replication), int(level)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class MomentAccumulator:
    """Count, mean and central moment sums M2..M4, mergeable pairwise."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    def push(self, x: float) -> None:
        self.merge_in(MomentAccumulator(1, float(x)))

    @classmethod
    def from_values(cls, values) -> "MomentAccumulator":
        x = np.asarray(values, dtype=float)
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        d = x - mean
        return cls(int(x.size), mean, float(np.sum(d**2)), float(np.sum(d**3)), float(np.sum(d**4)))

    def merge_in(self, other: "MomentAccumulator") -> None:
        merged = merge_accumulators(self, other)
        self.count, self.mean, self.m2, self.m3, self.m4 = (
            merged.count, merged.mean, merged.m2, merged.m3, merged.m4)

    @property
    def variance(self) -> float:
        """Unbiased sample variance (nan below two samples)."""
        return self.m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def skewness(self) -> float:
        if self.count < 2 or self.m2 == 0:
            return math.nan
        return math.sqrt(self.count) * self.m3 / self.m2**1.5

    @property
    def excess_kurtosis(self) -> float:
        if self.count < 2 or self.m2 == 0:
            return math.nan
        return self.count * self.m4 / self.m2**2 - 3.0

    def as_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean, "m2": self.m2, "m3": self.m3, "m4": self.m4}


def merge_accumulators(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Combine two accumulators (Pebay's pairwise update for moments up to order four)."""
    if a.count == 0:
        return MomentAccumulator(b.count, b.mean, b.m2, b.m3, b.m4)
    if b.count == 0:
        return MomentAccumulator(a.count, a.mean, a.m2, a.m3, a.m4)
    na, nb = a.count, b.count
    n = na + nb
    delta = b.mean - a.mean
    d_n = delta / n
    mean = a.mean + nb * d_n
    m2 = a.m2 + b.m2 + delta * d_n * na * nb
    m3 = (a.m3 + b.m3 + delta * d_n * d_n * na * nb * (na - nb)
          + 3.0 * d_n * (na * b.m2 - nb * a.m2))
    m4 = (a.m4 + b.m4
          + delta * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
          + 6.0 * d_n * d_n * (na * na * b.m2 + nb * nb * a.m2)
          + 4.0 * d_n * (na * b.m3 - nb * a.m3))
    return MomentAccumulator(n, mean, m2, m3, m4)


@dataclass(frozen=True)
class ReplicationResult:
    estimate: float
    normalized: float
    total_cost: float
    replication_index: int
    seed: int


@dataclass
class ExperimentResult:
    replications: list[ReplicationResult]
    normalized: np.ndarray
    accumulator: MomentAccumulator
    degenerate: bool = False
    fine_mean: float = 0.0
    predicted_variance: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.replications])


def _check_plan(family: LevelFamily, plan: EstimatorPlan) -> None:
    if len(plan.samples) != plan.L + 1 or len(plan.variances) != plan.L + 1:
        raise ValueError("plan lengths are inconsistent")
    for level in (0, plan.L):
        if not math.isclose(family.delta_var(level), plan.variances[level], rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"plan variance at level {level} does not match the family")


def run_replication(family: LevelFamily, plan: EstimatorPlan, seed: int, index: int) -> ReplicationResult:
    """One realisation of A_ML = sum_l (1/M_l) sum_i Delta_l X^i."""
    _check_plan(family, plan)
    return _replicate(family, plan, seed, index)


def _replicate(family, plan, seed, index):
    centered = []
    means = []
    for level, m in enumerate(plan.samples):
        rng = substream(seed, index, level)
        centered.append(family.sample_centered_sum(level, m, rng) / m)
        means.append(family.delta_mean(level))
    deviation = math.fsum(centered)
    pv = plan.predicted_variance
    normalized = deviation / math.sqrt(pv) if pv > 0 else 0.0  # 0/0 = 0
    return ReplicationResult(
        estimate=math.fsum(means) + deviation,
        normalized=normalized,
        total_cost=plan.total_cost,
        replication_index=index,
        seed=seed,
    )


def run_experiment(
    family: LevelFamily, plan: EstimatorPlan, replications: int, seed: int, threads: int = 1
) -> ExperimentResult:
    """Run ``replications`` independent estimators; output does not depend on ``threads``."""
    if replications < 1:
        raise ValueError("need at least one replication")
    _check_plan(family, plan)
    indices = range(replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _replicate(family, plan, seed, i), indices))
    else:
        results = [_replicate(family, plan, seed, i) for i in indices]
    normalized = np.array([r.normalized for r in results])
    degenerate = plan.predicted_variance == 0
    return ExperimentResult(
        replications=results,
        normalized=normalized,
        accumulator=MomentAccumulator.from_values(normalized),
        degenerate=degenerate,
        fine_mean=family.fine_mean(plan.L),
        predicted_variance=plan.predicted_variance,
        notes=["predicted variance is zero; normalised values set to 0"] if degenerate else [],
    )
