"""Level-coupled random-variable families with exactly known moments.

Every family exposes the increments ``Delta_l X = X_l - X_{l-1}`` through
``sample_delta`` and their exact mean, variance and cost.  The normalised
quadratic ``Z_l = |Delta_l X - E Delta_l X|^2 / V_l`` has a closed-form
truncated first moment ``E[Z_l 1{Z_l > t}]`` (``lindeberg_tail``) for all
built-in families; user families without one fall back to Monte Carlo.

Families never hold random state.  Callers pass a ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.special import erfc

from .rates import LevelSchedule, RateTriplet, TailDescriptor, make_plan

_CHUNK = 1 << 20


class LevelFamily(ABC):
    """Source of level increments with exact first and second moments."""

    name = "family"
    gamma: float

    @abstractmethod
    def rates(self) -> RateTriplet: ...

    @abstractmethod
    def delta_mean(self, level: int) -> float: ...

    @abstractmethod
    def delta_var(self, level: int) -> float: ...

    @abstractmethod
    def sample_delta(self, level: int, rng: np.random.Generator, size: int | None = None):
        """Draw i.i.d. realisations of Delta_l X from ``rng``."""

    def cost(self, level: int) -> float:
        return math.exp(self.gamma * level)

    def fine_mean(self, L: int) -> float:
        return math.fsum(self.delta_mean(level) for level in range(L + 1))

    def lindeberg_tail(self, level: int, t: float) -> float:
        value, _ = monte_carlo_tail(self, level, t)
        return value

    def tail_descriptor(self) -> TailDescriptor:
        return TailDescriptor(v0_positive=self.delta_var(0) > 0)

    def schedule(self, L: int) -> LevelSchedule:
        return LevelSchedule(
            tuple(self.delta_var(level) for level in range(L + 1)),
            tuple(self.cost(level) for level in range(L + 1)),
        )

    def plan(self, epsilon: float, rates: RateTriplet | None = None):
        return make_plan(epsilon, rates or self.rates(), self.schedule)

    def sample_centered_sum(self, level: int, m: int, rng: np.random.Generator) -> float:
        """Sum of ``m`` draws of Delta_l X - E[Delta_l X].

        The default draws in chunks and sums with ``math.fsum``.
        """
        mean = self.delta_mean(level)
        partial = []
        remaining = m
        while remaining > 0:
            n = min(remaining, _CHUNK)
            x = np.asarray(self.sample_delta(level, rng, n), dtype=float)
            partial.append(math.fsum(x - mean))
            remaining -= n
        return math.fsum(partial)

    def describe(self) -> dict:
        return {"kind": self.name}


def monte_carlo_tail(
    family: LevelFamily, level: int, t: float, n: int = 10**6, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of ``E[Z_l 1{Z_l > t}]`` and its standard error."""
    var = family.delta_var(level)
    if var == 0:
        return 0.0, 0.0
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(level,))))
    x = np.asarray(family.sample_delta(level, rng, n), dtype=float)
    z = (x - family.delta_mean(level)) ** 2 / var
    y = np.where(z > t, z, 0.0)
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(n))


def gaussian_lindeberg_tail(t: float) -> float:
    """``E[Z 1{Z > t}]`` for Z chi-square with one degree of freedom."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    r = math.sqrt(t)
    density = math.exp(-0.5 * t) / math.sqrt(2 * math.pi)
    return 2 * r * density + float(erfc(r / math.sqrt(2)))


def two_point_tail(q: float, t: float) -> float:
    """Truncated moment of Z for an increment that jumps with probability ``q``.

    Z equals ``(1-q)/q`` on the jump (probability q) and ``q/(1-q)`` off it.
    """
    if q <= 0 or q >= 1:
        return 0.0
    on, off = (1 - q) / q, q / (1 - q)
    return (1 - q) * (on > t) + q * (off > t)


class GaussianFamily(LevelFamily):
    """Delta_l X ~ Normal(mu0 exp(-alpha l), v0 exp(-beta l)); the UI reference family."""

    name = "gaussian"

    def __init__(self, alpha=1.0, beta=1.0, gamma=0.5, mu0=1.0, v0=1.0, c_alpha=None):
        if mu0 <= 0 or v0 <= 0:
            raise ValueError("mu0 and v0 must be positive")
        self.alpha, self.beta, self.gamma = float(alpha), float(beta), float(gamma)
        self.mu0, self.v0 = float(mu0), float(v0)
        if c_alpha is None:
            # |E[X - X_l]| = mu0 e^{-alpha(l+1)} / (1 - e^{-alpha})
            c_alpha = self.mu0 * math.exp(-self.alpha) / -math.expm1(-self.alpha)
        self._rates = RateTriplet(self.alpha, self.beta, self.gamma, float(c_alpha))

    def rates(self) -> RateTriplet:
        return self._rates

    def delta_mean(self, level):
        return self.mu0 * math.exp(-self.alpha * level)

    def delta_var(self, level):
        return self.v0 * math.exp(-self.beta * level)

    def sample_delta(self, level, rng, size=None):
        return rng.normal(self.delta_mean(level), math.sqrt(self.delta_var(level)), size)

    def lindeberg_tail(self, level, t):
        return gaussian_lindeberg_tail(t)

    def tail_descriptor(self):
        a, b, g = self.alpha, self.beta, self.gamma
        if math.isclose(b, g):
            limcond = True
        elif g < b:
            limcond = 2 * a > g and not math.isclose(2 * a, g)
        else:
            limcond = b < 2 * a
        upsilon = upsilon_ok = None
        if g > b and b < 2 * a:
            upsilon, upsilon_ok = 0.5 * (b + 2 * a), True
        return TailDescriptor(
            v0_positive=True,
            s_divergent=g >= b or math.isclose(b, g),
            limcond=limcond,
            upsilon=upsilon,
            upsilon_condition=upsilon_ok,
        )

    def describe(self):
        return {"kind": self.name, "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "mu0": self.mu0, "v0": self.v0, "c_alpha": self._rates.c_alpha}


class _TwoPointFamily(LevelFamily):
    """Increments a_l (1{B_l} - shift * q_l) with P(B_l) = q_l."""

    _centered = False

    def amplitude(self, level: int) -> float:
        raise NotImplementedError

    def jump_probability(self, level: int) -> float:
        raise NotImplementedError

    def delta_mean(self, level):
        if self._centered:
            return 0.0
        return self.amplitude(level) * self.jump_probability(level)

    def delta_var(self, level):
        q = self.jump_probability(level)
        return self.amplitude(level) ** 2 * q * (1 - q)

    def sample_delta(self, level, rng, size=None):
        a, q = self.amplitude(level), self.jump_probability(level)
        hit = rng.random(size) < q
        if self._centered:
            return a * (hit - q)
        return a * hit.astype(float) if size is not None else a * float(hit)

    def sample_centered_sum(self, level, m, rng):
        # the number of jumps among m i.i.d. draws is Binomial(m, q)
        a, q = self.amplitude(level), self.jump_probability(level)
        k = int(rng.binomial(m, q))
        return a * (k - m * q)

    def lindeberg_tail(self, level, t):
        return two_point_tail(self.jump_probability(level), t)


class PartitionFamily(_TwoPointFamily):
    """Disjoint events Omega_l with P = (1-p) p^l and increments exp(eta l) 1{Omega_l}.

    With the defaults (p = 1/e, eta = 1/4) the family has alpha = 3/4 and
    beta = 1/2 and the normalised quadratics Z_l are not uniformly integrable.
    """

    name = "partition"

    def __init__(self, p=math.exp(-1), eta=0.25, gamma=0.5):
        if not 0 < p < 1:
            raise ValueError("p must lie in (0, 1)")
        if eta <= 0:
            raise ValueError("eta must be positive")
        decay = -math.log(p)
        if eta >= decay:
            raise ValueError(f"eta={eta} >= -ln p={decay}: the bias series diverges")
        self.p, self.eta, self.gamma = float(p), float(eta), float(gamma)
        self._decay = decay
        self._ratio = math.exp(eta) * p  # a_k q_k ratio = exp(-alpha)
        self._rates = RateTriplet(decay - eta, decay - 2 * eta, self.gamma, self.bias(0))

    def rates(self):
        return self._rates

    def amplitude(self, level):
        return math.exp(self.eta * level)

    def jump_probability(self, level):
        return (1 - self.p) * self.p**level

    def moments(self, level: int) -> tuple[float, float]:
        """Exact ``(E[Delta_l X], Var[Delta_l X])``."""
        if level < 0:
            raise ValueError("level must be nonnegative")
        return self.delta_mean(level), self.delta_var(level)

    def bias(self, level: int) -> float:
        """``E[X - X_l] = sum_{k>l} a_k q_k`` in closed form."""
        if level < 0:
            raise ValueError("level must be nonnegative")
        r = self._ratio
        return (1 - self.p) * r ** (level + 1) / (1 - r)

    def tail_descriptor(self):
        b, g = self._rates.beta, self.gamma
        balanced = math.isclose(b, g)
        upsilon = upsilon_ok = None
        if g > b and not balanced:
            upsilon, upsilon_ok = 0.5 * (b + 2 * self._rates.alpha), True
        return TailDescriptor(
            v0_positive=True,
            s_divergent=g >= b or balanced,
            # 2 alpha - beta = -ln p, so the threshold outruns the jump ratio iff gamma <= beta
            limcond=g <= b or balanced,
            upsilon=upsilon,
            upsilon_condition=upsilon_ok,
        )

    def describe(self):
        return {"kind": self.name, "p": self.p, "eta": self.eta, "gamma": self.gamma,
                **{k: v for k, v in self._rates.as_dict().items() if k != "gamma"}}


class HeavyFailureFamily(_TwoPointFamily):
    """Centred rare jumps with V_l = exp(-2 alpha l) and cost exp(gamma l), gamma > 2 alpha.

    The jump probability ``q0 exp(-jump_rate l)`` vanishes, so a fixed
    number of top-level samples carries a non-vanishing share of the
    estimator variance.  ``beta`` is only the declared upper-envelope rate.
    """

    name = "heavy"
    _centered = True

    def __init__(self, alpha=1.0, gamma=2.5, beta=1.0, q0=0.25, jump_rate=1.0, c_alpha=1.0):
        if not gamma > 2 * alpha:
            raise ValueError(f"heavy failure family needs gamma > 2*alpha, got gamma={gamma}, alpha={alpha}")
        if not 0 < beta < 2 * alpha:
            raise ValueError("declared beta must lie in (0, 2*alpha)")
        if not 0 < q0 < 0.5:
            raise ValueError("q0 must lie in (0, 1/2)")
        if jump_rate <= 0:
            raise ValueError("jump_rate must be positive")
        self.alpha, self.gamma, self.beta = float(alpha), float(gamma), float(beta)
        self.q0, self.jump_rate = float(q0), float(jump_rate)
        self._rates = RateTriplet(self.alpha, self.beta, self.gamma, float(c_alpha))

    def rates(self):
        return self._rates

    def jump_probability(self, level):
        return self.q0 * math.exp(-self.jump_rate * level)

    def amplitude(self, level):
        q = self.jump_probability(level)
        return math.exp(-self.alpha * level) / math.sqrt(q * (1 - q))

    def delta_var(self, level):
        return math.exp(-2 * self.alpha * level)

    def tail_descriptor(self):
        # S_k ~ exp((gamma - 2 alpha) k / 2), so S_k exp((u - gamma) k / 2) -> 0 for u < 2 alpha
        return TailDescriptor(
            v0_positive=True, s_divergent=True, limcond=False, upsilon=None, upsilon_condition=False
        )

    def describe(self):
        return {"kind": self.name, "alpha": self.alpha, "gamma": self.gamma, "beta": self.beta,
                "q0": self.q0, "jump_rate": self.jump_rate, "c_alpha": self._rates.c_alpha}


class ConstantFamily(LevelFamily):
    """Deterministic increments c0 exp(-alpha l); every V_l is zero."""

    name = "constant"

    def __init__(self, c0=1.0, alpha=1.0, gamma=1.0):
        self.c0, self.alpha, self.gamma = float(c0), float(alpha), float(gamma)
        c_alpha = abs(self.c0) * math.exp(-self.alpha) / -math.expm1(-self.alpha) or 1.0
        self._rates = RateTriplet(self.alpha, 2 * self.alpha, self.gamma, c_alpha)

    def rates(self):
        return self._rates

    def delta_mean(self, level):
        return self.c0 * math.exp(-self.alpha * level)

    def delta_var(self, level):
        return 0.0

    def sample_delta(self, level, rng, size=None):
        value = self.delta_mean(level)
        return value if size is None else np.full(size, value)

    def sample_centered_sum(self, level, m, rng):
        return 0.0

    def lindeberg_tail(self, level, t):
        return 0.0

    def tail_descriptor(self):
        return TailDescriptor(v0_positive=False)

    def describe(self):
        return {"kind": self.name, "c0": self.c0, "alpha": self.alpha, "gamma": self.gamma}
