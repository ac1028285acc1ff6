"""I.i.d. nonnegative sources: arrivals X, harvest Y, sensing cost Z, fading h.

Every family is a frozen dataclass that knows its exact mean, how to draw a
block of variates from a numpy Generator and how to take expectations of a
function (exact sums for discrete families, adaptive quadrature through
scipy's frozen distributions for continuous ones).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import bisect

from src.misc.errors import ConfigError, DomainError
from src.modelTool.rate_functions import RateFunction

PROBABILITY_TOLERANCE = 1e-12
QUAD_OPTIONS = {"epsabs": 1e-9, "epsrel": 1e-9, "limit": 200}

# Component weights of the five-branch hyperexponential used for Figs. 8 and 10
HYPEREXP_SCALES = (1.0, 2.0, 3.0, 6.0, 10.0)
HYPEREXP_PROBABILITIES = (0.1, 0.2, 0.2, 0.3, 0.2)
HYPEREXP_NORMALIZER = 4.9


class DistributionSpec(ABC):
    """Parametric description of an i.i.d. nonnegative random source."""

    @abstractmethod
    def mean(self) -> float:
        raise NotImplementedError()

    @abstractmethod
    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n variates from rng."""
        raise NotImplementedError()

    @abstractmethod
    def expect(self, func: Callable[[float], float]) -> float:
        """E[func(V)] for V distributed as this spec."""
        raise NotImplementedError()

    @abstractmethod
    def rescaled(self, new_mean: float) -> "DistributionSpec":
        """Same family and shape with mean new_mean."""
        raise NotImplementedError()

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError()

    @property
    def is_discrete(self) -> bool:
        return False

    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        raise DomainError(f"{self} has no finite support")

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """P(V <= x), elementwise."""
        values, probs = self.support()
        x = np.asarray(x, dtype=float)
        return (probs[None, :] * (values[None, :] <= x.reshape(-1, 1))).sum(axis=1).reshape(x.shape)


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    mean_value: float

    def __post_init__(self) -> None:
        _check_positive(self.mean_value, "mean")

    def mean(self) -> float:
        return self.mean_value

    def draw(self, rng, n):
        return rng.exponential(self.mean_value, n)

    def expect(self, func):
        return float(stats.expon(scale=self.mean_value).expect(func, **QUAD_OPTIONS))

    def cdf(self, x):
        return stats.expon(scale=self.mean_value).cdf(x)

    def rescaled(self, new_mean):
        return Exponential(new_mean)

    def to_dict(self):
        return {"family": "exponential", "mean": self.mean_value}


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0 <= self.lo <= self.hi):
            raise DomainError(f"uniform bounds must satisfy 0 <= lo <= hi, got ({self.lo}, {self.hi})")

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def draw(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def expect(self, func):
        if self.hi == self.lo:
            return float(func(self.lo))
        return float(stats.uniform(loc=self.lo, scale=self.hi - self.lo).expect(func, **QUAD_OPTIONS))

    def cdf(self, x):
        if self.hi == self.lo:
            return (np.asarray(x, dtype=float) >= self.lo).astype(float)
        return stats.uniform(loc=self.lo, scale=self.hi - self.lo).cdf(x)

    def rescaled(self, new_mean):
        factor = new_mean / self.mean()
        return Uniform(self.lo * factor, self.hi * factor)

    def to_dict(self):
        return {"family": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Erlang(DistributionSpec):
    """Sum of `stages` exponentials with total mean `mean_value`."""

    stages: int
    mean_value: float

    def __post_init__(self) -> None:
        if int(self.stages) != self.stages or self.stages < 1:
            raise DomainError(f"Erlang stage count must be a positive integer, got {self.stages}")
        _check_positive(self.mean_value, "mean")

    def mean(self) -> float:
        return self.mean_value

    def draw(self, rng, n):
        return rng.gamma(self.stages, self.mean_value / self.stages, n)

    def expect(self, func):
        frozen = stats.gamma(self.stages, scale=self.mean_value / self.stages)
        return float(frozen.expect(func, **QUAD_OPTIONS))

    def cdf(self, x):
        return stats.gamma(self.stages, scale=self.mean_value / self.stages).cdf(x)

    def rescaled(self, new_mean):
        return Erlang(self.stages, new_mean)

    def to_dict(self):
        return {"family": "erlang", "stages": self.stages, "mean": self.mean_value}


@dataclass(frozen=True)
class HyperExponential(DistributionSpec):
    means: Tuple[float, ...]
    probabilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.means) != len(self.probabilities) or not self.means:
            raise DomainError("hyperexponential means and probabilities must have equal, nonzero length")
        for m in self.means:
            _check_positive(m, "component mean")
        _check_probabilities(self.probabilities)

    def mean(self) -> float:
        return float(np.dot(self.means, self.probabilities))

    def draw(self, rng, n):
        branch = rng.choice(len(self.means), size=n, p=self.probabilities)
        return rng.exponential(1.0, n) * np.asarray(self.means)[branch]

    def expect(self, func):
        return float(sum(
            p * stats.expon(scale=m).expect(func, **QUAD_OPTIONS)
            for m, p in zip(self.means, self.probabilities)
        ))

    def cdf(self, x):
        return sum(p * stats.expon(scale=m).cdf(x) for m, p in zip(self.means, self.probabilities))

    def rescaled(self, new_mean):
        factor = new_mean / self.mean()
        return HyperExponential(tuple(m * factor for m in self.means), self.probabilities)

    def to_dict(self):
        return {"family": "hyperexponential", "means": list(self.means),
                "probabilities": list(self.probabilities)}


@dataclass(frozen=True)
class TruncatedPoisson(DistributionSpec):
    """Poisson(lam) conditioned on {0, ..., cutoff} (renormalized, not clipped)."""

    lam: float
    cutoff: int

    def __post_init__(self) -> None:
        _check_positive(self.lam, "lambda")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise DomainError(f"cutoff must be a positive integer, got {self.cutoff}")

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self):
        values = np.arange(self.cutoff + 1, dtype=float)
        pmf = stats.poisson(self.lam).pmf(values)
        return values, pmf / pmf.sum()

    def mean(self) -> float:
        values, pmf = self.support()
        return float(np.dot(values, pmf))

    def draw(self, rng, n):
        values, pmf = self.support()
        return rng.choice(values, size=n, p=pmf)

    def expect(self, func):
        return _discrete_expectation(self.support(), func)

    def rescaled(self, new_mean):
        return TruncatedPoisson(fit_truncated_poisson(new_mean, self.cutoff), self.cutoff)

    def to_dict(self):
        return {"family": "truncated_poisson", "lambda": self.lam, "cutoff": self.cutoff}


@dataclass(frozen=True)
class DiscretePmf(DistributionSpec):
    values: Tuple[float, ...]
    probabilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.values) != len(self.probabilities) or not self.values:
            raise DomainError("pmf values and probabilities must have equal, nonzero length")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise DomainError("pmf values must be finite and nonnegative")
        _check_probabilities(self.probabilities)

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self):
        return np.asarray(self.values), np.asarray(self.probabilities)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probabilities))

    def draw(self, rng, n):
        return rng.choice(np.asarray(self.values), size=n, p=self.probabilities)

    def expect(self, func):
        return _discrete_expectation(self.support(), func)

    def rescaled(self, new_mean):
        factor = new_mean / self.mean()
        return DiscretePmf(tuple(v * factor for v in self.values), self.probabilities)

    def to_dict(self):
        return {"family": "discrete", "values": list(self.values),
                "probabilities": list(self.probabilities)}


@dataclass(frozen=True)
class Deterministic(DistributionSpec):
    value: float

    def __post_init__(self) -> None:
        if self.value < 0 or not math.isfinite(self.value):
            raise DomainError(f"deterministic value must be finite and nonnegative, got {self.value}")

    @property
    def is_discrete(self) -> bool:
        return True

    def support(self):
        return np.array([self.value]), np.array([1.0])

    def mean(self) -> float:
        return self.value

    def draw(self, rng, n):
        return np.full(n, self.value)

    def expect(self, func):
        return float(func(self.value))

    def rescaled(self, new_mean):
        return Deterministic(new_mean)

    def to_dict(self):
        return {"family": "deterministic", "value": self.value}


def hyperexponential_recipe(mean: float) -> HyperExponential:
    """Five-branch mixture with means mean/4.9 * (1, 2, 3, 6, 10)."""
    return HyperExponential(
        tuple(mean * s / HYPEREXP_NORMALIZER for s in HYPEREXP_SCALES),
        HYPEREXP_PROBABILITIES,
    )


def dist_mean(spec: DistributionSpec) -> float:
    return spec.mean()


def truncated_poisson_mean(lam: float, cutoff: int) -> float:
    return TruncatedPoisson(lam, cutoff).mean()


def fit_truncated_poisson(target_mean: float, cutoff: int) -> float:
    """lambda such that Poisson(lambda) conditioned on {0..cutoff} has mean target_mean.

    The conditioned mean increases monotonically from 0 to cutoff, so the root
    is bracketed and found by bisection.
    """
    if not (0 < target_mean < cutoff):
        raise DomainError(f"truncated Poisson mean must lie in (0, {cutoff}), got {target_mean}")

    def gap(lam: float) -> float:
        return truncated_poisson_mean(lam, cutoff) - target_mean

    lower, upper = 1e-12, max(1.0, float(target_mean))
    while gap(upper) < 0:
        upper *= 2.0
    return bisect(gap, lower, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=1000)


def expected_g(spec: DistributionSpec, rf: RateFunction, fading: Optional[DistributionSpec] = None) -> float:
    """E[g(Y)], or E[g(hY)] averaged over a discrete fading pmf."""
    if fading is None:
        return spec.expect(rf.evaluate)
    if not isinstance(fading, DiscretePmf):
        raise DomainError("fading must be given as a discrete pmf")
    gains, probs = fading.support()
    return float(sum(
        p * spec.expect(lambda y, h=float(h): rf.evaluate(h * y))
        for h, p in zip(gains, probs) if p > 0
    ))


def expected_g_monte_carlo(
    spec: DistributionSpec,
    rf: RateFunction,
    fading: Optional[DistributionSpec] = None,
    draws: int = 200_000,
    seed: int = 0,
) -> Tuple[float, float]:
    """Monte Carlo estimate of E[g(hY)] with its standard error."""
    rng = np.random.default_rng(seed)
    y = spec.draw(rng, draws)
    h = fading.draw(rng, draws) if fading is not None else np.ones(draws)
    rates = np.array([rf.evaluate(v) for v in h * y])
    return float(rates.mean()), float(rates.std(ddof=1) / math.sqrt(draws))


_FAMILIES = {
    "exponential": (Exponential, {"mean": "mean_value"}),
    "uniform": (Uniform, {"lo": "lo", "hi": "hi"}),
    "erlang": (Erlang, {"stages": "stages", "mean": "mean_value"}),
    "hyperexponential": (HyperExponential, {"means": "means", "probabilities": "probabilities"}),
    "truncated_poisson": (TruncatedPoisson, {"lambda": "lam", "cutoff": "cutoff"}),
    "discrete": (DiscretePmf, {"values": "values", "probabilities": "probabilities"}),
    "deterministic": (Deterministic, {"value": "value"}),
}


def distribution_from_dict(data: Dict[str, Any], key: str) -> DistributionSpec:
    """Build a spec from its configuration form.

    Besides the plain parameter keys, `truncated_poisson` accepts `mean`
    (lambda is then fitted) and `hyperexponential` accepts `mean` alone
    (the five-branch recipe).
    """
    if not isinstance(data, dict):
        raise ConfigError("expected an object with a 'family' key", key=key)
    family = data.get("family")
    if family not in _FAMILIES:
        raise ConfigError(f"unknown distribution family {family!r}", key=f"{key}.family")
    params = {k: v for k, v in data.items() if k != "family"}
    try:
        if family == "truncated_poisson" and "mean" in params:
            _reject_unknown(params, {"mean", "cutoff"}, key)
            cutoff = int(params.get("cutoff", 5))
            return TruncatedPoisson(fit_truncated_poisson(float(params["mean"]), cutoff), cutoff)
        if family == "hyperexponential" and set(params) == {"mean"}:
            return hyperexponential_recipe(float(params["mean"]))
        cls, names = _FAMILIES[family]
        _reject_unknown(params, set(names), key)
        missing = set(names) - set(params)
        if missing:
            raise ConfigError(f"missing keys {sorted(missing)}", key=key)
        return cls(**{names[k]: v for k, v in params.items()})
    except DomainError as exc:
        raise ConfigError(str(exc), key=key) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid parameters: {exc}", key=key) from exc


def _reject_unknown(params: Dict[str, Any], allowed: set, key: str) -> None:
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key=key)


def _discrete_expectation(support: Tuple[np.ndarray, np.ndarray], func: Callable[[float], float]) -> float:
    values, probs = support
    return float(sum(p * func(float(v)) for v, p in zip(values, probs) if p > 0))


def _check_positive(value: float, name: str) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value}")


def _check_probabilities(probabilities: Sequence[float]) -> None:
    if any(p < 0 or p > 1 for p in probabilities):
        raise DomainError("probabilities must lie in [0, 1]")
    if abs(sum(probabilities) - 1.0) > PROBABILITY_TOLERANCE:
        raise DomainError(f"probabilities must sum to 1, got {sum(probabilities)!r}")
