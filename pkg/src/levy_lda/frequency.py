"""Annual loss-count laws, including the Beta and Gamma mixed (doubly
stochastic) families.

Conventions
-----------
* ``NegBinomial(r, p)``: ``P(N=n) = C(n+r-1, n) (1-p)^r p^n``.
* ``BetaNegBinomial(r, a, b)``: ``P(N=n) = C(n+r-1, n) B(a+r, b+n) / B(a, b)``,
  the marginal of ``C(n+r-1, n) q^r (1-q)^n`` with ``q ~ Beta(a, b)``.
* ``PoissonGamma(a, b)``: ``lambda ~ Gamma(shape=a, rate=b)``; the marginal is
  negative binomial with ``r = a`` and ``p = 1/(1+b)``.

All pmfs are evaluated in log space.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .special import _STIRLING_MIN, _stirling_correction, ln_beta

__all__ = [
    "FrequencyModel",
    "Binomial",
    "BetaBinomial",
    "NegBinomial",
    "BetaNegBinomial",
    "Poisson",
    "PoissonGamma",
    "log_pmf",
    "pmf",
    "zero_prob",
    "sample_count",
    "survival",
]


def _counts(n, upper: int | None = None) -> np.ndarray:
    arr = np.asarray(n)
    if arr.dtype.kind == "f":
        if np.any(arr != np.floor(arr)):
            raise ValueError("counts must be integers")
    elif arr.dtype.kind not in "iu":
        raise TypeError("counts must be integers")
    if np.any(arr < 0):
        raise ValueError("counts must be nonnegative")
    if upper is not None and np.any(arr > upper):
        raise ValueError(f"counts must not exceed {upper}")
    return arr.astype(float)


def _ln_choose(top, k):
    """``ln C(top, k)`` via the Beta function; stable for large ``top``."""
    return -np.log(top + 1.0) - ln_beta(k + 1.0, top - k + 1.0)


def _bd0(x, m):
    """``x ln(x / m) + m - x`` without cancellation when ``x`` is near ``m``."""
    x = np.asarray(x, dtype=float)
    d = x - m
    near = np.abs(d) < 0.1 * (x + m)
    # series in v = (x - m) / (x + m); |v| < 1/21 so 12 terms reach rounding level
    v = np.where(near, d / (x + m), 0.0)
    v2 = v * v
    s = d * v
    ej = 2.0 * x * v
    for j in range(1, 13):
        ej = ej * v2
        s = s + ej / (2 * j + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = x * np.log(np.where(x > 0.0, x / m, 1.0)) + m - x
    return np.where(near, s, direct)


def _scalar(n, value):
    return float(value) if np.ndim(n) == 0 else value


class FrequencyModel(ABC):
    """A counting law on the nonnegative integers."""

    #: largest attainable count, ``None`` for unbounded support
    support_max: int | None = None

    @abstractmethod
    def _log_pmf(self, n: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None): ...

    @abstractmethod
    def _survival(self, k: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def mean(self) -> float: ...

    def log_pmf(self, n):
        arr = _counts(n, self.support_max)
        return _scalar(n, self._log_pmf(arr))

    def pmf(self, n):
        return _scalar(n, np.exp(self.log_pmf(n)))

    def zero_prob(self) -> float:
        return float(np.exp(self._log_pmf(np.zeros(1)))[0])

    def survival(self, k):
        """``P(N > k)``."""
        arr = _counts(k)
        out = np.clip(self._survival(arr), 0.0, 1.0)
        if self.support_max is not None:
            out = np.where(arr >= self.support_max, 0.0, out)
        return _scalar(k, out)

    @property
    def kind(self) -> str:
        return _KIND_NAMES[type(self)]


def _check_prob(name, p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")


def _check_pos(name, v):
    if not (v > 0.0 and math.isfinite(v)):
        raise ValueError(f"{name} must be positive and finite, got {v}")


def _check_int(name, v):
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise ValueError(f"{name} must be a positive integer, got {v}")


@dataclass(frozen=True)
class Binomial(FrequencyModel):
    M: int
    p: float

    def __post_init__(self):
        _check_int("M", self.M)
        _check_prob("p", self.p)
        object.__setattr__(self, "M", int(self.M))

    @property
    def support_max(self):
        return self.M

    def _log_pmf(self, n):
        return _ln_choose(self.M, n) + n * math.log(self.p) + (self.M - n) * math.log1p(-self.p)

    def _survival(self, k):
        k = np.minimum(k, self.M - 1)
        return sp.betainc(k + 1.0, self.M - k, self.p)

    def sample(self, rng, size=None):
        return rng.binomial(self.M, self.p, size)

    def mean(self):
        return self.M * self.p


@dataclass(frozen=True)
class BetaBinomial(FrequencyModel):
    M: int
    a: float
    b: float

    def __post_init__(self):
        _check_int("M", self.M)
        _check_pos("a", self.a)
        _check_pos("b", self.b)
        object.__setattr__(self, "M", int(self.M))

    @property
    def support_max(self):
        return self.M

    def _log_pmf(self, n):
        return (
            _ln_choose(self.M, n)
            + ln_beta(self.a + n, self.b + self.M - n)
            - ln_beta(self.a, self.b)
        )

    def _survival(self, k):
        full = np.exp(self._log_pmf(np.arange(self.M + 1, dtype=float)))
        tail = np.concatenate([np.cumsum(full[::-1])[::-1], [0.0]])
        return tail[np.minimum(k, self.M).astype(int) + 1]

    def sample(self, rng, size=None):
        return rng.binomial(self.M, rng.beta(self.a, self.b, size))

    def mean(self):
        return self.M * self.a / (self.a + self.b)


@dataclass(frozen=True)
class NegBinomial(FrequencyModel):
    r: int
    p: float

    def __post_init__(self):
        _check_int("r", self.r)
        _check_prob("p", self.p)
        object.__setattr__(self, "r", int(self.r))

    def _log_pmf(self, n):
        return _ln_choose(n + self.r - 1, n) + self.r * math.log1p(-self.p) + n * math.log(self.p)

    def _survival(self, k):
        return sp.betainc(k + 1.0, float(self.r), self.p)

    def sample(self, rng, size=None):
        return rng.negative_binomial(self.r, 1.0 - self.p, size)

    def mean(self):
        return self.r * self.p / (1.0 - self.p)


@dataclass(frozen=True)
class BetaNegBinomial(FrequencyModel):
    r: int
    a: float
    b: float

    def __post_init__(self):
        _check_int("r", self.r)
        _check_pos("a", self.a)
        _check_pos("b", self.b)
        object.__setattr__(self, "r", int(self.r))

    def _log_pmf(self, n):
        return (
            _ln_choose(n + self.r - 1, n)
            + ln_beta(self.a + self.r, self.b + n)
            - ln_beta(self.a, self.b)
        )

    def _survival(self, k):
        # N > k iff fewer than r successes in the first k + r trials;
        # averaging the binomial terms over q ~ Beta(a, b) leaves r Beta ratios.
        k = np.asarray(k, dtype=float)[..., None]
        j = np.arange(self.r, dtype=float)
        terms = (
            _ln_choose(k + self.r, j)
            + ln_beta(self.a + j, self.b + k + self.r - j)
            - ln_beta(self.a, self.b)
        )
        return np.exp(terms).sum(axis=-1)

    def sample(self, rng, size=None):
        q = rng.beta(self.a, self.b, size)
        # q underflowing to 0 would make the count undefined
        q = np.maximum(q, np.finfo(float).tiny)
        return rng.negative_binomial(self.r, q)

    def mean(self):
        if self.a <= 1.0:
            return math.inf
        return self.r * self.b / (self.a - 1.0)


@dataclass(frozen=True)
class Poisson(FrequencyModel):
    lam: float

    def __post_init__(self):
        _check_pos("lambda", self.lam)

    def _log_pmf(self, n):
        direct = -self.lam + n * math.log(self.lam) - sp.gammaln(n + 1.0)
        # saddle-point form for larger counts: the large ln n! terms cancel analytically
        big = n >= _STIRLING_MIN
        safe = np.where(big, n, _STIRLING_MIN)
        saddle = (
            -_bd0(safe, self.lam) - 0.5 * np.log(2.0 * math.pi * safe) - _stirling_correction(safe)
        )
        return np.where(big, saddle, direct)

    def _survival(self, k):
        return sp.gammainc(k + 1.0, self.lam)

    def sample(self, rng, size=None):
        return rng.poisson(self.lam, size)

    def mean(self):
        return self.lam


@dataclass(frozen=True)
class PoissonGamma(FrequencyModel):
    """Poisson count with ``lambda ~ Gamma(shape=a, rate=b)``."""

    a: float
    b: float

    def __post_init__(self):
        _check_pos("gamma_shape", self.a)
        _check_pos("gamma_rate", self.b)

    def _log_pmf(self, n):
        coef = -np.log(n + self.a) - ln_beta(n + 1.0, self.a)
        return coef + self.a * math.log(self.b / (1.0 + self.b)) - n * math.log1p(self.b)

    def _survival(self, k):
        return sp.betainc(k + 1.0, self.a, 1.0 / (1.0 + self.b))

    def sample(self, rng, size=None):
        return rng.poisson(rng.gamma(self.a, 1.0 / self.b, size))

    def mean(self):
        return self.a / self.b


_KIND_NAMES = {
    Binomial: "binomial",
    BetaBinomial: "beta_binomial",
    NegBinomial: "negative_binomial",
    BetaNegBinomial: "beta_negative_binomial",
    Poisson: "poisson",
    PoissonGamma: "poisson_gamma",
}


def log_pmf(f: FrequencyModel, n):
    return f.log_pmf(n)


def pmf(f: FrequencyModel, n):
    return f.pmf(n)


def zero_prob(f: FrequencyModel) -> float:
    return f.zero_prob()


def sample_count(f: FrequencyModel, rng: np.random.Generator, size=None):
    return f.sample(rng, size)


def survival(f: FrequencyModel, k):
    return f.survival(k)
