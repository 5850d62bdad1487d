"""Selection of the retained count range ``[n_lower, n_upper]``.

Each count ``n`` contributes a tail weight ``W_n`` to the compound law. The
retained range runs from the last index below the peak weight that has fallen
``e^37`` below it to the first such index above it. The per-model weights
are

* Poisson and the binomial family: ``n * pmf(n)``
* negative binomial, beta negative binomial, Poisson-Gamma: ``pmf(n)``

(the common ``sqrt(gamma)`` factor cancels in the ratio). A mass guard then
widens the range until the discarded count probability is below ``mass_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frequency import (
    BetaBinomial,
    BetaNegBinomial,
    Binomial,
    FrequencyModel,
    NegBinomial,
    Poisson,
    PoissonGamma,
)

__all__ = [
    "THRESHOLD_LOG",
    "MASS_TOL",
    "TruncationBounds",
    "log_tail_weight",
    "mode_equation",
    "find_mode",
    "truncation_bounds",
]

THRESHOLD_LOG = -37.0
MASS_TOL = 1e-12

# largest count index we will ever report; keeps indices exact in float64
_N_MAX = 2**52


@dataclass(frozen=True)
class TruncationBounds:
    n_lower: int
    n_mode: int
    n_upper: int
    threshold_log: float = THRESHOLD_LOG
    #: count probability outside ``{0} U [n_lower, n_upper]``
    mass_dropped: float = 0.0

    def __post_init__(self):
        if not 1 <= self.n_lower <= self.n_mode <= self.n_upper:
            raise ValueError(
                f"bounds must satisfy 1 <= n_lower <= n_mode <= n_upper, got "
                f"({self.n_lower}, {self.n_mode}, {self.n_upper})"
            )

    @property
    def size(self) -> int:
        return self.n_upper - self.n_lower + 1


def _has_n_factor(f: FrequencyModel) -> bool:
    return isinstance(f, (Poisson, Binomial, BetaBinomial))


def log_tail_weight(f: FrequencyModel, n):
    """``log W_n`` up to the constant ``0.5 * log(gamma)``; ``n >= 1``."""
    n = np.asarray(n, dtype=float)
    out = f._log_pmf(n)
    if _has_n_factor(f):
        out = out + np.log(n)
    return out


def _psi_approx(x):
    return np.log(x) - 0.5 / x


def mode_equation(f: FrequencyModel, n):
    """Stirling-form derivative of ``log W_n`` in ``n``; ``None`` if the model has none.

    Its sign change over the integers brackets the peak weight. These are only
    seeds; the exact integer maximum is confirmed on ``log_tail_weight``.
    """
    n = np.asarray(n, dtype=float)
    if isinstance(f, Poisson):
        return math.log(f.lam) - np.log(n) - 0.5 / n
    if isinstance(f, PoissonGamma):
        m = n + f.a - 1.0
        return (
            np.log(m) + n / m + (f.a - 0.5) / m - np.log(n) - 1.0 - 0.5 / n - math.log1p(f.b)
        )
    if isinstance(f, NegBinomial):
        m = n + f.r - 1.0
        return np.log(m) + n / m + (f.r - 0.5) / m - 1.0 - np.log(n) - 0.5 / n + math.log(f.p)
    if isinstance(f, BetaNegBinomial):
        return (
            _psi_approx(n + f.r)
            - _psi_approx(n + 1.0)
            + _psi_approx(f.b + n)
            - _psi_approx(f.a + f.r + f.b + n)
        )
    return None


def _hill_climb(f: FrequencyModel, n: int, upper: int) -> int:
    """Local integer maximum of ``log W`` reached from ``n``; steps double while they improve."""
    lw = float(log_tail_weight(f, n))
    step = 1
    while True:
        moved = False
        for k in (n + step, n - step):
            if 1 <= k <= upper:
                lk = float(log_tail_weight(f, k))
                if lk > lw:
                    n, lw, moved = k, lk, True
                    break
        if moved:
            step *= 2
        elif step > 1:
            step //= 2
        else:
            return n


def find_mode(f: FrequencyModel) -> int:
    """Integer argmax of ``log W_n`` over ``n >= 1``."""
    if f.support_max is not None:
        n = np.arange(1, f.support_max + 1)
        return int(n[np.argmax(log_tail_weight(f, n))])

    mean = f.mean()
    centre = 1.0 if not math.isfinite(mean) else max(1.0, mean)
    seeds = {1, int(centre)}

    span = int(min(1e6, 20.0 * (centre + 1.0) + 200.0))
    grid = np.arange(1, span + 1, dtype=float)
    deriv = mode_equation(f, grid)
    if deriv is not None:
        change = np.nonzero((deriv[:-1] > 0.0) & (deriv[1:] <= 0.0))[0]
        if change.size:
            seeds.add(int(grid[change[0]]))

    # windowed scan around the mean guards against a misleading equation
    half = int(20.0 * math.sqrt(centre + 1.0))
    lo = max(1, int(centre) - half)
    window = np.arange(lo, int(centre) + half + 1)
    seeds.add(int(window[np.argmax(log_tail_weight(f, window))]))

    best = [_hill_climb(f, s, _N_MAX) for s in seeds]
    return max(best, key=lambda k: (float(log_tail_weight(f, k)), -k))


def _first_true(pred, lo: int, hi_limit: int) -> int | None:
    """Smallest ``n`` in ``[lo, hi_limit]`` with ``pred(n)``, for monotone ``pred``."""
    if pred(lo):
        return lo
    step, prev = 1, lo
    while True:
        hi = min(prev + step, hi_limit)
        if pred(hi):
            break
        if hi == hi_limit:
            return None
        prev, step = hi, step * 2
    while hi - prev > 1:
        mid = (prev + hi) // 2
        if pred(mid):
            hi = mid
        else:
            prev = mid
    return hi


def _lower_mass(f: FrequencyModel, n_lower: int) -> float:
    """``P(1 <= N < n_lower)``."""
    if n_lower <= 1:
        return 0.0
    k = np.arange(1, n_lower, dtype=float)
    return math.fsum(np.exp(f._log_pmf(k)))


def truncation_bounds(
    f: FrequencyModel, threshold_log: float = THRESHOLD_LOG, mass_tol: float = MASS_TOL
) -> TruncationBounds:
    if threshold_log >= 0.0:
        raise ValueError("threshold_log must be negative")
    if not mass_tol > 0.0:
        raise ValueError("mass_tol must be positive")

    mode = find_mode(f)
    cut = float(log_tail_weight(f, mode)) + threshold_log
    below = lambda n: float(log_tail_weight(f, n)) <= cut  # noqa: E731

    cap = f.support_max if f.support_max is not None else _N_MAX
    upper = _first_true(below, mode + 1, cap) if mode < cap else None
    upper = cap if upper is None else upper

    lower = 1
    if mode > 1 and below(1):
        # log W rises up to the mode: find the last index still below the cut
        first_above = _first_true(lambda n: not below(n), 1, mode)
        lower = max(1, first_above - 1)

    # each side may drop half of the tolerance
    side = 0.5 * mass_tol
    if f.support_max is None and f.survival(upper) > side:
        upper = _first_true(lambda n: f.survival(n) <= side, upper, _N_MAX)
        if upper is None:
            raise ValueError("count law too heavy-tailed to truncate at the requested mass")
    while lower > 1 and _lower_mass(f, lower) > side:
        lower -= 1

    dropped = _lower_mass(f, lower) + float(f.survival(upper))
    return TruncationBounds(lower, mode, upper, threshold_log, dropped)
