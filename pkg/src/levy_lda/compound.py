"""Closed-form annual loss of a single risk cell with Levy severities.

Given ``N`` losses the annual total is again Levy with scale ``n^2 gamma`` and
support starting at ``n delta``, so the annual-loss law is an atom
``P(N = 0)`` at zero plus a countable Levy mixture. The mixture is truncated
to the count range selected in :mod:`levy_lda.truncation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special as _sp

from .frequency import FrequencyModel
from .special import erf, erfc
from .stable import LevyParams, tail_constant
from .truncation import MASS_TOL, THRESHOLD_LOG, TruncationBounds, truncation_bounds

__all__ = [
    "CompoundModel",
    "MixtureComponent",
    "components",
    "density",
    "cdf",
    "survival",
    "retained_mass",
    "tail_prob_asymptotic",
    "value_at_risk",
    "expected_shortfall",
    "term_matrix",
    "cdf_capped",
    "ERFC_CUTOFF",
    "COMPONENT_BUDGET",
]

#: components whose erfc argument exceeds this contribute < 1.2e-29 each
ERFC_CUTOFF = 8.0
COMPONENT_BUDGET = 10_000_000
_CHUNK = 4096
#: counts summed term by term before the far tail switches to quadrature
EXACT_TERMS = 65_536
_BLOCK_RATIO = 1.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class MixtureComponent:
    """One Levy component: ``weight * Levy(gamma_n, delta_n)`` with ``delta_n`` the support start."""

    weight: float
    gamma_n: float
    delta_n: float
    n: int

    def __post_init__(self):
        if self.weight < 0.0:
            raise ValueError("weight must be nonnegative")
        if not self.gamma_n > 0.0:
            raise ValueError("gamma_n must be positive")

    @property
    def location_s0(self) -> float:
        """Location of the same law in the S0 parameterization."""
        return self.delta_n + self.gamma_n

    @property
    def levy(self) -> LevyParams:
        return LevyParams(self.gamma_n, self.delta_n)


@dataclass(frozen=True)
class CompoundModel:
    frequency: FrequencyModel
    severity: LevyParams
    threshold_log: float = THRESHOLD_LOG
    mass_tol: float = MASS_TOL

    def __post_init__(self):
        if self.severity.delta < 0.0:
            raise ValueError("severity delta must be >= 0 for a loss model")

    @cached_property
    def bounds(self) -> TruncationBounds:
        return truncation_bounds(self.frequency, self.threshold_log, self.mass_tol)

    @property
    def zero_prob(self) -> float:
        return self.frequency.zero_prob()

    def reach(self, z: float) -> int:
        """Smallest ``n`` such that every count above it is negligible at points ``<= z``.

        Beyond it the erfc argument exceeds ``ERFC_CUTOFF`` (or the support starts past z).
        """
        g, d = self.severity.gamma, self.severity.delta
        c = 2.0 * ERFC_CUTOFF**2
        z = max(float(z), 0.0)
        root = (-c * d + math.sqrt((c * d) ** 2 + 4.0 * g * c * z)) / (2.0 * g)
        return max(1, math.floor(root) + 1)

    def n_effective(self, z: float) -> int:
        """Last retained count that can matter at points ``<= z``."""
        b = self.bounds
        return int(min(b.n_upper, max(b.n_lower, self.reach(z))))

    def log_weights(self, n: np.ndarray) -> np.ndarray:
        return self.frequency._log_pmf(np.asarray(n, dtype=float))

    def _chunks(self, n_hi: int):
        lo = self.bounds.n_lower
        for start in range(lo, n_hi + 1, _CHUNK):
            n = np.arange(start, min(start + _CHUNK, n_hi + 1), dtype=float)
            yield n, np.exp(self.log_weights(n))

    def _nodes(self, n_hi: int):
        """``(n, w)`` batches whose weighted sums stand for sums over counts ``n_lower..n_hi``.

        Counts are exact up to ``split``. Past it the weights are smooth and
        decreasing, and each geometric block of integers ``[a, b)`` is replaced
        by Gauss-Legendre on ``[a - 1/2, b - 1/2]`` (midpoint Euler-Maclaurin).
        The first end correction ``-(f'(end) - f'(start)) / 24`` enters as two
        signed central-difference nodes at each end, so weights may be negative.
        """
        b = self.bounds
        split = max(b.n_lower + EXACT_TERMS, 2 * b.n_mode)
        yield from self._chunks(min(n_hi, split - 1))
        if n_hi < split:
            return
        edges = [split]
        while edges[-1] <= n_hi:
            nxt = max(edges[-1] + 1, math.ceil(edges[-1] * _BLOCK_RATIO))
            edges.append(min(n_hi + 1, nxt))
        e = np.asarray(edges, dtype=float) - 0.5
        half, mid = 0.5 * np.diff(e), 0.5 * (e[1:] + e[:-1])
        n = (mid[:, None] + half[:, None] * _GL_X).ravel()
        gw = (half[:, None] * _GL_W).ravel()
        h = 1.0
        ends = np.array([e[0] - h, e[0] + h, e[-1] - h, e[-1] + h])
        n = np.concatenate([n, ends])
        gw = np.concatenate([gw, np.array([-1.0, 1.0, 1.0, -1.0]) / (48.0 * h)])
        for start in range(0, n.size, _CHUNK):
            sl = slice(start, start + _CHUNK)
            yield n[sl], gw[sl] * np.exp(self.log_weights(n[sl]))

    @cached_property
    def retained_mass(self) -> float:
        w = math.fsum(math.fsum(w) for _, w in self._nodes(self.bounds.n_upper))
        # a probability sum; only rounding can push it past 1
        return min(1.0, self.zero_prob + w)

    def asymptotic_scale(self) -> float:
        """``2 c_{1/2} sqrt(gamma) sum_n n pmf(n)`` over the retained counts."""
        total = math.fsum(math.fsum(w * n) for n, w in self._nodes(self.bounds.n_upper))
        return 2.0 * tail_constant(0.5) * math.sqrt(self.severity.gamma) * total

    def _mixture(self, z: np.ndarray, kernel, outside: float = 0.0) -> np.ndarray:
        out = np.zeros_like(z)
        if z.size == 0:
            return out
        g, d = self.severity.gamma, self.severity.delta
        for n, w in self._nodes(self.n_effective(float(z.max()))):
            keep = w != 0.0
            n, w = n[keep], w[keep]
            if n.size == 0:
                continue
            dz = z[:, None] - n[None, :] * d
            inside = dz > 0.0
            safe = np.where(inside, dz, 1.0)
            vals = kernel(n * n * g, safe)
            out += np.where(inside, vals, outside) @ w
        return out


def components(m: CompoundModel, n_max: int | None = None) -> list[MixtureComponent]:
    """Retained components, optionally only up to count ``n_max``."""
    b = m.bounds
    hi = b.n_upper if n_max is None else min(b.n_upper, int(n_max))
    if hi - b.n_lower + 1 > COMPONENT_BUDGET:
        raise ValueError(
            f"{hi - b.n_lower + 1} components exceed the budget of {COMPONENT_BUDGET}; pass n_max"
        )
    g, d = m.severity.gamma, m.severity.delta
    n = np.arange(b.n_lower, hi + 1)
    w = np.exp(m.log_weights(n))
    return [
        MixtureComponent(float(wi), float(k * k * g), float(k * d), int(k)) for k, wi in zip(n, w)
    ]


def term_matrix(m: CompoundModel, z, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Weighted CDF terms for counts ``1..n_max``, ignoring the truncation bounds.

    Returns ``(n, terms)`` with ``terms[i, k] = pmf(n_k) P(Levy_{n_k} <= z_i)``.
    Counts with zero (or underflowed) weight are skipped.
    """
    z = _as_array(z).reshape(-1)
    f = m.frequency
    top = n_max if f.support_max is None else min(n_max, f.support_max)
    n = np.arange(1, top + 1, dtype=float)
    w = np.exp(m.log_weights(n))
    keep = w > 0.0
    n, w = n[keep], w[keep]
    g, d = m.severity.gamma, m.severity.delta
    dz = z[:, None] - n[None, :] * d
    inside = dz > 0.0
    vals = _cdf_kernel(n * n * g, np.where(inside, dz, 1.0))
    return n.astype(int), np.where(inside, vals, 0.0) * w


def cdf_capped(m: CompoundModel, z, n_max: int) -> np.ndarray:
    """CDF with counts ``1..n_max`` kept (ignores the truncation bounds)."""
    z = _as_array(z).reshape(-1)
    if m.severity.delta != 0.0:
        _, terms = term_matrix(m, z, n_max)
        return terms.sum(axis=1) + np.where(z >= 0.0, m.zero_prob, 0.0)
    f = m.frequency
    top = n_max if f.support_max is None else min(n_max, f.support_max)
    n = np.arange(1, top + 1, dtype=float)
    w = np.exp(m.log_weights(n))
    keep = w > 0.0
    n, w = n[keep], w[keep]
    # with delta = 0 the erfc argument factorizes as n * sqrt(gamma / (2 z)), and
    # erfc(x) = 2 ndtr(-sqrt(2) x) is the cheaper kernel on the full matrix
    pos = z > 0.0
    root = np.sqrt(m.severity.gamma / np.where(pos, z, 1.0))
    x = np.multiply.outer(-root, n)
    _sp.ndtr(x, out=x)
    mix = 2.0 * (x @ w)
    return np.where(pos, mix, 0.0) + np.where(z >= 0.0, m.zero_prob, 0.0)


def _as_array(z):
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)):
        raise ValueError("z must not be NaN")
    return z


def _shaped(z, values):
    return float(values.reshape(())) if z.ndim == 0 else values.reshape(z.shape)


def _pdf_kernel(g, dz):
    with np.errstate(under="ignore"):
        return np.exp(0.5 * np.log(g / (2.0 * math.pi)) - 1.5 * np.log(dz) - g / (2.0 * dz))


def _cdf_kernel(g, dz):
    return erfc(np.sqrt(g / (2.0 * dz)))


def _sf_kernel(g, dz):
    return erf(np.sqrt(g / (2.0 * dz)))


def density(m: CompoundModel, z):
    """Density of the continuous part; the atom at zero is not included."""
    z = _as_array(z)
    flat = z.reshape(-1)
    return _shaped(z, m._mixture(flat, _pdf_kernel))


def cdf(m: CompoundModel, z):
    z = _as_array(z)
    flat = z.reshape(-1)
    out = m._mixture(flat, _cdf_kernel) + np.where(flat >= 0.0, m.zero_prob, 0.0)
    return _shaped(z, np.minimum(out, 1.0))


def retained_mass(m: CompoundModel) -> float:
    """Atom plus the total weight of the retained components."""
    return m.retained_mass


def survival(m: CompoundModel, z):
    """``P(Z > z)`` of the truncated law, without the cancellation of ``1 - cdf``."""
    z = _as_array(z)
    flat = z.reshape(-1)
    if flat.size == 0:
        return _shaped(z, flat.copy())
    mass = retained_mass(m) - m.zero_prob
    n_eff = m.n_effective(float(flat.max()))
    # components beyond n_eff sit entirely above every z
    near = math.fsum(math.fsum(w) for _, w in m._nodes(n_eff))
    out = m._mixture(flat, _sf_kernel, outside=1.0) + (mass - near)
    out += np.where(flat < 0.0, m.zero_prob, 0.0)
    return _shaped(z, np.maximum(out, 0.0))


def tail_prob_asymptotic(m: CompoundModel, z):
    """Leading power-law tail ``2 c_{1/2} z^{-1/2} sum_n pmf(n) n sqrt(gamma)``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("tail_prob_asymptotic: z must be positive")
    out = m.asymptotic_scale() * z**-0.5
    return float(out) if out.ndim == 0 else out


def value_at_risk(m: CompoundModel, q: float, tol: float = 1e-11) -> float:
    """``q``-quantile of the annual loss, ``0`` inside the atom."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    scale = m.asymptotic_scale()
    return _invert(lambda z: float(cdf(m, z)), m.zero_prob, retained_mass(m), q, tol, scale)


def _invert(F, atom: float, total: float, q: float, tol: float, scale: float) -> float:
    """Bisection for ``F(z) = q`` on a continuous nondecreasing CDF with atom at 0."""
    if q <= atom:
        return 0.0
    if q >= total:
        raise ValueError(
            f"quantile {q} is not resolvable: retained mass is {total!r}; lower mass_tol"
        )
    # initial bracket from the inverted z^-1/2 tail
    hi = max((scale / (1.0 - q)) ** 2, 1e-300)
    lo = 0.0
    if F(hi) < q:
        while F(hi) < q:
            lo, hi = hi, hi * 4.0
            if not math.isfinite(hi):
                raise ValueError("failed to bracket the quantile")
    else:
        while hi > 1e-300 and F(hi / 4.0) >= q:
            hi /= 4.0
        lo = hi / 4.0 if hi > 1e-300 else 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        if abs(fm - q) <= tol:
            return mid
        if fm < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.0 * math.ulp(hi):
            break
    return hi


def expected_shortfall(m: CompoundModel, q: float) -> float:
    """Divergent: the Levy severity has no finite mean."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return math.inf
