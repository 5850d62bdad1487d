"""Stable-law parameter algebra, the analytic Levy sub-family and samplers.

Two parameterizations of the stable location are in circulation (Nolan's S0
and S1). They differ by ``beta * gamma * tan(pi * alpha / 2)`` when
``alpha != 1``. :class:`StableParams` carries its form explicitly; the
convolution rule is stated for S0.

:class:`LevyParams` is the alpha = 1/2, beta = 1 member written in the
closed form::

    f(x) = sqrt(gamma / 2pi) (x - delta)^(-3/2) exp(-gamma / (2 (x - delta)))

where ``delta`` is the left end of the support. That is the S1 location; the
matching S0 location is ``delta + gamma``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import erfcinv

from .special import erf, erfc, erfc_inv, ln_gamma

__all__ = [
    "Form",
    "StableParams",
    "LevyParams",
    "TailAsymptote",
    "AsymptoticRegimeWarning",
    "affine_transform",
    "convolve_params",
    "levy_pdf",
    "levy_cdf",
    "levy_sf",
    "levy_quantile",
    "levy_median",
    "levy_mode",
    "stable_tail",
    "tail_asymptote",
    "tail_constant",
    "sample_stable_cms",
    "sample_levy_inverse",
]


class Form(enum.Enum):
    S0 = "S0"
    S1 = "S1"


class AsymptoticRegimeWarning(UserWarning):
    """Raised when a tail asymptote is evaluated too close to the body."""


def _location_shift(alpha: float, beta: float, gamma: float) -> float:
    """``delta0 - delta1`` for the given shape and scale."""
    if alpha == 1.0:
        return 2.0 / math.pi * beta * gamma * math.log(gamma)
    return beta * gamma * math.tan(math.pi * alpha / 2.0)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float
    gamma: float
    delta: float
    form: Form = Form.S0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")

    def to_form(self, form: Form) -> "StableParams":
        if form is self.form:
            return self
        shift = _location_shift(self.alpha, self.beta, self.gamma)
        delta = self.delta + shift if form is Form.S0 else self.delta - shift
        return replace(self, delta=delta, form=form)


@dataclass(frozen=True)
class LevyParams:
    """Levy law with scale ``gamma`` and support ``(delta, inf)``."""

    gamma: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")

    def to_stable(self, form: Form = Form.S0) -> StableParams:
        return StableParams(0.5, 1.0, self.gamma, self.delta, Form.S1).to_form(form)

    @classmethod
    def from_stable(cls, p: StableParams) -> "LevyParams":
        if p.alpha != 0.5 or p.beta != 1.0:
            raise ValueError("only alpha=0.5, beta=1 stable laws are Levy laws")
        return cls(p.gamma, p.to_form(Form.S1).delta)


@dataclass(frozen=True)
class TailAsymptote:
    """Power-law tail ``coefficient * x**(-exponent)``."""

    coefficient: float
    exponent: float

    def __call__(self, x):
        return self.coefficient * np.asarray(x, dtype=float) ** (-self.exponent)


def affine_transform(p: StableParams, a: float, b: float) -> StableParams:
    """Law of ``a * Y + b`` for ``Y ~ p`` (closure under affine maps, S0)."""
    if a == 0:
        raise ValueError("affine_transform: a must be nonzero")
    s0 = p.to_form(Form.S0)
    out = StableParams(
        s0.alpha, math.copysign(1.0, a) * s0.beta, abs(a) * s0.gamma, a * s0.delta + b, Form.S0
    )
    return out.to_form(p.form)


def convolve_params(parts: Sequence[StableParams]) -> StableParams:
    """Law of the sum of independent stable variables sharing one alpha.

    All parts must be in S0 form; the result is S0.
    """
    if not parts:
        raise ValueError("convolve_params: need at least one part")
    alpha = parts[0].alpha
    if any(p.alpha != alpha for p in parts):
        raise ValueError("convolve_params: all parts must share alpha")
    if any(p.form is not Form.S0 for p in parts):
        raise ValueError("convolve_params: all parts must be in S0 form")
    if len(parts) == 1:
        return parts[0]

    g_alpha = [p.gamma**alpha for p in parts]
    total = math.fsum(g_alpha)
    gamma = total ** (1.0 / alpha)
    beta = math.fsum(p.beta * ga for p, ga in zip(parts, g_alpha)) / total
    beta = min(1.0, max(-1.0, beta))
    delta = math.fsum(p.delta for p in parts)
    if alpha != 1.0:
        correction = beta * gamma - math.fsum(p.beta * p.gamma for p in parts)
        delta += math.tan(math.pi * alpha / 2.0) * correction
    else:
        correction = beta * gamma * math.log(gamma) - math.fsum(
            p.beta * p.gamma * math.log(p.gamma) for p in parts
        )
        delta += 2.0 / math.pi * correction
    return StableParams(alpha, beta, gamma, delta, Form.S0)


def _levy_arg(p: LevyParams, x):
    """``sqrt(gamma / (2 (x - delta)))`` on the support; callers mask the rest with ``inside``."""
    x = np.asarray(x, dtype=float)
    dx = x - p.delta
    inside = dx > 0.0
    safe = np.where(inside, dx, 1.0)
    # a subnormal x - delta overflows to inf, which gives the correct limits below
    with np.errstate(over="ignore"):
        return x, inside, safe, np.sqrt(p.gamma / (2.0 * safe))


def levy_pdf(p: LevyParams, x):
    x, inside, dx, _ = _levy_arg(p, x)
    # log space: dx**-1.5 overflows where the exponential factor underflows
    with np.errstate(under="ignore", over="ignore"):
        dens = np.exp(
            0.5 * math.log(p.gamma / (2.0 * math.pi)) - 1.5 * np.log(dx) - p.gamma / (2.0 * dx)
        )
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def levy_cdf(p: LevyParams, x):
    x, inside, _, arg = _levy_arg(p, x)
    out = np.where(inside, erfc(arg), 0.0)
    return float(out) if out.ndim == 0 else out


def levy_sf(p: LevyParams, x):
    """Survival function ``1 - levy_cdf``, accurate far in the tail."""
    x, inside, _, arg = _levy_arg(p, x)
    out = np.where(inside, erf(arg), 1.0)
    return float(out) if out.ndim == 0 else out


def levy_quantile(p: LevyParams, q):
    q = np.asarray(q, dtype=float)
    if np.any(~((q > 0.0) & (q < 1.0))):
        raise ValueError("levy_quantile: q must lie in (0, 1)")
    out = p.delta + p.gamma / (2.0 * erfc_inv(q) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def levy_median(p: LevyParams) -> float:
    return levy_quantile(p, 0.5)


def levy_mode(p: LevyParams) -> float:
    return p.delta + p.gamma / 3.0


def tail_constant(alpha: float) -> float:
    """``c_alpha = sin(pi alpha / 2) Gamma(alpha) / pi``."""
    return math.sin(math.pi * alpha / 2.0) * math.exp(ln_gamma(alpha)) / math.pi


def tail_asymptote(p: StableParams) -> TailAsymptote:
    """Leading upper-tail term ``P(X > x) ~ gamma^alpha c_alpha (1 + beta) x^-alpha``."""
    if p.alpha >= 2.0:
        raise ValueError("tail_asymptote: alpha must be < 2")
    coef = p.gamma**p.alpha * tail_constant(p.alpha) * (1.0 + p.beta)
    return TailAsymptote(coef, p.alpha)


def stable_tail(p: StableParams, x):
    """Evaluate the tail asymptote at ``x``; warns outside the asymptotic regime."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr - p.delta < 100.0 * p.gamma):
        warnings.warn(
            "stable_tail evaluated within 100 scale units of the location; "
            "the asymptote is not reliable there",
            AsymptoticRegimeWarning,
            stacklevel=2,
        )
    out = tail_asymptote(p)(x_arr)
    return float(out) if out.ndim == 0 else out


def sample_stable_cms(p: StableParams, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck variates for any stable law.

    The composite transform yields a standard S1 variate; it is then scaled
    and located according to ``p.form``.
    """
    alpha, beta = p.alpha, p.beta
    w = rng.exponential(1.0, size)
    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    if alpha != 1.0:
        t = beta * math.tan(math.pi * alpha / 2.0)
        b_ab = math.atan(t) / alpha
        s_ab = (1.0 + t * t) ** (1.0 / (2.0 * alpha))
        ybar = (
            s_ab
            * np.sin(alpha * (u + b_ab))
            / np.cos(u) ** (1.0 / alpha)
            * (np.cos(u - alpha * (u + b_ab)) / w) ** ((1.0 - alpha) / alpha)
        )
        if p.form is Form.S0:
            return p.gamma * (ybar - t) + p.delta
        return p.gamma * ybar + p.delta
    half_pi = math.pi / 2.0
    ybar = (2.0 / math.pi) * (
        (half_pi + beta * u) * np.tan(u)
        - beta * np.log(half_pi * w * np.cos(u) / (half_pi + beta * u))
    )
    if p.form is Form.S0:
        return p.gamma * ybar + p.delta
    return p.gamma * ybar + 2.0 / math.pi * beta * p.gamma * math.log(p.gamma) + p.delta


def sample_levy_inverse(p: LevyParams, rng: np.random.Generator, size=None):
    """Levy variates by inverting the closed-form CDF; uniforms near 1 map near ``delta``."""
    v = 1.0 - rng.random(size)
    # u == 0 would give v == 1 and an infinite draw; use the largest finite value instead
    v = np.where(v < 1.0, v, np.nextafter(1.0, 0.0))
    with np.errstate(divide="ignore"):
        return p.delta + p.gamma / (2.0 * erfcinv(v) ** 2)
