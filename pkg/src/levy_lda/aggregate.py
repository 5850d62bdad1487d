"""Institution-wide loss: the sum of independent risk cells.

A year with counts ``(n_1, ..., n_J)`` contributes the Levy law obtained by
adding the cells' partial sums. For Levy summands the square-root scales add,
so the component has ``sqrt(gamma) = sum_j n_j sqrt(gamma_j)`` and support
start ``sum_j n_j delta_j``, with weight ``prod_j pmf_j(n_j)``.

Components are held as a :class:`ComponentSet` over square-root scale ``s``,
support start ``d`` and weight ``w``; a cell is the set over its own counts
(zero included) and sets combine by Cartesian product. Per-vector sums and
products are taken over sorted parts, and the components are sorted too, so
the result does not depend on the order of the cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compound import (
    COMPONENT_BUDGET,
    CompoundModel,
    _as_array,
    _invert,
    _pdf_kernel,
    _shaped,
)
from .special import erfc
from .stable import tail_constant

__all__ = [
    "AggregateModel",
    "AggregateComponent",
    "ComponentSet",
    "cell_component_set",
    "combine",
    "aggregate_components",
    "aggregate_component_set",
    "aggregate_cdf",
    "aggregate_density",
    "aggregate_var",
    "aggregate_retained_mass",
]


@dataclass(frozen=True)
class AggregateComponent:
    weight: float
    gamma: float
    delta: float
    counts: tuple[int, ...]

    @property
    def location_s0(self) -> float:
        return self.delta + self.gamma


@dataclass(frozen=True)
class ComponentSet:
    """Parallel arrays: per-component parts ``(K, J)`` of ``s``, ``d``, ``w`` and counts."""

    s_parts: np.ndarray
    d_parts: np.ndarray
    w_parts: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return self.counts.shape[0]

    @property
    def s(self) -> np.ndarray:
        return np.sort(self.s_parts, axis=1).sum(axis=1)

    @property
    def d(self) -> np.ndarray:
        return np.sort(self.d_parts, axis=1).sum(axis=1)

    @property
    def w(self) -> np.ndarray:
        return np.sort(self.w_parts, axis=1).prod(axis=1)

    def canonical(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(s, d, w)`` sorted lexicographically; identical for any cell order."""
        s, d, w = self.s, self.d, self.w
        order = np.lexsort((w, d, s))
        return s[order], d[order], w[order]


@dataclass(frozen=True)
class AggregateModel:
    cells: tuple[CompoundModel, ...]
    budget: int = COMPONENT_BUDGET

    def __init__(self, cells: Sequence[CompoundModel], budget: int = COMPONENT_BUDGET):
        cells = tuple(cells)
        if not cells:
            raise ValueError("AggregateModel needs at least one cell")
        if budget < 1:
            raise ValueError("budget must be positive")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "budget", int(budget))

    @property
    def zero_prob(self) -> float:
        return math.prod(sorted(c.zero_prob for c in self.cells))


def cell_component_set(m: CompoundModel, n_max: int | None = None) -> ComponentSet:
    """The cell's count law as a component set (count zero included)."""
    b = m.bounds
    hi = b.n_upper if n_max is None else max(b.n_lower - 1, min(b.n_upper, int(n_max)))
    n = np.concatenate([[0], np.arange(b.n_lower, hi + 1)]).astype(float)
    w = np.exp(m.log_weights(n))
    sq = math.sqrt(m.severity.gamma)
    return ComponentSet(
        (n * sq)[:, None], (n * m.severity.delta)[:, None], w[:, None], n.astype(np.int64)[:, None]
    )


def combine(a: ComponentSet, b: ComponentSet, budget: int = COMPONENT_BUDGET) -> ComponentSet:
    """Component set of the sum of two independent parts."""
    size = len(a) * len(b)
    if size > budget:
        raise ValueError(f"{size} components exceed the budget of {budget}")
    ia = np.repeat(np.arange(len(a)), len(b))
    ib = np.tile(np.arange(len(b)), len(a))

    def join(x, y):
        return np.concatenate([x[ia], y[ib]], axis=1)

    return ComponentSet(
        join(a.s_parts, b.s_parts),
        join(a.d_parts, b.d_parts),
        join(a.w_parts, b.w_parts),
        join(a.counts, b.counts),
    )


def _cell_limits(a: AggregateModel, z_max: float | None) -> list[int | None]:
    if z_max is None:
        return [None] * len(a.cells)
    return [c.n_effective(z_max) for c in a.cells]


def aggregate_component_set(a: AggregateModel, z_max: float | None = None) -> ComponentSet:
    """All count vectors, or only those that can matter at points ``<= z_max``."""
    limits = _cell_limits(a, z_max)
    sizes = []
    for c, lim in zip(a.cells, limits):
        b = c.bounds
        hi = b.n_upper if lim is None else min(b.n_upper, lim)
        sizes.append(hi - b.n_lower + 2)
    total = math.prod(sizes)
    if total > a.budget:
        worst = int(np.argmax(sizes))
        raise ValueError(
            f"{total} count vectors exceed the budget of {a.budget}; reduce the retained "
            f"range of cell {worst} ({sizes[worst]} counts) or raise the budget"
        )
    out = cell_component_set(a.cells[0], limits[0])
    for c, lim in zip(a.cells[1:], limits[1:]):
        out = combine(out, cell_component_set(c, lim), a.budget)
    return out


def aggregate_components(a: AggregateModel) -> list[AggregateComponent]:
    """Nonzero count vectors with weight, scale and support start."""
    cs = aggregate_component_set(a)
    s, d, w = cs.s, cs.d, cs.w
    return [
        AggregateComponent(float(wk), float(sk * sk), float(dk), tuple(int(x) for x in nk))
        for sk, dk, wk, nk in zip(s, d, w, cs.counts)
        if sk > 0.0
    ]


def aggregate_retained_mass(a: AggregateModel) -> float:
    return math.prod(sorted(c.retained_mass for c in a.cells))


def _evaluate(a: AggregateModel, z, kernel, with_atom: bool):
    z = _as_array(z)
    flat = z.reshape(-1)
    out = np.zeros_like(flat)
    if flat.size == 0:
        return _shaped(z, out)
    s, d, w = aggregate_component_set(a, float(flat.max())).canonical()
    pos = s > 0.0
    s, d, w = s[pos], d[pos], w[pos]
    for start in range(0, s.size, 4096):
        sl = slice(start, start + 4096)
        dz = flat[:, None] - d[None, sl]
        inside = dz > 0.0
        vals = kernel(s[sl] ** 2, np.where(inside, dz, 1.0))
        out += np.where(inside, vals, 0.0) @ w[sl]
    if with_atom:
        out = np.minimum(out + np.where(flat >= 0.0, a.zero_prob, 0.0), 1.0)
    return _shaped(z, out)


def aggregate_cdf(a: AggregateModel, z):
    return _evaluate(a, z, lambda g, dz: erfc(np.sqrt(g / (2.0 * dz))), True)


def aggregate_density(a: AggregateModel, z):
    return _evaluate(a, z, _pdf_kernel, False)


def aggregate_var(a: AggregateModel, q: float, tol: float = 1e-11) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    # tail scale: for a sum of z^-1/2 tails the coefficients add
    scale = math.fsum(c.asymptotic_scale() for c in a.cells)
    scale = max(scale, 2.0 * tail_constant(0.5) * 1e-300)
    return _invert(
        lambda z: float(aggregate_cdf(a, z)), a.zero_prob, aggregate_retained_mass(a), q, tol, scale
    )
