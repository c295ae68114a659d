"""The group of quasiperiodic cocycles.

A quasiperiodic cocycle is a pair (frequency alpha, fiber map A).  Composition
and inversion follow

    (alpha, A) o (beta, B) = (alpha + beta, (A o tau_beta) B)
    (alpha, A)^-1          = (-alpha, (A o tau_-alpha)^-1)

realized structurally on the fiber expression trees.  Equality of cocycles is
always evaluation equality on a grid within tolerance, never structural tree
equality: many trees denote one function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fiber import (
    FiberMap,
    Inverse,
    Product,
    Translate,
    eval_fiber_many,
    identity_fiber,
    operator_norms,
)
from .torus import FrequencyVector, translate, wrap


@dataclass(frozen=True)
class QpCocycle:
    freq: FrequencyVector
    fiber: FiberMap

    @property
    def d(self) -> int:
        return self.freq.dim

    @property
    def m(self) -> int:
        return self.fiber.m


def identity_cocycle(d: int = 1, m: int = 2) -> QpCocycle:
    return QpCocycle(wrap([0.0] * d), identity_fiber(m))


def compose(g: QpCocycle, h: QpCocycle) -> QpCocycle:
    """g o h; the fiber of the composition is (A o tau_beta) B."""
    if g.d != h.d or g.m != h.m:
        raise ValueError(f"dimension mismatch: ({g.d},{g.m}) vs ({h.d},{h.m})")
    return QpCocycle(
        translate(g.freq, h.freq),
        Product(Translate(g.fiber, h.freq), h.fiber),
    )


def inverse(g: QpCocycle) -> QpCocycle:
    neg = -g.freq
    return QpCocycle(neg, Inverse(Translate(g.fiber, neg)))


def word_product(gs: Sequence[QpCocycle]) -> QpCocycle:
    """Right-to-left product gs[n-1] o ... o gs[1] o gs[0].

    Built as a balanced composition tree so evaluation recursion depth stays
    O(log n); associativity makes this semantically identical to the left comb.
    """
    if len(gs) == 0:
        raise ValueError("empty word")

    def build(lo: int, hi: int) -> QpCocycle:
        if hi - lo == 1:
            return gs[lo]
        mid = (lo + hi) // 2
        # indices above mid act later, hence compose on the left
        return compose(build(mid, hi), build(lo, mid))

    return build(0, len(gs))


def evaluation_distance(g: QpCocycle, h: QpCocycle, grid_points_per_dim: int = 64) -> float:
    """Frequency circle distance plus max grid operator-norm fiber difference."""
    from .torus import grid, torus_dist

    if g.d != h.d or g.m != h.m:
        raise ValueError("dimension mismatch")
    pts = grid(g.d, grid_points_per_dim)
    fiber_gap = float(
        np.max(operator_norms(eval_fiber_many(g.fiber, pts) - eval_fiber_many(h.fiber, pts)))
    )
    return torus_dist(g.freq, h.freq) + fiber_gap
