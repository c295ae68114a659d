"""Finitely supported probability measures and exact transport distances.

Measures live on the torus, on the reals (noise laws), or on the cocycle
group.  Support is always finite: convolutions, Fourier coefficients and the
Wasserstein-1 distance are then exact.  Continuous noise laws enter only
through user-chosen quadrature atoms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .cocycle import QpCocycle
from .fiber import sup_distance
from .torus import TorusPoint, torus_dist, wrap

#: atoms closer than this (in the ambient metric) merge at construction
MERGE_TOL = 1e-12
#: weights must sum to 1 within this
WEIGHT_TOL = 1e-12
#: convolution powers refuse to materialize more atoms than this
ATOM_CAP = 10**6

_QUANTUM = int(round(1.0 / MERGE_TOL))


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported probability measure: parallel atom/weight tuples."""

    atoms: tuple
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.atoms) != len(self.weights):
            raise MeasureError("atoms and weights differ in length")
        if not self.atoms:
            raise MeasureError("a probability measure needs at least one atom")
        if any(w <= 0 for w in self.weights):
            raise MeasureError("weights must be strictly positive")
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > WEIGHT_TOL:
            raise MeasureError(f"weights sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.atoms)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def cumulative(self) -> np.ndarray:
        cum = np.cumsum(self.weight_array())
        cum[-1] = 1.0  # guard the top end against the <= 1e-12 slack
        return cum


def _merge(atoms: Sequence, weights: Sequence[float], key: Callable) -> AtomicMeasure:
    merged: dict = {}
    order: list = []
    for atom, w in zip(atoms, weights):
        k = key(atom)
        if k in merged:
            prev_atom, prev_w = merged[k]
            merged[k] = (prev_atom, prev_w + float(w))
        else:
            merged[k] = (atom, float(w))
            order.append(k)
    kept = [merged[k] for k in order]
    return AtomicMeasure(tuple(a for a, _ in kept), tuple(w for _, w in kept))


def _torus_key(p: TorusPoint) -> tuple[int, ...]:
    return tuple(int(np.floor(c * _QUANTUM + 0.5)) % _QUANTUM for c in p.coords)


def _real_key(x: float) -> int:
    return int(np.floor(float(x) * _QUANTUM + 0.5))


def _cocycle_key(g: QpCocycle):
    return (_torus_key(g.freq), g.fiber)


def _torus_measure_from_arrays(points: np.ndarray, weights: np.ndarray) -> AtomicMeasure:
    """Vectorized quantized-key merge; keeps the first occurrence of each cell."""
    keys = np.floor(points * _QUANTUM + 0.5).astype(np.int64) % _QUANTUM
    _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    merged_w = np.zeros(len(first))
    np.add.at(merged_w, inv.ravel(), weights)
    order = np.argsort(first)  # preserve first-seen order
    atoms = tuple(TorusPoint(tuple(float(c) for c in points[first[i]])) for i in order)
    return AtomicMeasure(atoms, tuple(float(w) for w in merged_w[order]))


def torus_measure(points: Sequence[TorusPoint], weights: Sequence[float]) -> AtomicMeasure:
    dims = {p.dim for p in points}
    if len(dims) > 1:
        raise MeasureError(f"mixed point dimensions {dims}")
    arr = np.array([p.coords for p in points], dtype=float)
    return _torus_measure_from_arrays(arr, np.asarray(weights, dtype=float))


def real_measure(values: Sequence[float], weights: Sequence[float]) -> AtomicMeasure:
    return _merge([float(v) for v in values], weights, _real_key)


def cocycle_measure(cocycles: Sequence[QpCocycle], weights: Sequence[float]) -> AtomicMeasure:
    dims = {(g.d, g.m) for g in cocycles}
    if len(dims) > 1:
        raise MeasureError(f"mixed cocycle dimensions {dims}")
    return _merge(cocycles, weights, _cocycle_key)


def dirac(atom) -> AtomicMeasure:
    return AtomicMeasure((atom,), (1.0,))


# ---------------------------------------------------------------------------
# sampling and push-forward
# ---------------------------------------------------------------------------


def sample_index(nu: AtomicMeasure, rng: np.random.Generator) -> int:
    """Index of one atom drawn with probability equal to its weight."""
    return int(np.searchsorted(nu.cumulative(), rng.random(), side="right"))


def sample_indices(nu: AtomicMeasure, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.searchsorted(nu.cumulative(), rng.random(n), side="right").astype(np.int64)


def sample_atom(nu: AtomicMeasure, rng: np.random.Generator):
    return nu.atoms[sample_index(nu, rng)]


def pushforward_freq(nu: AtomicMeasure) -> AtomicMeasure:
    """Frequency marginal of a cocycle measure (coinciding atoms merge)."""
    return torus_measure([g.freq for g in nu.atoms], nu.weights)


# ---------------------------------------------------------------------------
# convolution and Fourier coefficients on the torus
# ---------------------------------------------------------------------------


def convolve(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    """Law of the mod-1 sum of independent draws; near-duplicates merge."""
    from .torus import wrap_array

    if len(mu) * len(nu) > ATOM_CAP:
        raise MeasureError(
            f"convolution would materialize {len(mu) * len(nu)} atoms (cap {ATOM_CAP}); "
            "use the Fourier-side closed forms instead"
        )
    a = np.array([p.coords for p in mu.atoms], dtype=float)
    b = np.array([p.coords for p in nu.atoms], dtype=float)
    sums = wrap_array((a[:, None, :] + b[None, :, :]).reshape(-1, a.shape[1]))
    weights = (mu.weight_array()[:, None] * nu.weight_array()[None, :]).ravel()
    return _torus_measure_from_arrays(sums, weights)


def convolution_power(mu: AtomicMeasure, n: int) -> AtomicMeasure:
    if n < 0:
        raise MeasureError("negative convolution power")
    d = mu.atoms[0].dim
    out = dirac(wrap([0.0] * d))
    for _ in range(n):
        out = convolve(out, mu)
    return out


def fourier_coeff(mu: AtomicMeasure, k) -> complex:
    """mu_hat(k) = sum_i w_i e^{2 pi i <k, alpha_i>}; modulus at most 1."""
    from .torus import character

    return complex(sum(w * character(k, p) for p, w in zip(mu.atoms, mu.weights)))


# ---------------------------------------------------------------------------
# metrics and exact Wasserstein-1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GMetric:
    """Product metric on cocycles: frequency distance plus grid sup-distance."""

    grid_points_per_dim: int = 256
    freq_weight: float = 1.0
    fiber_weight: float = 1.0

    @classmethod
    def default_for(cls, d: int) -> "GMetric":
        return cls(grid_points_per_dim=256 if d == 1 else (64 if d == 2 else 16))


def g_distance(g: QpCocycle, h: QpCocycle, metric: GMetric | None = None) -> float:
    if g.d != h.d or g.m != h.m:
        raise MeasureError("dimension mismatch between cocycles")
    metric = metric or GMetric.default_for(g.d)
    return metric.freq_weight * torus_dist(g.freq, h.freq) + metric.fiber_weight * sup_distance(
        g.fiber, h.fiber, metric.grid_points_per_dim, d=g.d
    )


def cost_matrix(nu: AtomicMeasure, nu2: AtomicMeasure, dist: Callable) -> np.ndarray:
    return np.array([[float(dist(a, b)) for b in nu2.atoms] for a in nu.atoms])


def wasserstein1(nu: AtomicMeasure, nu2: AtomicMeasure, dist: Callable) -> float:
    """Exact optimal-transport cost between two atomic measures.

    Solves the primal transportation LP (equivalently the Lipschitz dual, by
    Kantorovich duality) with the HiGHS simplex solver; optima land on exact
    vertices of the transportation polytope.
    """
    cost = cost_matrix(nu, nu2, dist)
    return wasserstein1_from_cost(cost, nu.weight_array(), nu2.weight_array())


def wasserstein1_from_cost(cost: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> float:
    n, m = cost.shape
    if n == 1:  # all mass moves from one source
        return float(cost[0] @ w2)
    if m == 1:
        return float(cost[:, 0] @ w1)
    rows = []
    cols = []
    for i in range(n):
        rows.append(np.full(m, i))
        cols.append(np.arange(m) + i * m)
    for j in range(m):
        rows.append(np.full(n, n + j))
        cols.append(np.arange(n) * m + j)
    a_eq = sparse.csr_matrix(
        (np.ones(2 * n * m), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n + m, n * m),
    )
    b_eq = np.concatenate([w1, w2])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise MeasureError(f"transport solver failed: {res.message}")
    return float(res.fun)


def wasserstein1_torus(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    return wasserstein1(mu, nu, torus_dist)


def wasserstein1_cocycle(
    mu: AtomicMeasure, nu: AtomicMeasure, metric: GMetric | None = None
) -> float:
    metric = metric or GMetric.default_for(mu.atoms[0].d)
    return wasserstein1(mu, nu, lambda a, b: g_distance(a, b, metric))
