"""Arithmetic, metric, sampling and characters on the d-torus (R/Z)^d.

Points are stored as tuples of floats in [0, 1); every operation wraps its
result back into that box.  The metric is the max over coordinates of the
circle distance, so it is bounded by 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: group-law checks tolerate accumulated rounding up to this
GROUP_TOL = 1e-12


def wrap_array(values: np.ndarray) -> np.ndarray:
    """Coordinatewise mod 1 into [0, 1); handles the x % 1.0 == 1.0 corner."""
    out = np.mod(values, 1.0)
    # tiny negatives wrap to exactly 1.0 in IEEE mod; fold them to 0
    out[out >= 1.0] = 0.0
    return out


@dataclass(frozen=True)
class TorusPoint:
    """A point of (R/Z)^d; coordinates are dimensionless angles in [0, 1)."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        for c in self.coords:
            if not np.isfinite(c):
                raise ValueError(f"non-finite torus coordinate {c!r}")
            if not 0.0 <= c < 1.0:
                raise ValueError(f"coordinate {c!r} outside [0, 1); use wrap()")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __neg__(self) -> "TorusPoint":
        return wrap([-c for c in self.coords])


# the translation step plays a distinct role but is the same kind of value
FrequencyVector = TorusPoint


def wrap(values) -> TorusPoint:
    """Reduce arbitrary finite real coordinates mod 1 into a TorusPoint."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input to wrap")
    return TorusPoint(tuple(float(c) for c in wrap_array(arr)))


def _check_dim(a: TorusPoint, b: TorusPoint) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def translate(theta: TorusPoint, alpha: TorusPoint) -> TorusPoint:
    """theta + alpha mod 1, coordinatewise."""
    _check_dim(theta, alpha)
    return wrap(theta.array() + alpha.array())


def circle_dist_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-coordinate circle distance min(|a-b|, 1-|a-b|), vectorized."""
    diff = np.abs(a - b)
    return np.minimum(diff, 1.0 - diff)


def torus_dist(a: TorusPoint, b: TorusPoint) -> float:
    """Max over coordinates of the circle distance; a metric bounded by 1/2."""
    _check_dim(a, b)
    return float(np.max(circle_dist_array(a.array(), b.array())))


def character(k, theta: TorusPoint) -> complex:
    """e^{2 pi i <k, theta>} for an integer vector k."""
    kv = np.atleast_1d(np.asarray(k, dtype=int))
    if kv.shape != (theta.dim,):
        raise ValueError(f"character index has dim {kv.shape} but point has dim {theta.dim}")
    return complex(np.exp(2j * np.pi * float(kv @ theta.array())))


def characters_array(k, thetas: np.ndarray) -> np.ndarray:
    """Vectorized character over an (N, d) array of points."""
    kv = np.atleast_1d(np.asarray(k, dtype=float))
    return np.exp(2j * np.pi * (thetas @ kv))


def haar_sample(rng: np.random.Generator, d: int) -> TorusPoint:
    """One point with i.i.d. uniform [0, 1) coordinates from the given state."""
    return TorusPoint(tuple(float(c) for c in rng.random(d)))


def grid(d: int, points_per_dim: int) -> np.ndarray:
    """Regular evaluation grid on the torus, shape (points_per_dim**d, d)."""
    if points_per_dim < 1:
        raise ValueError("grid needs at least one point per dimension")
    axis = np.arange(points_per_dim, dtype=float) / points_per_dim
    if d == 1:
        return axis[:, None]
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)
