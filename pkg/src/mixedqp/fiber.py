"""Exactly evaluable SL_m(R)-valued functions on the torus.

A fiber map is an immutable expression tree over six node kinds: constant
matrices, Schrodinger transfer blocks [[v(theta)-E, -1], [1, 0]], unipotent
shears [[1, w], [0, 1]], pre-translations of the argument, products, and
inverses.  The family is closed under the cocycle group operations and covers
every concrete fiber used in the experiments.

All evaluation goes through ``eval_fiber_many`` so that single-point and
batched paths perform bit-identical arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import TorusPoint, wrap_array

#: determinant drift allowed at construction and monitored over products
DET_TOL = 1e-9
#: imaginary residue allowed when evaluating a real trig polynomial
IMAG_TOL = 1e-12
#: below this determinant magnitude an Inverse node refuses to evaluate
SINGULAR_TOL = 1e-12


class FiberError(ValueError):
    """Raised for ill-formed fiber expressions or singular inversions."""


# ---------------------------------------------------------------------------
# trigonometric polynomials (real-valued, finite spectrum)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """Finite Fourier sum sum_k c_k e^{2 pi i <k,theta>} with c_{-k} = conj(c_k).

    ``terms`` is a sorted tuple of (k, coefficient) with k an integer tuple.
    The Hermitian symmetry is validated at construction, so evaluations are
    real up to rounding.
    """

    terms: tuple[tuple[tuple[int, ...], complex], ...]

    def __post_init__(self) -> None:
        seen = dict(self.terms)
        if len(seen) != len(self.terms):
            raise FiberError("duplicate frequency in trig polynomial")
        dims = {len(k) for k, _ in self.terms}
        if len(dims) > 1:
            raise FiberError(f"mixed frequency dimensions {dims}")
        for k, c in self.terms:
            mk = tuple(-ki for ki in k)
            if mk not in seen:
                raise FiberError(f"missing conjugate frequency {mk} for {k}")
            if abs(np.conj(c) - seen[mk]) > IMAG_TOL:
                raise FiberError(f"coefficients at {k} and {mk} are not conjugate")

    @classmethod
    def from_coeffs(cls, coeffs: dict) -> "TrigPoly":
        """Build from {k tuple: coefficient}, dropping exact zeros."""
        items = []
        for k, c in coeffs.items():
            kt = tuple(int(ki) for ki in (k if isinstance(k, (tuple, list)) else (k,)))
            c = complex(c)
            if c != 0:
                items.append((kt, c))
        return cls(tuple(sorted(items)))

    @classmethod
    def constant(cls, value: float, d: int = 1) -> "TrigPoly":
        if value == 0:
            return cls(())
        return cls((((0,) * d, complex(value)),))

    @classmethod
    def cosine(cls, amplitude: float = 2.0, k: int = 1) -> "TrigPoly":
        """amplitude*cos(2 pi k theta) on the circle (amplitude 2 gives e_k+e_-k)."""
        half = complex(amplitude / 2.0)
        return cls.from_coeffs({(k,): half, (-k,): half})

    @property
    def dim(self) -> int:
        return len(self.terms[0][0]) if self.terms else 1

    @property
    def is_constant(self) -> bool:
        return all(all(ki == 0 for ki in k) for k, _ in self.terms)

    def coeff(self, k) -> complex:
        kt = tuple(int(ki) for ki in (k if isinstance(k, (tuple, list)) else (k,)))
        return dict(self.terms).get(kt, 0j)

    def eval_many(self, thetas: np.ndarray) -> np.ndarray:
        """Values at an (N, d) array of points; real parts after residue check."""
        total = np.zeros(thetas.shape[0], dtype=complex)
        for k, c in self.terms:
            total += c * np.exp(2j * np.pi * (thetas @ np.asarray(k, dtype=float)))
        residue = float(np.max(np.abs(total.imag))) if total.size else 0.0
        if residue > IMAG_TOL:
            raise FiberError(f"imaginary residue {residue:g} exceeds {IMAG_TOL:g}")
        return total.real

    def sup_norm(self, grid_points: int = 1024) -> float:
        from .torus import grid

        if not self.terms:
            return 0.0
        return float(np.max(np.abs(self.eval_many(grid(self.dim, grid_points)))))


def eval_potential(v: TrigPoly, theta: TorusPoint) -> float:
    """v(theta) for a real trig polynomial."""
    return float(v.eval_many(theta.array()[None, :])[0])


# ---------------------------------------------------------------------------
# SL_m matrices
# ---------------------------------------------------------------------------


def as_sl_matrix(entries, tol: float = DET_TOL) -> np.ndarray:
    """Validate an m x m array as a member of SL_m(R) (det within tol of 1)."""
    mat = np.asarray(entries, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise FiberError(f"matrix shape {mat.shape} is not square")
    if not np.all(np.isfinite(mat)):
        raise FiberError("non-finite matrix entries")
    det = float(np.linalg.det(mat))
    if abs(det - 1.0) > tol:
        raise FiberError(f"determinant {det!r} is not within {tol:g} of 1")
    return mat


def operator_norms(mats: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in an (N, m, m) stack.

    2x2 matrices use the closed form sigma_max^2 = (T + sqrt(T^2 - 4 det^2))/2
    with T the squared Frobenius norm; larger m falls back to batched SVD.
    """
    mats = np.asarray(mats, dtype=float)
    m = mats.shape[-1]
    if m == 2:
        t = np.einsum("...ij,...ij->...", mats, mats)
        det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
        disc = np.maximum(t * t - 4.0 * det * det, 0.0)
        return np.sqrt(np.maximum((t + np.sqrt(disc)) / 2.0, 0.0))
    return np.linalg.svd(mats, compute_uv=False)[..., 0]


def operator_norm(mat: np.ndarray) -> float:
    return float(operator_norms(np.asarray(mat, dtype=float)[None, ...])[0])


# ---------------------------------------------------------------------------
# fiber expression trees
# ---------------------------------------------------------------------------


class FiberMap:
    """Base class for fiber-expression nodes.  Instances are immutable."""

    @property
    def m(self) -> int:
        raise NotImplementedError

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(FiberMap):
    entries: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        as_sl_matrix(self.entries)

    @classmethod
    def of(cls, matrix) -> "Const":
        mat = as_sl_matrix(matrix)
        return cls(tuple(tuple(float(x) for x in row) for row in mat))

    @property
    def m(self) -> int:
        return len(self.entries)

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        mat = np.asarray(self.entries, dtype=float)
        return np.broadcast_to(mat, (thetas.shape[0],) + mat.shape).copy()


@dataclass(frozen=True)
class Schrodinger(FiberMap):
    """Transfer block [[v(theta) - energy, -1], [1, 0]] (always in SL_2)."""

    potential: TrigPoly
    energy: float

    @property
    def m(self) -> int:
        return 2

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        n = thetas.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = self.potential.eval_many(thetas) - self.energy
        out[:, 0, 1] = -1.0
        out[:, 1, 0] = 1.0
        return out


@dataclass(frozen=True)
class Shear(FiberMap):
    """Unipotent [[1, w], [0, 1]]."""

    w: float

    @property
    def m(self) -> int:
        return 2

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        n = thetas.shape[0]
        out = np.zeros((n, 2, 2))
        out[:, 0, 0] = 1.0
        out[:, 0, 1] = self.w
        out[:, 1, 1] = 1.0
        return out


@dataclass(frozen=True)
class Translate(FiberMap):
    """Evaluate the child at theta + beta."""

    child: FiberMap
    beta: TorusPoint

    @property
    def m(self) -> int:
        return self.child.m

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        if thetas.shape[1] != self.beta.dim:
            raise FiberError(
                f"translate step has dim {self.beta.dim}, points have dim {thetas.shape[1]}"
            )
        return self.child._eval(wrap_array(thetas + self.beta.array()))


@dataclass(frozen=True)
class Product(FiberMap):
    left: FiberMap
    right: FiberMap

    def __post_init__(self) -> None:
        if self.left.m != self.right.m:
            raise FiberError(f"product of {self.left.m}x and {self.right.m}x fibers")

    @property
    def m(self) -> int:
        return self.left.m

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        return self.left._eval(thetas) @ self.right._eval(thetas)


@dataclass(frozen=True)
class Inverse(FiberMap):
    child: FiberMap

    @property
    def m(self) -> int:
        return self.child.m

    def _eval(self, thetas: np.ndarray) -> np.ndarray:
        vals = self.child._eval(thetas)
        dets = np.linalg.det(vals)
        if np.any(np.abs(dets) < SINGULAR_TOL):
            raise FiberError("singular matrix under Inverse")
        return np.linalg.inv(vals)


def identity_fiber(m: int = 2) -> Const:
    return Const.of(np.eye(m))


def eval_fiber_many(fiber: FiberMap, thetas: np.ndarray) -> np.ndarray:
    """Evaluate at an (N, d) array of torus points; returns (N, m, m)."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2:
        raise FiberError(f"expected (N, d) points, got shape {thetas.shape}")
    return fiber._eval(thetas)


def eval_fiber(fiber: FiberMap, theta: TorusPoint) -> np.ndarray:
    """A(theta) as an (m, m) array."""
    return eval_fiber_many(fiber, theta.array()[None, :])[0]


def sup_distance(a: FiberMap, b: FiberMap, grid_points_per_dim: int = 256, d: int = 1) -> float:
    """Max operator-norm difference over a regular grid.

    This is a lower bound of the true uniform distance, converging as the
    grid refines.
    """
    if a.m != b.m:
        raise FiberError(f"dimension mismatch: {a.m} vs {b.m}")
    from .torus import grid

    pts = grid(d, grid_points_per_dim)
    return float(np.max(operator_norms(eval_fiber_many(a, pts) - eval_fiber_many(b, pts))))
