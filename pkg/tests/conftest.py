"""Shared randomized generators for cocycle and fiber-expression tests.

Tree generators keep coefficients small (leaf norms below ~2, few product
nodes) so that grid evaluations stay well inside the determinant and
associativity tolerances, which degrade with the product of node norms.
"""

from __future__ import annotations

import numpy as np
import pytest

from mixedqp.cocycle import QpCocycle
from mixedqp.fiber import Const, FiberMap, Inverse, Product, Schrodinger, Shear, Translate, TrigPoly
from mixedqp.torus import wrap


def random_sl2(rng: np.random.Generator) -> np.ndarray:
    """Random SL_2 matrix with entries of moderate size (det forced to 1)."""
    while True:
        a = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        b = rng.uniform(-0.8, 0.8)
        c = rng.uniform(-0.8, 0.8)
        d = (1.0 + b * c) / a
        if abs(d) < 2.5:
            return np.array([[a, b], [c, d]])


def random_trig(rng: np.random.Generator, d: int = 1, max_degree: int = 2) -> TrigPoly:
    coeffs = {}
    const = rng.uniform(-1.0, 1.0)
    if abs(const) > 1e-3:
        coeffs[(0,) * d] = complex(const)
    for _ in range(rng.integers(0, 3)):
        k = tuple(int(x) for x in rng.integers(-max_degree, max_degree + 1, size=d))
        if all(ki == 0 for ki in k):
            continue
        c = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        coeffs[k] = coeffs.get(k, 0j) + c
        mk = tuple(-ki for ki in k)
        coeffs[mk] = coeffs.get(mk, 0j) + np.conj(c)
    return TrigPoly.from_coeffs(coeffs)


def random_fiber(rng: np.random.Generator, depth: int, d: int = 1) -> FiberMap:
    """Random SL_2 fiber expression of the given maximal depth."""
    if depth <= 1:
        kind = rng.choice(["const", "schrodinger", "shear"])
        if kind == "const":
            return Const.of(random_sl2(rng))
        if kind == "schrodinger":
            return Schrodinger(random_trig(rng, d), float(rng.uniform(-1.5, 1.5)))
        return Shear(float(rng.uniform(-1.0, 1.0)))
    kind = rng.choice(["leaf", "translate", "product", "inverse"], p=[0.35, 0.25, 0.25, 0.15])
    if kind == "leaf":
        return random_fiber(rng, 1, d)
    if kind == "translate":
        return Translate(random_fiber(rng, depth - 1, d), wrap(rng.random(d)))
    if kind == "inverse":
        return Inverse(random_fiber(rng, depth - 1, d))
    return Product(random_fiber(rng, depth - 1, d), random_fiber(rng, depth - 1, d))


def random_cocycle(rng: np.random.Generator, depth: int = 3, d: int = 1) -> QpCocycle:
    return QpCocycle(wrap(rng.random(d)), random_fiber(rng, depth, d))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
