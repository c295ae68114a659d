import math

import numpy as np
import pytest

from conftest import random_cocycle
from mixedqp.cocycle import (
    QpCocycle,
    compose,
    evaluation_distance,
    identity_cocycle,
    inverse,
    word_product,
)
from mixedqp.fiber import Const, Schrodinger, TrigPoly, eval_fiber, identity_fiber
from mixedqp.torus import torus_dist, wrap


def test_identity_is_neutral(rng):
    e = identity_cocycle()
    for _ in range(10):
        g = random_cocycle(rng)
        assert evaluation_distance(compose(e, g), g) < 1e-12
        assert evaluation_distance(compose(g, e), g) < 1e-12


def test_compose_with_inverse_gives_identity(rng):
    e = identity_cocycle()
    for _ in range(10):
        g = random_cocycle(rng, depth=3)
        assert evaluation_distance(compose(g, inverse(g)), e, 256) < 1e-9
        assert evaluation_distance(compose(inverse(g), g), e, 256) < 1e-9


def test_compose_schrodinger_example():
    # direct evaluation of the composition formula with v(0.5) = 2cos(pi) = -2
    g = QpCocycle(wrap([0.25]), Schrodinger(TrigPoly.cosine(2.0), 0.0))
    h = QpCocycle(wrap([0.5]), identity_fiber(2))
    gh = compose(g, h)
    assert gh.freq.coords == pytest.approx((0.75,))
    assert np.allclose(eval_fiber(gh.fiber, wrap([0.0])), [[-2.0, -1.0], [1.0, 0.0]], atol=1e-12)


def test_inverse_examples(rng):
    e = identity_cocycle()
    assert evaluation_distance(inverse(e), e) < 1e-12
    for _ in range(10):
        g = random_cocycle(rng, depth=3)
        assert evaluation_distance(inverse(inverse(g)), g, 64) < 1e-9


def test_inverse_of_constant_diag():
    d = np.diag([2.0, 0.5])
    g = QpCocycle(wrap([0.25]), Const.of(d))
    gi = inverse(g)
    assert gi.freq.coords == pytest.approx((0.75,))
    # Translate is a no-op on constants
    assert np.allclose(eval_fiber(gi.fiber, wrap([0.123])), np.diag([0.5, 2.0]), atol=1e-12)


def test_frequency_projection_is_homomorphism(rng):
    for _ in range(50):
        g, h = random_cocycle(rng), random_cocycle(rng)
        combined = compose(g, h)
        expected = wrap(g.freq.array() + h.freq.array())
        assert torus_dist(combined.freq, expected) < 1e-12


def test_word_product_single_and_constants(rng):
    g = random_cocycle(rng)
    assert word_product([g]) is g

    mat = np.array([[1.0, 0.7], [0.0, 1.0]])
    atom = QpCocycle(wrap([0.125]), Const.of(mat))
    n = 5
    word = word_product([atom] * n)
    assert torus_dist(word.freq, wrap([n * 0.125])) < 1e-12
    expected = np.linalg.matrix_power(mat, n)
    assert np.allclose(eval_fiber(word.fiber, wrap([0.3])), expected, atol=1e-10)


def test_word_product_matches_unrolled_composition(rng):
    for _ in range(10):
        gs = [random_cocycle(rng, depth=2) for _ in range(rng.integers(2, 6))]
        word = word_product(gs)
        unrolled = gs[0]
        for g in gs[1:]:
            unrolled = compose(g, unrolled)
        assert evaluation_distance(word, unrolled, 64) < 1e-9


def test_word_product_rejects_empty():
    with pytest.raises(ValueError):
        word_product([])


def test_associativity_on_random_triples(rng):
    for _ in range(30):
        g, h, k = (random_cocycle(rng, depth=3) for _ in range(3))
        left = compose(compose(g, h), k)
        right = compose(g, compose(h, k))
        assert evaluation_distance(left, right, 64) < 1e-9


def test_word_product_cost_structure(rng):
    # node count grows linearly (one Product + one Translate per composition)
    # while the balanced build keeps recursion depth logarithmic, so one
    # evaluation costs O(n) matrix multiplies at bounded stack depth
    from mixedqp.fiber import FiberMap

    def stats(node: FiberMap) -> tuple[int, int]:
        children = [
            getattr(node, name)
            for name in ("child", "left", "right")
            if hasattr(node, name)
        ]
        if not children:
            return 1, 1
        counts, depths = zip(*(stats(c) for c in children))
        return 1 + sum(counts), 1 + max(depths)

    atom = random_cocycle(rng, depth=1)
    for n in (4, 16, 64, 256):
        word = word_product([atom] * n)
        nodes, depth = stats(word.fiber)
        assert nodes == 3 * n - 2
        assert depth <= 3 * math.ceil(math.log2(n)) + 1


def test_word_product_explicit_displayed_form(rng):
    # fiber of g2 o g1 o g0 at theta is A2(theta+a0+a1) A1(theta+a0) A0(theta)
    gs = [random_cocycle(rng, depth=2) for _ in range(3)]
    word = word_product(gs)
    theta = wrap(rng.random(1))
    t1 = wrap(theta.array() + gs[0].freq.array())
    t2 = wrap(theta.array() + gs[0].freq.array() + gs[1].freq.array())
    expected = (
        eval_fiber(gs[2].fiber, t2) @ eval_fiber(gs[1].fiber, t1) @ eval_fiber(gs[0].fiber, theta)
    )
    assert np.allclose(eval_fiber(word.fiber, theta), expected, atol=1e-9)
