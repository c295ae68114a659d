"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Criteria are property-based with exact small-case oracles and analytically
forced values; every tolerance is pinned here.  Runtime limits are asserted
with the measured wall-clock of the criterion body.
"""

import math
from contextlib import contextmanager
from pathlib import Path
from time import perf_counter

import numpy as np
import pytest
import yaml

from conftest import random_cocycle
from test_measures import enumerate_transport_cost

from mixedqp.cli import main as cli_main
from mixedqp.cocycle import QpCocycle, compose, evaluation_distance, identity_cocycle, inverse
from mixedqp.ergodicity import (
    cesaro_markov_average,
    check_fourier_criterion,
    uniform_cesaro_scan,
)
from mixedqp.fiber import Const, Schrodinger, TrigPoly
from mixedqp.base_dynamics import Observable, estimate_base_tails, freq_table
from mixedqp.lyapunov import (
    draw_transfer_symbols,
    estimate_fiber_tails,
    estimate_lyapunov,
    raw_product,
    semicontinuity_scan,
)
from mixedqp.measures import (
    cocycle_measure,
    convolve,
    cost_matrix,
    dirac,
    fourier_coeff,
    g_distance,
    torus_measure,
    wasserstein1_from_cost,
    GMetric,
)
from mixedqp.torus import torus_dist, wrap

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
LOG2 = math.log(2.0)
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@contextmanager
def criterion(capsys, num: int, desc: str, budget_seconds: float):
    start = perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"criterion {num:2d} FAIL        {desc}")
        raise
    elapsed = perf_counter() - start
    with capsys.disabled():
        print(f"criterion {num:2d} PASS {elapsed:6.1f}s {desc}")
    assert elapsed < budget_seconds, f"criterion {num} exceeded {budget_seconds}s ({elapsed:.1f}s)"


def walk_measure():
    return cocycle_measure(
        [
            QpCocycle(wrap([0.0]), Const.of(np.diag([2.0, 0.5]))),
            QpCocycle(wrap([0.0]), Const.of(np.diag([0.5, 2.0]))),
        ],
        [0.5, 0.5],
    )


def random_atomic(rng, max_atoms=5):
    n = int(rng.integers(1, max_atoms + 1))
    w = rng.random(n) + 0.05
    return torus_measure([wrap(rng.random(1)) for _ in range(n)], w / w.sum())


def test_criterion_1_group_laws(capsys):
    with criterion(capsys, 1, "group laws on 200 random triples (64-grid, 1e-9)", 10.0):
        rng = np.random.default_rng(101)
        e = identity_cocycle()
        for _ in range(200):
            depth = int(rng.integers(1, 6))
            g, h, k = (random_cocycle(rng, depth) for _ in range(3))
            assoc_gap = evaluation_distance(
                compose(compose(g, h), k), compose(g, compose(h, k)), 64
            )
            assert assoc_gap < 1e-9
            inv_gap = evaluation_distance(compose(g, inverse(g)), e, 64)
            assert inv_gap < 1e-9


def test_criterion_2_fourier_diagonalization(capsys):
    with criterion(capsys, 2, "convolution theorem on 100 measure pairs, |k| <= 20", 5.0):
        rng = np.random.default_rng(202)
        for _ in range(100):
            mu, nu = random_atomic(rng), random_atomic(rng)
            conv = convolve(mu, nu)
            for k in range(-20, 21):
                gap = abs(
                    fourier_coeff(conv, [k]) - fourier_coeff(mu, [k]) * fourier_coeff(nu, [k])
                )
                assert gap < 1e-12


def test_criterion_3_ergodicity_battery(capsys):
    with criterion(capsys, 3, "ergodicity battery: rational fails, golden passes", 30.0):
        half = dirac(wrap([0.5]))
        report = check_fourier_criterion(half, cutoff=10)
        assert report.verdict == "fail" and report.witness_k == (2,)
        mode2 = TrigPoly.from_coeffs({(2,): 1.0 + 0j, (-2,): 1.0 + 0j})
        for n in (1, 2, 7, 100, 10_000):
            assert cesaro_markov_average(half, mode2, wrap([0.0]), n) == pytest.approx(2.0)

        golden = dirac(wrap([GOLDEN]))
        report = check_fourier_criterion(golden, cutoff=50)
        assert report.verdict == "pass"
        n_bound = int(math.ceil(2.0 / (1e-3 * report.min_gap)))
        scan = uniform_cesaro_scan(golden, TrigPoly.cosine(2.0), n_bound, 64)
        assert scan < 1e-3


def _mild_cocycle(rng) -> QpCocycle:
    """Random cocycle with near-isometric fiber.

    Keeps 40-step raw products at O(1e2) entries so the 1e-8 absolute
    entrywise tolerance is meaningful (fp error scales with the product
    magnitude).
    """
    kind = rng.choice(["rotation", "shear", "schrodinger"])
    if kind == "rotation":
        phi = rng.uniform(0, 2 * np.pi)
        fiber = Const.of([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    elif kind == "shear":
        from mixedqp.fiber import Shear

        fiber = Shear(float(rng.uniform(-0.3, 0.3)))
    else:
        fiber = Schrodinger(TrigPoly.cosine(float(rng.uniform(0, 0.3))),
                            float(rng.uniform(-0.5, 0.5)))
    if rng.random() < 0.3:
        from mixedqp.fiber import Translate

        fiber = Translate(fiber, wrap(rng.random(1)))
    return QpCocycle(wrap(rng.random(1)), fiber)


def test_criterion_4_cocycle_identity(capsys):
    with criterion(capsys, 4, "transfer identity vs raw products, 100 configs", 10.0):
        rng = np.random.default_rng(404)
        for trial in range(100):
            n_atoms = int(rng.integers(1, 4))
            w = rng.random(n_atoms) + 0.1
            nu = cocycle_measure(
                [_mild_cocycle(rng) for _ in range(n_atoms)], w / w.sum()
            )
            n, m = int(rng.integers(1, 21)), int(rng.integers(1, 21))
            theta = wrap(rng.random(1))
            symbols = draw_transfer_symbols(nu, n + m, seed=trial, sample_index=0)
            whole = raw_product(nu, symbols, theta)
            first = raw_product(nu, symbols[:n], theta)
            advanced = wrap(theta.array() + freq_table(nu)[symbols[:n]].sum(axis=0))
            second = raw_product(nu, symbols[n:], advanced)
            assert np.max(np.abs(second @ first - whole)) < 1e-8


def test_criterion_5_exact_exponents(capsys):
    with criterion(capsys, 5, "exponent oracles: diag, walk, free transfer", 120.0):
        diag = dirac(QpCocycle(wrap([GOLDEN]), Const.of(np.diag([2.0, 0.5]))))
        est = estimate_lyapunov(diag, n=1000, samples=16, theta_policy="haar", seed=50)
        assert est.estimate == pytest.approx(LOG2, abs=1e-6)

        walk = walk_measure()
        est = estimate_lyapunov(
            walk, n=10_000, samples=1000, theta_policy="fixed", theta=wrap([0.0]),
            seed=51, skip_ergodicity_check=True,
        )
        assert abs(est.estimate) < 0.02

        free3 = dirac(QpCocycle(wrap([GOLDEN]), Schrodinger(TrigPoly.constant(0.0), 3.0)))
        est = estimate_lyapunov(free3, n=10_000, samples=8, theta_policy="haar", seed=52)
        assert est.estimate == pytest.approx(math.log((3.0 + math.sqrt(5.0)) / 2.0), abs=0.01)

        free1 = dirac(QpCocycle(wrap([GOLDEN]), Schrodinger(TrigPoly.constant(0.0), 1.0)))
        est = estimate_lyapunov(free1, n=10_000, samples=8, theta_policy="haar", seed=53)
        assert abs(est.estimate) < 0.02


def test_criterion_6_wasserstein_oracle(capsys):
    with criterion(capsys, 6, "exact transport vs plan enumeration (circle and cocycles)", 10.0):
        rng = np.random.default_rng(606)
        for _ in range(50):
            mu, nu = random_atomic(rng, 3), random_atomic(rng, 3)
            cost = cost_matrix(mu, nu, torus_dist)
            oracle = enumerate_transport_cost(cost, mu.weights, nu.weights)
            solver = wasserstein1_from_cost(cost, mu.weight_array(), nu.weight_array())
            assert solver == pytest.approx(oracle, abs=1e-12)
        metric = GMetric.default_for(1)
        for _ in range(50):
            na, nb = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            wa, wb = rng.random(na) + 0.05, rng.random(nb) + 0.05
            mu = cocycle_measure([random_cocycle(rng, 2) for _ in range(na)], wa / wa.sum())
            nu = cocycle_measure([random_cocycle(rng, 2) for _ in range(nb)], wb / wb.sum())
            cost = cost_matrix(mu, nu, lambda a, b: g_distance(a, b, metric))
            oracle = enumerate_transport_cost(cost, mu.weights, nu.weights)
            solver = wasserstein1_from_cost(cost, mu.weight_array(), nu.weight_array())
            assert solver == pytest.approx(oracle, abs=1e-12)


def test_criterion_7_base_tails_hoeffding(capsys):
    with criterion(capsys, 7, "base tails below Hoeffding bound, positive rate", 60.0):
        nu = cocycle_measure(
            [
                QpCocycle(wrap([0.0]), Const.of(np.eye(2))),
                QpCocycle(wrap([0.5]), Const.of(np.eye(2))),
            ],
            [0.5, 0.5],
        )
        phi = Observable.indicator(0, 2)
        eps, samples = 0.1, 100_000
        report = estimate_base_tails(
            nu, phi, eps, [50, 100, 200], samples, wrap([0.0]), seed=70
        )
        for n, tail, _ in report.rows():
            bound = 2.0 * math.exp(-2.0 * n * eps * eps)
            stderr = math.sqrt(max(bound * (1 - bound), 1e-12) / samples)
            assert tail < bound + 3.0 * stderr
        assert not report.censored
        assert report.rate is not None and report.rate > 0


def test_criterion_8_fiber_upper_tails(capsys):
    with criterion(capsys, 8, "fiber upper tails: negative slope, R^2 >= 0.9", 120.0):
        walk = walk_measure()
        eps = 0.1 * LOG2
        report = estimate_fiber_tails(
            walk, wrap([0.0]), eps, 0.0, [100, 200, 400], 10_000, seed=80
        )
        assert not report.censored
        assert report.rate is not None and report.rate > 0  # negative slope of log tail
        assert report.r_squared is not None and report.r_squared >= 0.9

        diag = dirac(QpCocycle(wrap([GOLDEN]), Const.of(np.diag([2.0, 0.5]))))
        zero = estimate_fiber_tails(
            diag, wrap([0.0]), eps, LOG2, [100, 200, 400], 2000, seed=81
        )
        assert zero.tails == (0.0, 0.0, 0.0)


def test_criterion_9_upper_semicontinuity(capsys):
    with criterion(capsys, 9, "upper semicontinuity along the diag family", 60.0):
        def family(t: float):
            return dirac(
                QpCocycle(wrap([GOLDEN]), Const.of(np.diag([2.0 ** (1 - t), 2.0 ** (t - 1)])))
            )

        nu0 = family(0.0)
        rows = semicontinuity_scan(
            nu0, [family(t) for t in (0.0, 0.05, 0.1)], n=400, samples=16, seed=90
        )
        base = rows[0].estimate
        assert rows[0].w1 == pytest.approx(0.0, abs=1e-12)
        estimates = [r.estimate.estimate for r in rows]
        assert all(a >= b - 1e-12 for a, b in zip(estimates, estimates[1:]))
        for row in rows:
            assert row.estimate.estimate <= base.estimate + 0.05 + 3.0 * row.estimate.stderr


def _write_config(tmp_path: Path, name: str, **updates) -> Path:
    raw = yaml.safe_load((CONFIG_DIR / name).read_text())
    raw.update(updates)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


def test_criterion_10_thread_determinism(capsys, tmp_path):
    """Replays one CLI config per criterion family at 1 and 8 threads.

    The two tail replays run at 2e4 samples per n (criteria 7 and 8 run at
    full size above); thread-count determinism is sample-count independent.
    """
    with criterion(capsys, 10, "byte-identical CSVs at --threads 1 and 8", 300.0):
        configs = [
            _write_config(tmp_path, "ergodicity_golden.yaml"),
            _write_config(tmp_path, "base_ldt_coin.yaml", samples_per_n=20_000),
            _write_config(tmp_path, "lyapunov_diag.yaml", n=2000, samples=512),
            _write_config(tmp_path, "fiber_ldt_walk.yaml", samples_per_n=20_000),
            _write_config(tmp_path, "semicontinuity_diag.yaml"),
            _write_config(tmp_path, "schrodinger_scan_free.yaml",
                          energies=[1.0, 3.0], n=1000, samples=32),
            _write_config(tmp_path, "wasserstein_cocycle.yaml"),
        ]
        for cfg in configs:
            kind = yaml.safe_load(cfg.read_text())["experiment"]
            outputs = {}
            for threads in (1, 8):
                out = tmp_path / f"{cfg.stem}-t{threads}"
                code = cli_main(
                    [kind, "--config", str(cfg), "--out-dir", str(out),
                     "--threads", str(threads), "--no-plots"]
                )
                assert code == 0
                outputs[threads] = {
                    p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))
                }
            assert outputs[1], f"no CSV produced for {kind}"
            assert outputs[1] == outputs[8]
