"""Driving measures for randomly perturbed Schrodinger transfer cocycles.

Three families over the transfer block S_E = [[v(theta)-E, -1], [1, 0]]:

  random potential   one frequency alpha, noise w added to the potential,
                     realized as the shear factorization P(w) S_E with
                     P(w) = [[1, w], [0, 1]];
  random frequency   the translation step is drawn from a measure mu, the
                     fiber stays S_E;
  random both        product of the two randomizations.

Noise laws are finitely supported; continuous laws enter via user-chosen
quadrature atoms declared in the experiment config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cocycle import QpCocycle
from .fiber import FiberMap, Product, Schrodinger, Shear, TrigPoly
from .lyapunov import LyapunovEstimate, estimate_lyapunov
from .measures import AtomicMeasure, cocycle_measure
from .rng import ENERGY_SCAN
from .torus import TorusPoint


@dataclass(frozen=True)
class SchrodingerModel:
    """Potential, frequency law (fixed point or measure) and noise law."""

    potential: TrigPoly
    frequency: TorusPoint | None = None
    frequency_measure: AtomicMeasure | None = None
    noise: AtomicMeasure | None = None  # measure on the reals; None means no noise

    def __post_init__(self) -> None:
        if (self.frequency is None) == (self.frequency_measure is None):
            raise ValueError("specify exactly one of frequency / frequency_measure")

    def driving_measure(self, energy: float) -> AtomicMeasure:
        if self.frequency_measure is None:
            if self.noise is None:
                return build_random_potential_measure(
                    self.frequency, self.potential, _delta_zero(), energy
                )
            return build_random_potential_measure(
                self.frequency, self.potential, self.noise, energy
            )
        noise = self.noise if self.noise is not None else _delta_zero()
        return build_random_both_measure(
            self.frequency_measure, self.potential, noise, energy
        )

    def default_energy_bound(self, grid_points: int = 1024) -> float:
        """2 + sup|v| + max|noise atom|, covering the spectrum's reach."""
        noise_reach = max(abs(w) for w in self.noise.atoms) if self.noise is not None else 0.0
        return 2.0 + self.potential.sup_norm(grid_points) + noise_reach


def _delta_zero() -> AtomicMeasure:
    from .measures import real_measure

    return real_measure([0.0], [1.0])


def _noisy_fiber(v: TrigPoly, energy: float, w: float) -> FiberMap:
    base = Schrodinger(v, energy)
    if w == 0.0:
        return base  # Shear(0) is the identity factor
    return Product(Shear(float(w)), base)


def build_random_potential_measure(
    alpha: TorusPoint, v: TrigPoly, rho: AtomicMeasure, energy: float
) -> AtomicMeasure:
    """One atom (alpha, P(w) S_E) per noise atom w, with rho's weight."""
    atoms = [QpCocycle(alpha, _noisy_fiber(v, energy, w)) for w in rho.atoms]
    return cocycle_measure(atoms, rho.weights)


def build_random_frequency_measure(
    mu: AtomicMeasure, v: TrigPoly, energy: float
) -> AtomicMeasure:
    """One atom (alpha_j, S_E) per frequency atom, with mu's weight."""
    fiber = Schrodinger(v, energy)
    atoms = [QpCocycle(alpha, fiber) for alpha in mu.atoms]
    return cocycle_measure(atoms, mu.weights)


def build_random_both_measure(
    mu: AtomicMeasure, v: TrigPoly, rho: AtomicMeasure, energy: float
) -> AtomicMeasure:
    """Product atoms (alpha_j, P(w_i) S_E) with weights mu_j * rho_i."""
    atoms = []
    weights = []
    for alpha, wa in zip(mu.atoms, mu.weights):
        for w, ww in zip(rho.atoms, rho.weights):
            atoms.append(QpCocycle(alpha, _noisy_fiber(v, energy, w)))
            weights.append(wa * ww)
    return cocycle_measure(atoms, weights)


@dataclass(frozen=True)
class EnergyScanRow:
    energy: float
    estimate: LyapunovEstimate


def lyapunov_energy_scan(
    model: SchrodingerModel,
    energies: Sequence[float],
    n: int,
    samples: int,
    theta_policy: str = "haar",
    seed: int = 0,
    theta: TorusPoint | None = None,
    threads: int = 1,
) -> list[EnergyScanRow]:
    """Exponent estimate per grid energy; per-energy seeds derive from the index."""
    if not energies:
        raise ValueError("empty energy grid")
    rows = []
    for idx, energy in enumerate(energies):
        nu = model.driving_measure(float(energy))
        # independent per-energy streams from (master seed, energy index)
        sub_seed = int(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(ENERGY_SCAN, idx))
            .generate_state(1, dtype=np.uint64)[0]
        )
        est = estimate_lyapunov(
            nu,
            n,
            samples,
            theta_policy,
            sub_seed,
            theta=theta,
            threads=threads,
            skip_ergodicity_check=True,
        )
        rows.append(EnergyScanRow(energy=float(energy), estimate=est))
    return rows


def default_energy_grid(model: SchrodingerModel, step: float = 0.01) -> list[float]:
    """Symmetric grid over the model's default energy bound at the given step."""
    bound = model.default_energy_bound()
    count = int(math.floor(bound / step))
    return [i * step for i in range(-count, count + 1)]
