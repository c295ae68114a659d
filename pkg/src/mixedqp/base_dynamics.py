"""Simulation of the driven torus translation and its deviation statistics.

The base map advances a symbol sequence (i.i.d. atoms of a driving cocycle
measure) and translates the torus point by the frequency of the current
symbol.  Observables are products of a finite-window table over symbols with
a trigonometric polynomial in the torus variable; their space means are then
computable exactly, which the empirical tail estimator needs as reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fiber import TrigPoly
from .measures import AtomicMeasure, sample_indices
from .parallel import run_chunked
from .rng import BASE_SYMBOLS, derived_rng
from .torus import TorusPoint, wrap_array


@dataclass(frozen=True)
class SymbolPath:
    """Realized atom indices of one driving sample, reproducible from its key."""

    indices: tuple[int, ...]
    seed: int
    sample_index: int

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Observable:
    """table(window of symbols) * trig(theta), the finite-coordinate class.

    ``window`` is the number of symbol coordinates the table reads; window 0
    means a purely trigonometric observable (table value 1 on the empty
    window).
    """

    window: int
    table: tuple[tuple[tuple[int, ...], float], ...]
    trig: TrigPoly

    def __post_init__(self) -> None:
        if self.window < 0:
            raise ValueError("window must be >= 0")
        for w, _ in self.table:
            if len(w) != self.window:
                raise ValueError(f"table key {w} does not have window length {self.window}")

    @classmethod
    def from_parts(
        cls, window: int, table: Mapping[Sequence[int], float], trig: TrigPoly | None = None
    ) -> "Observable":
        items = tuple(
            sorted((tuple(int(i) for i in k), float(v)) for k, v in table.items())
        )
        return cls(window, items, trig if trig is not None else TrigPoly.constant(1.0))

    @classmethod
    def from_trig(cls, trig: TrigPoly) -> "Observable":
        return cls(0, (((), 1.0),), trig)

    @classmethod
    def indicator(cls, atom_index: int, n_atoms: int) -> "Observable":
        table = {(i,): 1.0 if i == atom_index else 0.0 for i in range(n_atoms)}
        return cls.from_parts(1, table)

    @classmethod
    def constant(cls, value: float) -> "Observable":
        return cls(0, (((), 1.0),), TrigPoly.constant(value))

    def table_dict(self) -> dict[tuple[int, ...], float]:
        return dict(self.table)

    def validate_for(self, n_atoms: int) -> None:
        missing = [
            w
            for w in itertools.product(range(n_atoms), repeat=self.window)
            if w not in self.table_dict()
        ]
        if missing:
            raise ValueError(f"table misses {len(missing)} windows, e.g. {missing[0]}")

    def table_values(self, n_atoms: int) -> np.ndarray:
        """Dense table over all windows, indexed by base-n_atoms window codes."""
        self.validate_for(n_atoms)
        vals = np.zeros(n_atoms**self.window)
        lookup = self.table_dict()
        for w in itertools.product(range(n_atoms), repeat=self.window):
            code = 0
            for i in w:
                code = code * n_atoms + i
            vals[code] = lookup[w]
        return vals

    def symbol_mean(self, nu: AtomicMeasure) -> float:
        """Exact product-measure expectation of the table part."""
        self.validate_for(len(nu))
        lookup = self.table_dict()
        total = 0.0
        for w in itertools.product(range(len(nu)), repeat=self.window):
            prob = math.prod(nu.weights[i] for i in w)
            total += prob * lookup[w]
        return total

    def space_mean(self, nu: AtomicMeasure) -> float:
        """Exact mean against (driving measure)^Z x Haar."""
        return self.symbol_mean(nu) * float(self.trig.coeff((0,) * self.trig.dim).real)


@dataclass(frozen=True)
class TailReport:
    """Empirical deviation tails with an exponential-rate fit.

    ``rate`` is the decay constant c of the fit tail(n) ~ exp(b - c n) over
    strictly positive tails; when fewer than three tails are positive the
    rate is censored and ``rate_lower_bound`` = log(samples)/min(n) records
    the resolution floor instead.
    """

    ns: tuple[int, ...]
    tails: tuple[float, ...]
    stderrs: tuple[float, ...]
    samples_per_n: int
    epsilon: float
    reference_mean: float
    rate: float | None
    intercept: float | None
    r_squared: float | None
    censored: bool
    rate_lower_bound: float | None
    monotone_decay: bool

    def rows(self):
        return list(zip(self.ns, self.tails, self.stderrs))

    def summary(self) -> str:
        lines = [
            f"epsilon={self.epsilon:g}  samples_per_n={self.samples_per_n}  "
            f"reference_mean={self.reference_mean:.17g}"
        ]
        for n, t, s in self.rows():
            lines.append(f"  n={n:6d}  tail={t:.6g}  stderr={s:.3g}")
        if self.censored:
            lines.append(
                f"rate censored (fewer than 3 positive tails); "
                f"resolution bound: rate >= {self.rate_lower_bound:.6g}"
            )
        else:
            lines.append(
                f"fitted rate c={self.rate:.6g} (intercept {self.intercept:.6g}, "
                f"R^2={self.r_squared:.4f})"
            )
        lines.append(f"tails monotone non-increasing in n: {self.monotone_decay}")
        return "\n".join(lines)


def fit_tail_rate(ns: Sequence[int], tails: Sequence[float], samples: int):
    """Least squares of log tail against n over positive entries.

    Returns (rate, intercept, r_squared, censored, lower_bound).
    """
    ns_arr = np.asarray(ns, dtype=float)
    tails_arr = np.asarray(tails, dtype=float)
    mask = tails_arr > 0
    if int(mask.sum()) < 3:
        bound = math.log(samples) / float(np.min(ns_arr))
        return None, None, None, True, bound
    x = ns_arr[mask]
    y = np.log(tails_arr[mask])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), float(intercept), float(r2), False, None


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------


def draw_symbols(nu: AtomicMeasure, n: int, seed: int, sample_index: int) -> np.ndarray:
    """Atom indices 0..n-1 of the driving sample keyed (seed, sample_index)."""
    rng = derived_rng(seed, BASE_SYMBOLS, sample_index)
    return sample_indices(nu, rng, n)


def freq_table(nu: AtomicMeasure) -> np.ndarray:
    """(n_atoms, d) array of the atoms' frequencies."""
    return np.array([g.freq.coords for g in nu.atoms], dtype=float)


def base_orbit(
    nu: AtomicMeasure,
    theta0: TorusPoint,
    n: int,
    seed: int,
    sample_index: int,
) -> tuple[SymbolPath, list[TorusPoint]]:
    """Length-n symbol path and the n+1 torus points it visits from theta0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    symbols = draw_symbols(nu, n, seed, sample_index)
    freqs = freq_table(nu)
    traj = theta_trajectory(theta0.array()[None, :], symbols[None, :], freqs)[0]
    points = [TorusPoint(tuple(float(c) for c in row)) for row in traj]
    path = SymbolPath(tuple(int(i) for i in symbols), seed, sample_index)
    return path, points


def theta_trajectory(theta0: np.ndarray, symbols: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """(B, n+1, d) torus trajectories; sequential wrap mirrors single orbits."""
    b, n = symbols.shape
    d = theta0.shape[1]
    out = np.empty((b, n + 1, d))
    out[:, 0, :] = theta0
    cur = theta0
    for j in range(n):
        cur = wrap_array(cur + freqs[symbols[:, j]])
        out[:, j + 1, :] = cur
    return out


def birkhoff_average(phi: Observable, path: SymbolPath, thetas: Sequence[TorusPoint]) -> float:
    """Mean of phi over all full windows of the path.

    A path of length L supports L - window + 1 terms; term j reads symbols
    j..j+window-1 and the torus point theta_j.
    """
    window = phi.window
    n_terms = len(path) - window + 1
    if window == 0:
        n_terms = len(path)
    if n_terms < 1:
        raise ValueError(f"path of length {len(path)} is shorter than window {window}")
    if len(thetas) < n_terms:
        raise ValueError("trajectory shorter than the number of Birkhoff terms")
    lookup = phi.table_dict()
    theta_arr = np.array([t.coords for t in thetas[:n_terms]], dtype=float)
    trig_vals = phi.trig.eval_many(theta_arr) if not phi.trig.is_constant else None
    trig_const = float(phi.trig.coeff((0,) * phi.trig.dim).real)
    total = 0.0
    for j in range(n_terms):
        table_val = lookup[tuple(path.indices[j : j + window])]
        tv = trig_vals[j] if trig_vals is not None else trig_const
        total += table_val * tv
    return total / n_terms


# ---------------------------------------------------------------------------
# empirical deviation tails
# ---------------------------------------------------------------------------


def _birkhoff_batch(
    nu: AtomicMeasure,
    phi: Observable,
    theta: TorusPoint,
    n: int,
    seed: int,
    start: int,
    stop: int,
) -> np.ndarray:
    """Birkhoff averages of samples [start, stop), vectorized over the batch."""
    batch = stop - start
    window = phi.window
    path_len = n + max(window, 1) - 1
    symbols = np.empty((batch, path_len), dtype=np.int64)
    for i in range(batch):
        symbols[i] = draw_symbols(nu, path_len, seed, start + i)

    if window == 0:
        table_part = np.ones((batch, n))
    else:
        codes = symbols[:, 0:n].copy()
        for offset in range(1, window):
            codes = codes * len(nu) + symbols[:, offset : offset + n]
        table_part = phi.table_values(len(nu))[codes]

    if phi.trig.is_constant:
        trig_part = float(phi.trig.coeff((0,) * phi.trig.dim).real)
        values = table_part.mean(axis=1) * trig_part
    else:
        freqs = freq_table(nu)
        theta0 = np.broadcast_to(theta.array(), (batch, theta.dim))
        # term j reads theta_j, so only n-1 translation steps are needed
        traj = theta_trajectory(theta0, symbols[:, : n - 1], freqs)
        flat = traj.reshape(batch * n, -1)
        trig_vals = phi.trig.eval_many(flat).reshape(batch, n)
        values = (table_part * trig_vals).mean(axis=1)
    return values


def birkhoff_sample_batch(
    nu: AtomicMeasure,
    phi: Observable,
    theta: TorusPoint,
    n: int,
    seed: int,
    samples: int,
    threads: int = 1,
) -> np.ndarray:
    """Birkhoff averages of ``samples`` independent driving samples."""
    phi.validate_for(len(nu))
    return run_chunked(
        samples,
        lambda start, stop: _birkhoff_batch(nu, phi, theta, n, seed, start, stop),
        threads=threads,
    )


def estimate_base_tails(
    nu: AtomicMeasure,
    phi: Observable,
    epsilon: float,
    n_list: Sequence[int],
    samples_per_n: int,
    theta: TorusPoint,
    seed: int,
    threads: int = 1,
) -> TailReport:
    """Empirical P(|n-term average - exact mean| >= epsilon) with a rate fit."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    mean = phi.space_mean(nu)
    tails = []
    stderrs = []
    for n in n_list:
        values = birkhoff_sample_batch(nu, phi, theta, int(n), seed, samples_per_n, threads)
        hits = np.abs(values - mean) >= epsilon
        p = float(math.fsum(hits) / samples_per_n)
        tails.append(p)
        stderrs.append(math.sqrt(p * (1.0 - p) / samples_per_n))
    rate, intercept, r2, censored, bound = fit_tail_rate(n_list, tails, samples_per_n)
    monotone = all(a >= b for a, b in zip(tails, tails[1:]))
    return TailReport(
        ns=tuple(int(n) for n in n_list),
        tails=tuple(tails),
        stderrs=tuple(stderrs),
        samples_per_n=int(samples_per_n),
        epsilon=float(epsilon),
        reference_mean=mean,
        rate=rate,
        intercept=intercept,
        r_squared=r2,
        censored=censored,
        rate_lower_bound=bound,
        monotone_decay=monotone,
    )
