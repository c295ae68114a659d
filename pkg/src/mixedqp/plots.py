"""Figure rendering for experiment reports.

Each renderer takes the rows already written to CSV and draws one PNG next
to it.  Figures are a convenience view; the CSVs stay the numeric contract.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def fourier_scan_figure(rows, tol: float, path: Path) -> Path:
    """|mu_hat(k) - 1| against the flattened k scan order."""
    gaps = [gap for _, gap in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(range(len(gaps)), [max(g, 1e-17) for g in gaps], ".", ms=4)
    ax.axhline(tol, color="crimson", lw=1, ls="--", label=f"tolerance {tol:g}")
    ax.set_xlabel("scan index (k ordered by |k|)")
    ax.set_ylabel("|mu_hat(k) - 1|")
    ax.set_title("Fourier nondegeneracy scan")
    ax.legend()
    return _finish(fig, path)


def tail_figure(rows, rate, intercept, title: str, path: Path) -> Path:
    """log tail against n with the fitted exponential decay."""
    ns = [n for n, _, _ in rows]
    tails = [t for _, t, _ in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = [(n, t) for n, t in zip(ns, tails) if t > 0]
    if pos:
        ax.semilogy([n for n, _ in pos], [t for _, t in pos], "o", label="empirical tail")
    zero_ns = [n for n, t in zip(ns, tails) if t == 0]
    if zero_ns:
        ax.plot(zero_ns, [min([t for t in tails if t > 0], default=1e-6)] * len(zero_ns),
                "v", color="gray", label="tail = 0")
    if rate is not None:
        xs = np.linspace(min(ns), max(ns), 64)
        ax.semilogy(xs, np.exp(intercept - rate * xs), "-", color="crimson",
                    label=f"fit rate c = {rate:.4g}")
    ax.set_xlabel("n")
    ax.set_ylabel("tail probability")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def cesaro_figure(rows, path: Path) -> Path:
    ns = [n for n, _ in rows]
    vals = [v for _, v in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(ns, [max(v, 1e-17) for v in vals], "o-")
    ax.set_xlabel("n")
    ax.set_ylabel("sup_theta |Cesaro average - mean|")
    ax.set_title("Uniform Cesaro convergence scan")
    return _finish(fig, path)


def lyapunov_figure(estimate: float, stderr: float, n: int, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.errorbar([n], [estimate], yerr=[3 * stderr], fmt="o", capsize=4)
    ax.set_xlabel("n")
    ax.set_ylabel("exponent estimate (nats/step)")
    ax.set_title("Top Lyapunov exponent")
    return _finish(fig, path)


def semicontinuity_figure(rows, path: Path) -> Path:
    w1 = [r[0] for r in rows]
    est = [r[1] for r in rows]
    err = [3 * r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(w1, est, yerr=err, fmt="o-", capsize=3)
    ax.set_xlabel("transport distance from reference")
    ax.set_ylabel("exponent estimate")
    ax.set_title("Exponent along a perturbation scan")
    return _finish(fig, path)


def energy_scan_figure(rows, path: Path) -> Path:
    es = [r[0] for r in rows]
    est = [r[1] for r in rows]
    err = [3 * r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(es, est, yerr=err, fmt=".-", ms=4, capsize=2, lw=0.8)
    ax.set_xlabel("energy")
    ax.set_ylabel("exponent estimate")
    ax.set_title("Lyapunov exponent across the energy grid")
    return _finish(fig, path)


def wasserstein_figure(rows, path: Path) -> Path:
    grids = [r[0] for r in rows]
    vals = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(grids, vals, "o-")
    ax.set_xlabel("fiber grid points per dimension")
    ax.set_ylabel("transport distance")
    ax.set_title("Grid refinement of the transport distance")
    return _finish(fig, path)
