"""Experiment dispatch: run a parsed config, write CSVs, manifest and figures.

CSV rules: one header row, fixed column order, floats at 17 significant
digits (float64 round-trip exact).  Re-running an identical config and seed
reproduces every CSV byte for byte, independent of the thread count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from .base_dynamics import TailReport, estimate_base_tails
from .config import ExperimentConfig
from .ergodicity import check_fourier_criterion, sumset_density_check, uniform_cesaro_scan
from .lyapunov import (
    estimate_fiber_tails,
    estimate_lyapunov,
    semicontinuity_scan,
)
from .measures import GMetric, wasserstein1_cocycle, wasserstein1_torus
from .schrodinger import lyapunov_energy_scan


@dataclass
class ExperimentReport:
    kind: str
    out_dir: Path
    manifest_path: Path
    csv_paths: list[Path] = field(default_factory=list)
    figure_paths: list[Path] = field(default_factory=list)
    summary: str = ""
    elapsed_seconds: float = 0.0


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _tail_rows(report: TailReport):
    return [(n, t, s) for n, t, s in report.rows()]


def run(config: ExperimentConfig) -> ExperimentReport:
    start = time.perf_counter()
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    report = ExperimentReport(kind=config.kind, out_dir=out, manifest_path=out / "manifest.yaml")

    handler = _HANDLERS[config.kind]
    handler(config, report)

    report.elapsed_seconds = time.perf_counter() - start
    manifest = {
        "tool": {"name": "mixedqp", "version": __version__},
        "config": config.resolved,
        "outputs": {
            "csv": [p.name for p in report.csv_paths],
            "figures": [p.name for p in report.figure_paths],
        },
        "elapsed_seconds": report.elapsed_seconds,
    }
    report.manifest_path.write_text(yaml.safe_dump(manifest, sort_keys=False))
    (out / "report.txt").write_text(report.summary + "\n")
    return report


def _run_ergodicity(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    fourier = check_fourier_criterion(p["measure"], p["cutoff"], p["tol"])
    rows = [(",".join(str(ki) for ki in k), gap) for k, gap in fourier.scanned]
    report.csv_paths.append(
        write_csv(config.out_dir / "fourier_scan.csv", ["k", "gap"], rows)
    )
    lines = [fourier.summary()]
    if config.plots:
        from .plots import fourier_scan_figure

        report.figure_paths.append(
            fourier_scan_figure(fourier.scanned, fourier.tol, config.out_dir / "fourier_scan.png")
        )

    if p["cesaro"] is not None:
        c = p["cesaro"]
        scan_rows = [
            (n, uniform_cesaro_scan(p["measure"], c["polynomial"], n, c["theta_grid"]))
            for n in c["n_list"]
        ]
        report.csv_paths.append(
            write_csv(config.out_dir / "cesaro_scan.csv", ["n", "sup_deviation"], scan_rows)
        )
        lines.append("uniform Cesaro scan:")
        for n, v in scan_rows:
            lines.append(f"  n={n:7d}  sup deviation {v:.6g}")
        if config.plots:
            from .plots import cesaro_figure

            report.figure_paths.append(
                cesaro_figure(scan_rows, config.out_dir / "cesaro_scan.png")
            )

    if p["sumset"] is not None:
        s = p["sumset"]
        sumset = sumset_density_check(p["measure"], s["n_max"], s["eps"])
        lines.append(sumset.summary())
        report.csv_paths.append(
            write_csv(
                config.out_dir / "sumset.csv",
                ["dense", "dense_by_step", "occupied_fraction"],
                [(sumset.dense, sumset.dense_by_step if sumset.dense_by_step is not None else -1,
                  sumset.occupied_fraction)],
            )
        )
    report.summary = "\n".join(lines)


def _run_base_ldt(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    tails = estimate_base_tails(
        p["measure"], p["observable"], p["epsilon"], p["n_list"], p["samples_per_n"],
        p["theta"], config.seed, threads=config.threads,
    )
    report.csv_paths.append(
        write_csv(config.out_dir / "tails.csv", ["n", "tail", "stderr"], _tail_rows(tails))
    )
    report.summary = "base deviation tails\n" + tails.summary()
    if config.plots:
        from .plots import tail_figure

        report.figure_paths.append(
            tail_figure(_tail_rows(tails), tails.rate, tails.intercept,
                        "Base deviation tails", config.out_dir / "tails.png")
        )


def _run_lyapunov(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    est = estimate_lyapunov(
        p["measure"], p["n"], p["samples"], p["theta_policy"], config.seed,
        theta=p["theta"], threads=config.threads, skip_ergodicity_check=p["skip"],
    )
    report.csv_paths.append(
        write_csv(
            config.out_dir / "estimate.csv",
            ["n", "estimate", "stderr"],
            [(est.n, est.estimate, est.stderr)],
        )
    )
    report.summary = est.summary()
    if config.plots:
        from .plots import lyapunov_figure

        report.figure_paths.append(
            lyapunov_figure(est.estimate, est.stderr, est.n, config.out_dir / "estimate.png")
        )


def _run_fiber_ldt(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    tails = estimate_fiber_tails(
        p["measure"], p["theta"], p["epsilon"], p["reference_exponent"],
        p["n_list"], p["samples_per_n"], config.seed, threads=config.threads,
    )
    report.csv_paths.append(
        write_csv(config.out_dir / "tails.csv", ["n", "tail", "stderr"], _tail_rows(tails))
    )
    report.summary = "fiber upper deviation tails\n" + tails.summary()
    if config.plots:
        from .plots import tail_figure

        report.figure_paths.append(
            tail_figure(_tail_rows(tails), tails.rate, tails.intercept,
                        "Fiber upper deviation tails", config.out_dir / "tails.png")
        )


def _run_semicontinuity(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    rows = semicontinuity_scan(
        p["reference"], p["perturbations"], p["n"], p["samples"], p["metric"],
        config.seed, theta_policy=p["theta_policy"], threads=config.threads,
    )
    csv_rows = [(r.w1, r.estimate.estimate, r.estimate.stderr) for r in rows]
    report.csv_paths.append(
        write_csv(config.out_dir / "scan.csv", ["w1", "estimate", "stderr"], csv_rows)
    )
    lines = ["perturbation scan (sorted by transport distance)"]
    for r in rows:
        lines.append(f"  W1={r.w1:.8g}  exponent {r.estimate.estimate:.8g} +- {r.estimate.stderr:.3g}")
    report.summary = "\n".join(lines)
    if config.plots:
        from .plots import semicontinuity_figure

        report.figure_paths.append(
            semicontinuity_figure(csv_rows, config.out_dir / "scan.png")
        )


def _run_schrodinger_scan(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    rows = lyapunov_energy_scan(
        p["model"], p["energies"], p["n"], p["samples"], p["theta_policy"],
        config.seed, theta=p["theta"], threads=config.threads,
    )
    csv_rows = [(r.energy, r.estimate.estimate, r.estimate.stderr) for r in rows]
    report.csv_paths.append(
        write_csv(config.out_dir / "energy_scan.csv", ["energy", "estimate", "stderr"], csv_rows)
    )
    lines = [f"energy scan over {len(rows)} grid points"]
    for r in rows[:: max(1, len(rows) // 10)]:
        lines.append(f"  E={r.energy:+.6g}  exponent {r.estimate.estimate:.8g}")
    report.summary = "\n".join(lines)
    if config.plots:
        from .plots import energy_scan_figure

        report.figure_paths.append(
            energy_scan_figure(csv_rows, config.out_dir / "energy_scan.png")
        )


def _run_wasserstein(config: ExperimentConfig, report: ExperimentReport) -> None:
    p = config.params
    rows: list[tuple[int, float]] = []
    if p["space"] == "torus":
        rows.append((0, wasserstein1_torus(p["left"], p["right"])))
    else:
        for grid_pts in p["grids"]:
            metric = GMetric(grid_points_per_dim=grid_pts)
            rows.append((grid_pts, wasserstein1_cocycle(p["left"], p["right"], metric)))
    report.csv_paths.append(
        write_csv(config.out_dir / "distance.csv", ["grid_points", "distance"], rows)
    )
    lines = ["transport distance"]
    for g, v in rows:
        label = "exact (torus metric)" if g == 0 else f"fiber grid {g}"
        lines.append(f"  {label}: {v:.12g}")
    report.summary = "\n".join(lines)
    if config.plots and len(rows) > 1:
        from .plots import wasserstein_figure

        report.figure_paths.append(
            wasserstein_figure(rows, config.out_dir / "distance.png")
        )


_HANDLERS = {
    "ergodicity": _run_ergodicity,
    "base-ldt": _run_base_ldt,
    "lyapunov": _run_lyapunov,
    "fiber-ldt": _run_fiber_ldt,
    "semicontinuity": _run_semicontinuity,
    "schrodinger-scan": _run_schrodinger_scan,
    "wasserstein": _run_wasserstein,
}
