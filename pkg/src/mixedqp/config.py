"""Declarative experiment configs: one YAML document per experiment.

The parser validates the whole document before any computation, resolves
every default, and keeps a plain-dict echo of the resolved config so the
runner can write it into the manifest.  Errors carry the path of the
offending field (e.g. ``measure.atoms[2].weight``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .base_dynamics import Observable
from .cocycle import QpCocycle
from .fiber import Const, FiberError, FiberMap, Inverse, Product, Schrodinger, Shear, Translate, TrigPoly
from .measures import (
    AtomicMeasure,
    GMetric,
    MeasureError,
    cocycle_measure,
    real_measure,
    torus_measure,
)
from .schrodinger import SchrodingerModel
from .torus import TorusPoint, wrap

EXPERIMENT_KINDS = (
    "ergodicity",
    "base-ldt",
    "lyapunov",
    "fiber-ldt",
    "semicontinuity",
    "schrodinger-scan",
    "wasserstein",
)


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        self.path = path or "<root>"
        self.message = message
        super().__init__(f"{self.path}: {message}")


_REQUIRED = object()


def _get(obj: dict, key: str, path: str, default: Any = _REQUIRED) -> Any:
    if key in obj:
        return obj[key]
    if default is _REQUIRED:
        raise ConfigError(path, f"missing required field '{key}'")
    return default


def _expect_map(obj: Any, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected a mapping, got {type(obj).__name__}")
    return obj


def _expect_list(obj: Any, path: str) -> list:
    if not isinstance(obj, list):
        raise ConfigError(path, f"expected a list, got {type(obj).__name__}")
    return obj


def _number(obj: Any, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(path, f"expected a number, got {obj!r}")
    return float(obj)


def _integer(obj: Any, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(path, f"expected an integer, got {obj!r}")
    return int(obj)


def _positive_int(obj: Any, path: str) -> int:
    val = _integer(obj, path)
    if val < 1:
        raise ConfigError(path, f"expected a positive integer, got {val}")
    return val


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(path, f"unknown field(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


# ---------------------------------------------------------------------------
# geometry pieces
# ---------------------------------------------------------------------------


def parse_point(obj: Any, path: str) -> TorusPoint:
    vals = _expect_list(obj, path)
    if not vals:
        raise ConfigError(path, "a torus point needs at least one coordinate")
    return wrap([_number(v, f"{path}[{i}]") for i, v in enumerate(vals)])


def parse_trig(obj: Any, path: str) -> TrigPoly:
    node = _expect_map(obj, path)
    _check_keys(node, {"constant", "cosine", "coeffs"}, path)
    if "constant" in node:
        return TrigPoly.constant(_number(node["constant"], f"{path}.constant"))
    if "cosine" in node:
        cos = _expect_map(node["cosine"], f"{path}.cosine")
        _check_keys(cos, {"amplitude", "k"}, f"{path}.cosine")
        amp = _number(_get(cos, "amplitude", f"{path}.cosine", 2.0), f"{path}.cosine.amplitude")
        k = _integer(_get(cos, "k", f"{path}.cosine", 1), f"{path}.cosine.k")
        return TrigPoly.cosine(amp, k)
    coeffs_raw = _expect_list(_get(node, "coeffs", path), f"{path}.coeffs")
    coeffs: dict[tuple[int, ...], complex] = {}
    for i, entry in enumerate(coeffs_raw):
        epath = f"{path}.coeffs[{i}]"
        entry = _expect_map(entry, epath)
        _check_keys(entry, {"k", "c"}, epath)
        k = tuple(
            _integer(v, f"{epath}.k[{j}]") for j, v in enumerate(_expect_list(_get(entry, "k", epath), f"{epath}.k"))
        )
        c_raw = _expect_list(_get(entry, "c", epath), f"{epath}.c")
        if len(c_raw) != 2:
            raise ConfigError(f"{epath}.c", "expected [re, im]")
        c = complex(_number(c_raw[0], f"{epath}.c[0]"), _number(c_raw[1], f"{epath}.c[1]"))
        if k in coeffs:
            raise ConfigError(f"{epath}.k", f"duplicate frequency {list(k)}")
        coeffs[k] = c
    # auto-complete missing conjugate frequencies
    for k in list(coeffs):
        mk = tuple(-ki for ki in k)
        if mk not in coeffs:
            coeffs[mk] = coeffs[k].conjugate()
    try:
        return TrigPoly.from_coeffs(coeffs)
    except FiberError as err:
        raise ConfigError(path, str(err)) from err


def parse_fiber(obj: Any, path: str) -> FiberMap:
    node = _expect_map(obj, path)
    kind = _get(node, "kind", path)
    if kind == "const":
        _check_keys(node, {"kind", "matrix"}, path)
        rows = _expect_list(_get(node, "matrix", path), f"{path}.matrix")
        matrix = [
            [_number(v, f"{path}.matrix[{i}][{j}]") for j, v in enumerate(_expect_list(row, f"{path}.matrix[{i}]"))]
            for i, row in enumerate(rows)
        ]
        try:
            return Const.of(matrix)
        except FiberError as err:
            raise ConfigError(f"{path}.matrix", str(err)) from err
    if kind == "schrodinger":
        _check_keys(node, {"kind", "potential", "energy"}, path)
        return Schrodinger(
            parse_trig(_get(node, "potential", path), f"{path}.potential"),
            _number(_get(node, "energy", path), f"{path}.energy"),
        )
    if kind == "shear":
        _check_keys(node, {"kind", "w"}, path)
        return Shear(_number(_get(node, "w", path), f"{path}.w"))
    if kind == "translate":
        _check_keys(node, {"kind", "beta", "child"}, path)
        return Translate(
            parse_fiber(_get(node, "child", path), f"{path}.child"),
            parse_point(_get(node, "beta", path), f"{path}.beta"),
        )
    if kind == "product":
        _check_keys(node, {"kind", "left", "right"}, path)
        try:
            return Product(
                parse_fiber(_get(node, "left", path), f"{path}.left"),
                parse_fiber(_get(node, "right", path), f"{path}.right"),
            )
        except FiberError as err:
            raise ConfigError(path, str(err)) from err
    if kind == "inverse":
        _check_keys(node, {"kind", "child"}, path)
        return Inverse(parse_fiber(_get(node, "child", path), f"{path}.child"))
    raise ConfigError(f"{path}.kind", f"unknown fiber node kind {kind!r}")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


def _parse_atoms(obj: Any, path: str) -> list[dict]:
    node = _expect_map(obj, path)
    _check_keys(node, {"atoms"}, path)
    atoms = _expect_list(_get(node, "atoms", path), f"{path}.atoms")
    if not atoms:
        raise ConfigError(f"{path}.atoms", "a measure needs at least one atom")
    return [
        _expect_map(a, f"{path}.atoms[{i}]") for i, a in enumerate(atoms)
    ]


def _wrap_measure_error(path: str, err: Exception) -> ConfigError:
    return ConfigError(path, str(err))


def parse_torus_measure(obj: Any, path: str) -> AtomicMeasure:
    entries = _parse_atoms(obj, path)
    points, weights = [], []
    for i, entry in enumerate(entries):
        epath = f"{path}.atoms[{i}]"
        _check_keys(entry, {"point", "weight"}, epath)
        points.append(parse_point(_get(entry, "point", epath), f"{epath}.point"))
        weights.append(_number(_get(entry, "weight", epath), f"{epath}.weight"))
    try:
        return torus_measure(points, weights)
    except MeasureError as err:
        raise _wrap_measure_error(path, err) from err


def parse_real_measure(obj: Any, path: str) -> AtomicMeasure:
    entries = _parse_atoms(obj, path)
    values, weights = [], []
    for i, entry in enumerate(entries):
        epath = f"{path}.atoms[{i}]"
        _check_keys(entry, {"value", "weight"}, epath)
        values.append(_number(_get(entry, "value", epath), f"{epath}.value"))
        weights.append(_number(_get(entry, "weight", epath), f"{epath}.weight"))
    try:
        return real_measure(values, weights)
    except MeasureError as err:
        raise _wrap_measure_error(path, err) from err


def parse_cocycle_measure(obj: Any, path: str) -> AtomicMeasure:
    entries = _parse_atoms(obj, path)
    cocycles, weights = [], []
    for i, entry in enumerate(entries):
        epath = f"{path}.atoms[{i}]"
        _check_keys(entry, {"freq", "fiber", "weight"}, epath)
        freq = parse_point(_get(entry, "freq", epath), f"{epath}.freq")
        fiber = parse_fiber(_get(entry, "fiber", epath), f"{epath}.fiber")
        cocycles.append(QpCocycle(freq, fiber))
        weights.append(_number(_get(entry, "weight", epath), f"{epath}.weight"))
    try:
        return cocycle_measure(cocycles, weights)
    except MeasureError as err:
        raise _wrap_measure_error(path, err) from err


def parse_observable(obj: Any, path: str, n_atoms: int) -> Observable:
    node = _expect_map(obj, path)
    _check_keys(node, {"window", "table", "trig"}, path)
    window = _integer(_get(node, "window", path, 0), f"{path}.window")
    if window < 0:
        raise ConfigError(f"{path}.window", "window must be >= 0")
    trig = (
        parse_trig(node["trig"], f"{path}.trig")
        if "trig" in node
        else TrigPoly.constant(1.0)
    )
    table_raw = _expect_map(_get(node, "table", path, {"": 1.0} if window == 0 else _REQUIRED), f"{path}.table")
    table: dict[tuple[int, ...], float] = {}
    for key, value in table_raw.items():
        kpath = f"{path}.table[{key!r}]"
        key_str = str(key).strip()
        parts = [] if key_str == "" else key_str.split(",")
        if len(parts) != window:
            raise ConfigError(kpath, f"key has {len(parts)} indices, window is {window}")
        try:
            idx = tuple(int(p.strip()) for p in parts)
        except ValueError as err:
            raise ConfigError(kpath, f"non-integer window index: {err}") from err
        if any(i < 0 or i >= n_atoms for i in idx):
            raise ConfigError(kpath, f"atom index out of range 0..{n_atoms - 1}")
        table[idx] = _number(value, kpath)
    phi = Observable.from_parts(window, table, trig)
    try:
        phi.validate_for(n_atoms)
    except ValueError as err:
        raise ConfigError(f"{path}.table", str(err)) from err
    return phi


def parse_theta_policy(obj: Any, path: str) -> tuple[str, TorusPoint | None]:
    if obj == "haar":
        return "haar", None
    if isinstance(obj, dict):
        _check_keys(obj, {"fixed"}, path)
        return "fixed", parse_point(_get(obj, "fixed", path), f"{path}.fixed")
    raise ConfigError(path, "expected 'haar' or {fixed: [coords]}")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    threads: int
    out_dir: Path
    plots: bool
    params: dict[str, Any]
    resolved: dict[str, Any] = field(default_factory=dict)


def _parse_n_list(obj: Any, path: str) -> list[int]:
    ns = [_positive_int(v, f"{path}[{i}]") for i, v in enumerate(_expect_list(obj, path))]
    if not ns:
        raise ConfigError(path, "need at least one horizon n")
    return ns


def _parse_energies(obj: Any, path: str) -> list[float]:
    if isinstance(obj, list):
        es = [_number(v, f"{path}[{i}]") for i, v in enumerate(obj)]
        if not es:
            raise ConfigError(path, "energy list is empty")
        return es
    node = _expect_map(obj, path)
    _check_keys(node, {"min", "max", "step"}, path)
    lo = _number(_get(node, "min", path), f"{path}.min")
    hi = _number(_get(node, "max", path), f"{path}.max")
    step = _number(_get(node, "step", path), f"{path}.step")
    if step <= 0 or hi < lo:
        raise ConfigError(path, "need step > 0 and max >= min")
    count = int(round((hi - lo) / step))
    return [lo + i * step for i in range(count + 1)]


def parse_experiment(raw: Any, base_out: Path | None = None) -> ExperimentConfig:
    top = _expect_map(raw, "")
    kind = _get(top, "experiment", "")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("experiment", f"unknown experiment {kind!r}; choose from {EXPERIMENT_KINDS}")
    seed = _integer(_get(top, "seed", "", 0), "seed")
    threads = _positive_int(_get(top, "threads", "", 1), "threads")
    plots = _get(top, "plots", "", True)
    if not isinstance(plots, bool):
        raise ConfigError("plots", f"expected true/false, got {plots!r}")
    out_dir = Path(_get(top, "out_dir", "", str((base_out or Path("results")) / kind)))

    common = {"experiment", "seed", "threads", "plots", "out_dir"}
    params: dict[str, Any] = {}
    resolved: dict[str, Any] = {
        "experiment": kind,
        "seed": seed,
        "threads": threads,
        "plots": plots,
        "out_dir": str(out_dir),
    }

    if kind == "ergodicity":
        _check_keys(top, common | {"measure", "cutoff", "tol", "cesaro", "sumset"}, "")
        mu = parse_torus_measure(_get(top, "measure", ""), "measure")
        d = mu.atoms[0].dim
        from .ergodicity import default_cutoff

        cutoff = _positive_int(_get(top, "cutoff", "", default_cutoff(d)), "cutoff")
        tol = _number(_get(top, "tol", "", 1e-9), "tol")
        params.update(measure=mu, cutoff=cutoff, tol=tol, cesaro=None, sumset=None)
        resolved.update(cutoff=cutoff, tol=tol)
        if "cesaro" in top:
            c = _expect_map(top["cesaro"], "cesaro")
            _check_keys(c, {"polynomial", "n_list", "theta_grid"}, "cesaro")
            poly = parse_trig(_get(c, "polynomial", "cesaro"), "cesaro.polynomial")
            n_list = _parse_n_list(_get(c, "n_list", "cesaro"), "cesaro.n_list")
            theta_grid = _positive_int(_get(c, "theta_grid", "cesaro", 64), "cesaro.theta_grid")
            params["cesaro"] = {"polynomial": poly, "n_list": n_list, "theta_grid": theta_grid}
            resolved["cesaro"] = {"n_list": n_list, "theta_grid": theta_grid}
        if "sumset" in top:
            s = _expect_map(top["sumset"], "sumset")
            _check_keys(s, {"n_max", "eps"}, "sumset")
            n_max = _positive_int(_get(s, "n_max", "sumset", 1000), "sumset.n_max")
            eps = _number(_get(s, "eps", "sumset", 0.01), "sumset.eps")
            if eps <= 0:
                raise ConfigError("sumset.eps", "eps must be positive")
            params["sumset"] = {"n_max": n_max, "eps": eps}
            resolved["sumset"] = {"n_max": n_max, "eps": eps}

    elif kind == "base-ldt":
        _check_keys(
            top, common | {"measure", "observable", "epsilon", "n_list", "samples_per_n", "theta"}, ""
        )
        nu = parse_cocycle_measure(_get(top, "measure", ""), "measure")
        phi = parse_observable(_get(top, "observable", ""), "observable", len(nu))
        epsilon = _number(_get(top, "epsilon", ""), "epsilon")
        if epsilon <= 0:
            raise ConfigError("epsilon", "epsilon must be positive")
        n_list = _parse_n_list(_get(top, "n_list", ""), "n_list")
        samples = _positive_int(_get(top, "samples_per_n", ""), "samples_per_n")
        theta = parse_point(_get(top, "theta", "", [0.0] * nu.atoms[0].d), "theta")
        params.update(
            measure=nu, observable=phi, epsilon=epsilon, n_list=n_list,
            samples_per_n=samples, theta=theta,
        )
        resolved.update(
            epsilon=epsilon, n_list=n_list, samples_per_n=samples, theta=list(theta.coords)
        )

    elif kind == "lyapunov":
        _check_keys(
            top, common | {"measure", "n", "samples", "theta_policy", "skip_ergodicity_check"}, ""
        )
        nu = parse_cocycle_measure(_get(top, "measure", ""), "measure")
        n = _positive_int(_get(top, "n", ""), "n")
        samples = _positive_int(_get(top, "samples", ""), "samples")
        policy, theta = parse_theta_policy(_get(top, "theta_policy", "", "haar"), "theta_policy")
        skip = _get(top, "skip_ergodicity_check", "", False)
        if not isinstance(skip, bool):
            raise ConfigError("skip_ergodicity_check", "expected true/false")
        params.update(measure=nu, n=n, samples=samples, theta_policy=policy, theta=theta, skip=skip)
        resolved.update(
            n=n, samples=samples,
            theta_policy=policy if theta is None else {"fixed": list(theta.coords)},
            skip_ergodicity_check=skip,
        )

    elif kind == "fiber-ldt":
        _check_keys(
            top,
            common
            | {"measure", "theta", "epsilon", "reference_exponent", "n_list", "samples_per_n"},
            "",
        )
        nu = parse_cocycle_measure(_get(top, "measure", ""), "measure")
        theta = parse_point(_get(top, "theta", "", [0.0] * nu.atoms[0].d), "theta")
        epsilon = _number(_get(top, "epsilon", ""), "epsilon")
        if epsilon <= 0:
            raise ConfigError("epsilon", "epsilon must be positive")
        ref = _number(_get(top, "reference_exponent", ""), "reference_exponent")
        n_list = _parse_n_list(_get(top, "n_list", ""), "n_list")
        samples = _positive_int(_get(top, "samples_per_n", ""), "samples_per_n")
        params.update(
            measure=nu, theta=theta, epsilon=epsilon, reference_exponent=ref,
            n_list=n_list, samples_per_n=samples,
        )
        resolved.update(
            theta=list(theta.coords), epsilon=epsilon, reference_exponent=ref,
            n_list=n_list, samples_per_n=samples,
        )

    elif kind == "semicontinuity":
        _check_keys(
            top,
            common | {"reference", "perturbations", "n", "samples", "theta_policy", "metric"},
            "",
        )
        nu0 = parse_cocycle_measure(_get(top, "reference", ""), "reference")
        perts_raw = _expect_list(_get(top, "perturbations", ""), "perturbations")
        if not perts_raw:
            raise ConfigError("perturbations", "need at least one perturbation")
        perts = [
            parse_cocycle_measure(p, f"perturbations[{i}]") for i, p in enumerate(perts_raw)
        ]
        n = _positive_int(_get(top, "n", ""), "n")
        samples = _positive_int(_get(top, "samples", ""), "samples")
        policy, theta = parse_theta_policy(_get(top, "theta_policy", "", "haar"), "theta_policy")
        grid_pts = GMetric.default_for(nu0.atoms[0].d).grid_points_per_dim
        if "metric" in top:
            mspec = _expect_map(top["metric"], "metric")
            _check_keys(mspec, {"grid"}, "metric")
            grid_pts = _positive_int(_get(mspec, "grid", "metric", grid_pts), "metric.grid")
        metric = GMetric(grid_points_per_dim=grid_pts)
        params.update(
            reference=nu0, perturbations=perts, n=n, samples=samples,
            theta_policy=policy, theta=theta, metric=metric,
        )
        resolved.update(
            n=n, samples=samples,
            theta_policy=policy if theta is None else {"fixed": list(theta.coords)},
            metric={"grid": grid_pts},
        )

    elif kind == "schrodinger-scan":
        _check_keys(
            top, common | {"model", "energies", "n", "samples", "theta_policy"}, ""
        )
        mspec = _expect_map(_get(top, "model", ""), "model")
        _check_keys(mspec, {"potential", "frequency", "frequency_measure", "noise"}, "model")
        potential = parse_trig(_get(mspec, "potential", "model"), "model.potential")
        freq = None
        freq_measure = None
        if "frequency" in mspec and "frequency_measure" in mspec:
            raise ConfigError("model", "specify exactly one of frequency / frequency_measure")
        if "frequency" in mspec:
            freq = parse_point(mspec["frequency"], "model.frequency")
        elif "frequency_measure" in mspec:
            freq_measure = parse_torus_measure(mspec["frequency_measure"], "model.frequency_measure")
        else:
            raise ConfigError("model", "specify one of frequency / frequency_measure")
        noise = parse_real_measure(mspec["noise"], "model.noise") if "noise" in mspec else None
        model = SchrodingerModel(
            potential=potential, frequency=freq, frequency_measure=freq_measure, noise=noise
        )
        if "energies" in top:
            energies = _parse_energies(top["energies"], "energies")
            energies_resolved: Any = energies
        else:
            from .schrodinger import default_energy_grid

            energies = default_energy_grid(model)
            energies_resolved = {
                "default": True,
                "count": len(energies),
                "min": energies[0],
                "max": energies[-1],
            }
        n = _positive_int(_get(top, "n", "", 1000), "n")
        samples = _positive_int(_get(top, "samples", "", 100), "samples")
        policy, theta = parse_theta_policy(_get(top, "theta_policy", "", "haar"), "theta_policy")
        params.update(
            model=model, energies=energies, n=n, samples=samples,
            theta_policy=policy, theta=theta,
        )
        resolved.update(
            energies=energies_resolved, n=n, samples=samples,
            theta_policy=policy if theta is None else {"fixed": list(theta.coords)},
        )

    elif kind == "wasserstein":
        _check_keys(top, common | {"space", "left", "right", "grids"}, "")
        space = _get(top, "space", "", "cocycle")
        if space not in ("torus", "cocycle"):
            raise ConfigError("space", f"expected 'torus' or 'cocycle', got {space!r}")
        if space == "torus":
            left = parse_torus_measure(_get(top, "left", ""), "left")
            right = parse_torus_measure(_get(top, "right", ""), "right")
            grids: list[int] = []
        else:
            left = parse_cocycle_measure(_get(top, "left", ""), "left")
            right = parse_cocycle_measure(_get(top, "right", ""), "right")
            default_grid = GMetric.default_for(left.atoms[0].d).grid_points_per_dim
            grids = [
                _positive_int(v, f"grids[{i}]")
                for i, v in enumerate(
                    _expect_list(_get(top, "grids", "", [32, 64, 128, default_grid]), "grids")
                )
            ]
            grids = sorted(set(grids))
        params.update(space=space, left=left, right=right, grids=grids)
        resolved.update(space=space, grids=grids)

    return ExperimentConfig(
        kind=kind, seed=seed, threads=threads, out_dir=out_dir, plots=plots,
        params=params, resolved=resolved,
    )


def load_config(path: str | Path, base_out: Path | None = None) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError("<file>", f"YAML parse error at {where}: {err}") from err
    return parse_experiment(raw, base_out=base_out)
