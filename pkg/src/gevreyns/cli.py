"""Batch experiment driver.

Subcommands: solve, picard, norms, verify, radius.  One TOML config file per
run; the only environment override is GEVREY_OUT for the output directory.
Every run writes a manifest.json listing the resolved config and a sha256
digest of each artifact, so reruns with the same seed are byte-checkable.

Exit codes: 0 success, 2 config/validation error, 3 numerical failure
(instability/overflow), 1 infrastructure error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .analyticity import default_growth_times, gevrey_norm_monitor, radius_growth_experiment
from .decomposition import DyadicSystem, UniformSystem
from .ensembles import init_data
from .errors import (
    GevreyNSError,
    InvalidParameterError,
    RejectedInputError,
    UnstableError,
    UsageError,
)
from .norms import NormSpec, WeightSpec, norm_report, snapshot_norm
from .reporting import format_value, write_csv, write_json, write_manifest
from .solver import SolverConfig, picard_solve, save_solve, smallness_check, step_solve
from .spectral import Grid, load_field, save_field
from .verification import EnsembleSpec, VERIFY_IDS, verify


class ConfigError(InvalidParameterError):
    """Raised with the offending config key in the message."""


def _require(table: dict, key: str, typ, path: str, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    value = table[key]
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return int(value)
    if not isinstance(value, typ):
        raise ConfigError(f"{path}.{key}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def _parse_grid(cfg: dict) -> Grid:
    table = cfg.get("grid")
    if table is None:
        raise ConfigError("grid: missing required section")
    n_dims = _require(table, "n_dims", int, "grid", required=True)
    resolution = _require(table, "resolution", int, "grid", required=True)
    period = _require(table, "period", float, "grid", default=2.0 * np.pi)
    try:
        return Grid(n_dims, resolution, period)
    except InvalidParameterError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _parse_weight(table: dict | None, path: str) -> WeightSpec:
    if not table:
        return WeightSpec()
    try:
        return WeightSpec(
            kind=_require(table, "kind", str, path, default="none"),
            rate=_require(table, "rate", float, path, default=0.0),
            power=_require(table, "power", float, path, default=1.0),
            clamp=_require(table, "clamp", bool, path, default=False),
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_norm(table: dict, path: str) -> NormSpec:
    try:
        gamma = table.get("gamma")
        return NormSpec(
            family=_require(table, "family", str, path, required=True),
            s=_require(table, "s", float, path, default=0.0),
            p=_require(table, "p", float, path, default=2.0),
            q=_require(table, "q", float, path, default=1.0),
            gamma=float(gamma) if gamma is not None else None,
            weight=_parse_weight(table.get("weight"), f"{path}.weight"),
            label=_require(table, "label", str, path, default=""),
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_norm_list(cfg: dict) -> list[NormSpec]:
    return [_parse_norm(t, f"norms[{i}]") for i, t in enumerate(cfg.get("norms", []))]


def _parse_datum(cfg: dict, grid: Grid, seed: int):
    table = cfg.get("data")
    if table is None:
        raise ConfigError("data: missing required section")
    kind = _require(table, "kind", str, "data", required=True)
    if kind == "snapshot":
        path = _require(table, "path", str, "data", required=True)
        return load_field(path)
    params = {k: v for k, v in table.items() if k != "kind"}
    params.setdefault("seed", seed)
    try:
        return init_data(kind, grid, **params)
    except (InvalidParameterError, KeyError) as exc:
        raise ConfigError(f"data: {exc}") from exc


def _parse_solver(cfg: dict, norms: list[NormSpec]) -> SolverConfig:
    table = cfg.get("solver", {})
    calibration = None
    cal_file = table.get("calibration_file")
    if cal_file is not None:
        calibration = json.loads(Path(cal_file).read_text(encoding="utf-8"))
    try:
        return SolverConfig(
            alpha=_require(table, "alpha", float, "solver", default=1.0),
            T=_require(table, "T", float, "solver", default=0.5),
            dt=_require(table, "dt", float, "solver", default=1e-3),
            n_picard=_require(table, "n_picard", int, "solver", default=6),
            picard_time_samples=_require(table, "picard_time_samples", int, "solver", default=65),
            delta=_require(table, "delta", float, "solver", default=1.0),
            gns_epsilon=_require(table, "gns_epsilon", float, "solver", default=0.1),
            nonlinearity=_require(table, "nonlinearity", bool, "solver", default=True),
            allow_large_data=_require(table, "allow_large_data", bool, "solver", default=False),
            save_every=_require(table, "save_every", int, "solver", default=1),
            time_grid_kind=_require(table, "time_grid_kind", str, "solver", default="geometric"),
            diagnostics_norms=norms,
            calibration=calibration,
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"solver: {exc}") from exc


def _parse_ensemble(cfg: dict, seed: int) -> EnsembleSpec:
    table = cfg.get("ensemble", {})
    try:
        return EnsembleSpec(
            n_samples=_require(table, "n_samples", int, "ensemble", default=10),
            field_law=_require(table, "field_law", str, "ensemble", default="gaussian_spectrum"),
            law_param=_require(table, "law_param", float, "ensemble", default=2.5),
            resolutions=tuple(table.get("resolutions", [32, 64])),
            n_dims=_require(table, "n_dims", int, "ensemble", default=2),
            seed=seed,
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"ensemble: {exc}") from exc


# -- subcommand bodies ----------------------------------------------------------


def _run_solve(cfg: dict, out: Path, seed: int, quiet: bool) -> None:
    grid = _parse_grid(cfg)
    norms = _parse_norm_list(cfg)
    scfg = _parse_solver(cfg, norms)
    u0 = _parse_datum(cfg, grid, seed)
    trace = step_solve(u0, scfg)
    save_solve(out, scfg, trace)
    from .figures import plot_diagnostics

    plot_diagnostics(trace.diagnostics, out / "diagnostics.png")
    if not quiet:
        print(f"solve: {len(trace)} states saved, final t = {trace.times[-1]:g}")


def _run_picard(cfg: dict, out: Path, seed: int, quiet: bool) -> None:
    grid = _parse_grid(cfg)
    norms = _parse_norm_list(cfg)
    scfg = _parse_solver(cfg, norms)
    u0 = _parse_datum(cfg, grid, seed)
    report = picard_solve(u0, scfg)
    small = smallness_check(u0, scfg)
    payload = {
        "iterate_distances": report.iterate_distances,
        "contraction_ratios": report.contraction_ratios,
        "converged": report.converged,
        "diverged": report.diverged,
        "metric": report.metric_labels,
        "smallness": small,
    }
    write_json(out / "picard_report.json", payload)
    rows = [
        {
            "iterate": i + 1,
            "distance": d,
            "ratio": report.contraction_ratios[i - 1] if i >= 1 else "",
        }
        for i, d in enumerate(report.iterate_distances)
    ]
    write_csv(out / "picard_distances.csv", ["iterate", "distance", "ratio"], rows)
    save_field(report.final_trace.states[-1], out / "final_state")
    from .figures import plot_picard

    plot_picard(report.iterate_distances, report.contraction_ratios, out / "picard.png")
    if not quiet:
        print(
            f"picard: converged={report.converged} distances="
            f"{[format_value(d) for d in report.iterate_distances]}"
        )


def _run_norms(cfg: dict, out: Path, seed: int, quiet: bool) -> None:
    grid = _parse_grid(cfg)
    norms = _parse_norm_list(cfg)
    if not norms:
        raise ConfigError("norms: at least one [[norms]] table is required")
    u0 = _parse_datum(cfg, grid, seed)
    dyadic = DyadicSystem(grid)
    uniform = UniformSystem(grid)
    reports = []
    rows = []
    labels = []
    values = []
    for spec in norms:
        value = snapshot_norm(u0, spec, dyadic, uniform)
        reports.append(norm_report(value, spec, grid, dyadic, uniform))
        rows.append(
            {"label": spec.describe(), "family": spec.family, "s": spec.s,
             "p": spec.p, "q": spec.q, "value": value}
        )
        labels.append(spec.describe())
        values.append(value)
    write_json(out / "norms.json", reports)
    write_csv(out / "norms.csv", ["label", "family", "s", "p", "q", "value"], rows)
    from .figures import plot_norms

    plot_norms(labels, values, out / "norms.png")
    if not quiet:
        for row in rows:
            print(f"{row['label']}: {format_value(row['value'])}")


def _run_verify(cfg: dict, out: Path, seed: int, quiet: bool) -> None:
    table = cfg.get("verify", {})
    ids = table.get("ids", list(VERIFY_IDS))
    drift_bound = _require(table, "drift_bound", float, "verify", default=2.0)
    for vid in ids:
        if vid not in VERIFY_IDS:
            raise ConfigError(f"verify.ids: unknown id {vid!r}")
    spec = _parse_ensemble(cfg, seed)
    reports = []
    rows = []
    for vid in ids:
        rep = verify(vid, spec, drift_bound=drift_bound)
        reports.append(rep)
        write_json(out / f"verify_{vid}.json", rep.to_dict())
        row = {"id": vid, "drift": rep.resolution_drift, "pass": rep.passed}
        for N in spec.resolutions:
            row[f"C_emp_N{N}"] = rep.per_resolution.get(N, float("nan"))
        rows.append(row)
        if not quiet:
            print(f"{vid}: pass={rep.passed} C_emp={format_value(rep.C_emp)}")
    columns = ["id"] + [f"C_emp_N{N}" for N in spec.resolutions] + ["drift", "pass"]
    write_csv(out / "verify_summary.csv", columns, rows)
    from .figures import plot_verify

    plot_verify(reports, out / "verify.png")


def _run_radius(cfg: dict, out: Path, seed: int, quiet: bool) -> None:
    grid = _parse_grid(cfg)
    norms = _parse_norm_list(cfg)
    scfg = _parse_solver(cfg, [])
    u0 = _parse_datum(cfg, grid, seed)
    table = cfg.get("radius", {})
    alpha = _require(table, "alpha", float, "radius", default=scfg.alpha)
    t_list = table.get("t_list") or [float(t) for t in default_growth_times(alpha)]
    result = radius_growth_experiment(u0, alpha, t_list, scfg)
    rows = [
        {
            "t": f.t,
            "radius": f.radius,
            "residual": f.fit_residual,
            "window_min": f.frequency_window[0],
            "window_max": f.frequency_window[1],
        }
        for f in result["per_time"]
    ]
    write_csv(
        out / "radius_report.csv",
        ["t", "radius", "residual", "window_min", "window_max"],
        rows,
    )
    monitor_info = None
    if norms:
        trace = step_solve(u0, scfg, save_times=t_list)
        mon = gevrey_norm_monitor(trace, alpha, norms[0].weight.rate, norms[0])
        monitor_info = {
            "alarm_time": mon["alarm_time"],
            "max_over_initial": float(np.max(mon["values"]) / mon["values"][0]),
        }
    import hashlib

    from .reporting import config_to_dict

    solver_resolved = config_to_dict(scfg)
    solver_digest = hashlib.sha256(
        json.dumps(solver_resolved, sort_keys=True).encode()
    ).hexdigest()
    write_json(
        out / "growth_report.json",
        {
            "exponent": result["exponent"],
            "target": 1.0 / (2.0 * alpha),
            "per_time": rows,
            "monitor": monitor_info,
            "solver": {"alpha": alpha, "dt": scfg.dt, "T": scfg.T},
            "solver_config_digest": solver_digest,
        },
    )
    from .figures import plot_radius

    plot_radius(result["per_time"], result["exponent"], out / "radius.png")
    if not quiet:
        print(f"radius: exponent = {format_value(result['exponent'])}")


_COMMANDS = {
    "solve": _run_solve,
    "picard": _run_picard,
    "norms": _run_norms,
    "verify": _run_verify,
    "radius": _run_radius,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevreyns",
        description="Batch experiments for the fractional Navier-Stokes analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ConfigError(f"config: file {cfg_path} does not exist")
        with open(cfg_path, "rb") as fh:
            cfg = tomllib.load(fh)
        declared = cfg.get("command")
        if declared is not None and declared != args.command:
            raise ConfigError(
                f"command: config declares {declared!r} but subcommand is {args.command!r}"
            )
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        out_dir = os.environ.get("GEVREY_OUT") or cfg.get("output_dir")
        if not out_dir:
            raise ConfigError("output_dir: missing (set in config or via GEVREY_OUT)")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](cfg, out, seed, args.quiet)
        resolved = dict(cfg)
        resolved["seed"] = seed
        resolved["output_dir"] = str(out)
        write_manifest(out, args.command, resolved, seed, __version__)
        return 0
    except (ConfigError, UsageError, RejectedInputError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnstableError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except tomllib.TOMLDecodeError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except GevreyNSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # infrastructure faults
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
