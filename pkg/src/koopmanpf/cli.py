"""Command-line front end.

Subcommands:

* ``lti-pf``    -- participation factors and generalized participations of
                   a linear system given as a matrix file.
* ``simulate``  -- integrate a built-in system and write the trajectory.
* ``estimate``  -- data-driven participation estimates at one initial state.
* ``sweep``     -- grid sweep from a JSON config file, written as CSV/JSON.

All state indices on this surface (``--l``, the ``state_k`` and
``perturbed_l`` columns) are 1-based; the library underneath is 0-based.

Exit codes: 0 success, 1 invalid input/config, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynsys import SystemBundle, ep_system, lc_system, linear_bundle, rk4_integrate
from .estimate import EstimationConfig, GridAxis, PfGrid, grid_sweep
from .lti import biorthogonal_eig, generalized_participations

GRID_SCHEMA = "koopmanpf-grid-1"
TRAJECTORY_SCHEMA = "koopmanpf-trajectory-1"

GRID_COLUMNS_TAIL = [
    "target_label",
    "state_k",
    "perturbed_l",
    "status",
    "lambda_re",
    "lambda_im",
    "pf_re",
    "pf_im",
    "pf_abs",
]


class CliError(Exception):
    pass


class ParseError(CliError):
    """The config file is not syntactically valid or has unknown keys."""


class ValidationError(CliError):
    """The config parsed but violates one or more invariants."""


class IoError(CliError):
    """Reading or writing an artifact failed."""


def _fmt(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# Config loading


def label_for_index(index) -> str:
    return "m" + "_".join(str(i) for i in index)


def index_for_label(label: str):
    if not label.startswith("m"):
        raise ValueError(f"not a mode label: {label!r}")
    return tuple(int(p) for p in label[1:].split("_"))


_SYSTEM_DEFAULTS = {
    "ex1_ep": {
        "grid": [
            {"min": -6.0, "max": 6.0, "count": 21},
            {"min": -6.0, "max": 6.0, "count": 21},
        ],
        "grid_coords": "cartesian",
        "perturbed_l": 2,
        "estimation": {
            "h": 0.3,
            "num_samples": 6,
            "targets": [
                {"label": "m1_0", "re": -1.0, "im": 0.0},
                {"label": "m0_1", "re": -math.sqrt(2.0), "im": 0.0},
                {"label": "m0_2", "re": -2.0 * math.sqrt(2.0), "im": 0.0},
            ],
        },
    },
    "ex2_lc": {
        "grid": [
            {"min": 0.5, "max": 2.5, "count": 21},
            {"min": -math.pi, "max": math.pi, "count": 21, "endpoint": False},
        ],
        "grid_coords": "polar",
        "perturbed_l": 1,
        "estimation": {
            "h": 0.1,
            "num_samples": 100,
            "targets": [
                {"label": "m1_0", "re": 0.0, "im": 1.0},
                {"label": "m1_1", "re": -2.0, "im": 1.0},
            ],
        },
    },
}

_ESTIMATION_KEYS = {
    "h",
    "num_samples",
    "delta",
    "substeps",
    "match_tol",
    "solver",
    "targets",
}
_TOP_KEYS = {
    "system",
    "grid",
    "grid_coords",
    "perturbed_l",
    "estimation",
    "output",
    "oracle",
    "threads",
}
_AXIS_KEYS = {"min", "max", "count", "endpoint"}
_OUTPUT_KEYS = {"path", "format"}
_TARGET_KEYS = {"label", "re", "im"}


def _check_keys(mapping, allowed, where):
    for key in mapping:
        if key not in allowed:
            raise ParseError(f"unknown key {key!r} in {where}")


@dataclass(frozen=True)
class Config:
    """Fully resolved sweep configuration."""

    system_name: str
    bundle: SystemBundle
    axes: tuple
    grid_coords: str
    perturbed_index: int  # 0-based
    estimation: EstimationConfig
    output_path: Optional[str]
    output_format: str
    oracle: str
    threads: int


def _build_bundle(system):
    if system == "ex1_ep":
        return "ex1_ep", ep_system()
    if system == "ex2_lc":
        return "ex2_lc", lc_system()
    if isinstance(system, dict) and set(system) == {"lti"}:
        matrix = np.asarray(system["lti"], dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError("system.lti matrix must be square")
        return "lti", linear_bundle(matrix)
    raise ValidationError(
        f"system must be 'ex1_ep', 'ex2_lc', or {{'lti': matrix}}, got {system!r}"
    )


def _default_lti_section(bundle):
    return {
        "grid": [{"min": -1.0, "max": 1.0, "count": 3}] * bundle.n,
        "grid_coords": "cartesian",
        "perturbed_l": 1,
        "estimation": {
            "h": 0.1,
            "num_samples": 2 * bundle.n + 2,
            "targets": [
                {
                    "label": label_for_index(t.index),
                    "re": t.eigenvalue.real,
                    "im": t.eigenvalue.imag,
                }
                for t in bundle.triples
            ],
        },
    }


def parse_config(raw: dict) -> Config:
    """Validate a parsed config mapping and resolve system defaults.

    Unknown keys raise ParseError; every violated invariant is collected
    into one ValidationError.
    """
    if not isinstance(raw, dict):
        raise ParseError("config root must be an object")
    _check_keys(raw, _TOP_KEYS, "config")
    if "system" not in raw:
        raise ValidationError("missing required key 'system'")
    name, bundle = _build_bundle(raw["system"])
    defaults = _SYSTEM_DEFAULTS.get(name) or _default_lti_section(bundle)

    problems = []

    grid_raw = raw.get("grid", defaults["grid"])
    axes = []
    for i, ax in enumerate(grid_raw):
        if not isinstance(ax, dict):
            problems.append(f"grid[{i}] must be an object")
            continue
        _check_keys(ax, _AXIS_KEYS, f"grid[{i}]")
        try:
            axes.append(
                GridAxis(
                    minimum=float(ax["min"]),
                    maximum=float(ax["max"]),
                    count=int(ax["count"]),
                    endpoint=bool(ax.get("endpoint", True)),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            problems.append(f"grid[{i}]: {exc}")
    if len(grid_raw) != bundle.n:
        problems.append(
            f"grid must have {bundle.n} axes for this system, got {len(grid_raw)}"
        )

    grid_coords = raw.get("grid_coords", defaults["grid_coords"])
    if grid_coords not in ("cartesian", "polar"):
        problems.append(f"grid_coords must be cartesian or polar, got {grid_coords!r}")
    elif grid_coords == "polar" and bundle.n != 2:
        problems.append("polar grid_coords requires a planar system")

    perturbed_l = raw.get("perturbed_l", defaults["perturbed_l"])
    if not isinstance(perturbed_l, int) or not 1 <= perturbed_l <= bundle.n:
        problems.append(f"perturbed_l must be an integer in 1..{bundle.n}")
        perturbed_l = 1

    est_raw = dict(defaults["estimation"])
    user_est = raw.get("estimation", {})
    if not isinstance(user_est, dict):
        problems.append("estimation must be an object")
        user_est = {}
    _check_keys(user_est, _ESTIMATION_KEYS, "estimation")
    est_raw.update(user_est)

    targets = []
    for i, t in enumerate(est_raw.get("targets", [])):
        if not isinstance(t, dict):
            problems.append(f"estimation.targets[{i}] must be an object")
            continue
        _check_keys(t, _TARGET_KEYS, f"estimation.targets[{i}]")
        try:
            targets.append(
                (str(t["label"]), complex(float(t.get("re", 0.0)), float(t.get("im", 0.0))))
            )
        except (KeyError, ValueError, TypeError) as exc:
            problems.append(f"estimation.targets[{i}]: {exc}")

    estimation = None
    try:
        estimation = EstimationConfig(
            h=float(est_raw["h"]),
            num_samples=int(est_raw["num_samples"]),
            targets=tuple(targets),
            delta=float(est_raw.get("delta", 1e-6)),
            substeps=int(est_raw.get("substeps", 10)),
            match_tol=(
                None
                if est_raw.get("match_tol") is None
                else float(est_raw["match_tol"])
            ),
            solver=str(est_raw.get("solver", "qr")),
        )
    except (KeyError, ValueError, TypeError) as exc:
        problems.append(f"estimation: {exc}")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        problems.append("output must be an object")
        output = {}
    _check_keys(output, _OUTPUT_KEYS, "output")
    output_format = output.get("format", "csv")
    if output_format not in ("csv", "json"):
        problems.append(f"output.format must be csv or json, got {output_format!r}")

    oracle = raw.get("oracle", "builtin" if name != "lti" else "builtin")
    if oracle not in ("none", "builtin"):
        problems.append(f"oracle must be none or builtin, got {oracle!r}")

    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        problems.append("threads must be a positive integer")
        threads = 1

    if problems:
        raise ValidationError("; ".join(problems))
    return Config(
        system_name=name,
        bundle=bundle,
        axes=tuple(axes),
        grid_coords=grid_coords,
        perturbed_index=perturbed_l - 1,
        estimation=estimation,
        output_path=output.get("path"),
        output_format=output_format,
        oracle=oracle,
        threads=threads,
    )


def load_config(path: str) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): "
            f"{exc.msg}"
        ) from exc
    return parse_config(raw)


def polar_to_cartesian(p):
    r, theta = p
    return np.array([r * math.cos(theta), r * math.sin(theta)])


def builtin_oracle(bundle: SystemBundle, perturbed_index: int):
    """Closed-form oracle matching the estimation pipeline's output: the
    participation factor when the perturbed and observed indices agree,
    the mode-in-state generalized participation otherwise."""
    from .dynsys import analytic_pf

    def oracle(x0, label, k):
        index = index_for_label(label)
        if k == perturbed_index:
            return analytic_pf(bundle, "pf", index, k, x0)
        return analytic_pf(
            bundle, "gp_mode_in_state", index, k, x0, aux_index=perturbed_index
        )

    return oracle


# ---------------------------------------------------------------------------
# Grid serialization


def grid_records(grid: PfGrid) -> list:
    """Flatten a PfGrid into serializable records (1-based indices)."""
    records = []
    for e in grid.estimates:
        rec = {}
        for i, xv in enumerate(np.asarray(e.x0).ravel()):
            rec[f"x0_{i + 1}"] = float(xv)
        rec["target_label"] = e.target_label
        rec["state_k"] = e.state_k + 1
        rec["perturbed_l"] = e.perturbed_index + 1
        rec["status"] = e.status
        rec["lambda_re"] = None if e.matched_lambda is None else e.matched_lambda.real
        rec["lambda_im"] = None if e.matched_lambda is None else e.matched_lambda.imag
        rec["pf_re"] = None if e.value is None else e.value.real
        rec["pf_im"] = None if e.value is None else e.value.imag
        rec["pf_abs"] = None if e.value is None else abs(e.value)
        records.append(rec)
    return records


def summary_payload(summary: dict) -> dict:
    out = {"total_points": summary["total_points"], "targets": {}}
    for label, entry in summary["targets"].items():
        out["targets"][label] = {
            "target_re": entry["target"].real,
            "target_im": entry["target"].imag,
            "matched_points": entry["matched_points"],
            "mean_abs_error": {
                str(k + 1): v for k, v in entry["mean_abs_error"].items()
            },
        }
    out["status_counts"] = dict(summary["status_counts"])
    return out


def _grid_columns(n: int) -> list:
    return [f"x0_{i + 1}" for i in range(n)] + GRID_COLUMNS_TAIL


def write_records_csv(records: list, n: int, path: str) -> None:
    columns = _grid_columns(n)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# {GRID_SCHEMA}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                row = []
                for col in columns:
                    v = rec[col]
                    if v is None:
                        row.append("")
                    elif isinstance(v, float):
                        row.append(_fmt(v))
                    else:
                        row.append(str(v))
                writer.writerow(row)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_records_json(records: list, summary, n: int, path: str) -> None:
    payload = {
        "schema": GRID_SCHEMA,
        "state_dimension": n,
        "records": records,
        "summary": summary,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_grid(grid: PfGrid, path: str, fmt: str) -> None:
    """Serialize a sweep. CSV holds one row per (node, target, state index);
    JSON mirrors the rows and adds the summary block."""
    n = grid.nodes.shape[1]
    records = grid_records(grid)
    if fmt == "csv":
        write_records_csv(records, n, path)
    elif fmt == "json":
        write_records_json(records, summary_payload(grid.summary), n, path)
    else:
        raise ValidationError(f"unknown format {fmt!r}")


def read_grid(path: str, fmt: str):
    """Read a serialized sweep back as ``(records, summary, n)``; the CSV
    format carries no summary (None)."""
    try:
        if fmt == "json":
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            if payload.get("schema") != GRID_SCHEMA:
                raise ParseError(f"unexpected schema {payload.get('schema')!r}")
            return payload["records"], payload["summary"], payload["state_dimension"]
        if fmt == "csv":
            with open(path, "r", encoding="utf-8", newline="") as fh:
                stamp = fh.readline().strip()
                if stamp != f"# {GRID_SCHEMA}":
                    raise ParseError(f"unexpected schema stamp {stamp!r}")
                reader = csv.reader(fh)
                columns = next(reader)
                n = sum(1 for c in columns if c.startswith("x0_"))
                if columns != _grid_columns(n):
                    raise ParseError("unexpected column layout")
                records = []
                for row in reader:
                    rec = {}
                    for col, cell in zip(columns, row):
                        if col in ("target_label", "status"):
                            rec[col] = cell
                        elif col in ("state_k", "perturbed_l"):
                            rec[col] = int(cell)
                        else:
                            rec[col] = None if cell == "" else float(cell)
                    records.append(rec)
                return records, None, n
        raise ValidationError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def write_trajectory(traj, path: str, fmt: str) -> None:
    n = traj.samples.shape[1]
    try:
        if fmt == "csv":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(f"# {TRAJECTORY_SCHEMA}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["t"] + [f"x_{i + 1}" for i in range(n)])
                for t, row in enumerate(traj.samples):
                    writer.writerow([_fmt(t * traj.h)] + [_fmt(v) for v in row])
        elif fmt == "json":
            payload = {
                "schema": TRAJECTORY_SCHEMA,
                "h": traj.h,
                "samples": [[float(v) for v in row] for row in traj.samples],
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=1)
                fh.write("\n")
        else:
            raise ValidationError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands


def _get_bundle(name: str) -> SystemBundle:
    if name == "ex1_ep":
        return ep_system()
    if name == "ex2_lc":
        return lc_system()
    raise ValidationError(f"unknown system {name!r} (expected ex1_ep or ex2_lc)")


def _format_matrix(m, out) -> None:
    for row in np.atleast_2d(m):
        out.write("  [" + ", ".join(f"{v: .6f}" for v in row) + "]\n")


def _cmd_lti_pf(args, out) -> int:
    try:
        with open(args.matrix, "r", encoding="utf-8") as fh:
            a = np.asarray(json.load(fh), dtype=float)
    except OSError as exc:
        raise ValidationError(f"cannot read matrix file: {exc}") from exc
    except (json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"matrix file is not a JSON matrix: {exc}") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {a.shape}")
    basis = biorthogonal_eig(a)
    tensors = generalized_participations(basis)
    out.write("eigenvalues:\n")
    for j, lam in enumerate(basis.eigenvalues):
        out.write(f"  lambda_{j + 1} = {lam.real:.6f}{lam.imag:+.6f}j\n")
    out.write("participation factors P[j, k] (real part):\n")
    _format_matrix(tensors.pf.real, out)
    out.write(f"column sums: {np.round(tensors.pf.sum(axis=0).real, 10).tolist()}\n")
    out.write(f"row sums:    {np.round(tensors.pf.sum(axis=1).real, 10).tolist()}\n")
    out.write("mode-in-state generalized participations P[j, k, l] (real part):\n")
    for j in range(basis.n):
        out.write(f" mode {j + 1}:\n")
        _format_matrix(tensors.gp_mode_in_state[j].real, out)
    out.write("state-in-mode generalized participations P[i, j, k] (real part):\n")
    for i in range(basis.n):
        out.write(f" mode {i + 1}:\n")
        _format_matrix(tensors.gp_state_in_mode[i].real, out)
    return 0


def _cmd_simulate(args, out) -> int:
    bundle = _get_bundle(args.system)
    x0 = np.asarray(args.x0, dtype=float)
    if x0.shape != (bundle.n,):
        raise ValidationError(f"--x0 needs {bundle.n} values")
    traj = rk4_integrate(bundle.field, x0, args.h, args.steps, args.substeps)
    write_trajectory(traj, args.out, args.format)
    out.write(f"wrote {len(traj)} samples to {args.out}\n")
    return 0


def _cmd_estimate(args, out) -> int:
    from .estimate import estimate_pf

    bundle = _get_bundle(args.system)
    x0 = np.asarray(args.x0, dtype=float)
    if x0.shape != (bundle.n,):
        raise ValidationError(f"--x0 needs {bundle.n} values")
    if not 1 <= args.l <= bundle.n:
        raise ValidationError(f"--l must be in 1..{bundle.n}")
    targets = tuple(
        (label_for_index(t.index), complex(t.eigenvalue)) for t in bundle.triples
    )
    cfg = EstimationConfig(
        h=args.h,
        num_samples=args.samples,
        targets=targets,
        delta=args.delta,
        substeps=args.substeps,
    )
    for e in estimate_pf(bundle.field, x0, args.l - 1, cfg):
        head = f"{e.target_label} k={e.state_k + 1} l={e.perturbed_index + 1}"
        if e.status == "ok":
            out.write(
                f"{head} status=ok lambda={e.matched_lambda:.6f} "
                f"pf={e.value:.6f} |pf|={abs(e.value):.6f}\n"
            )
        else:
            out.write(f"{head} status={e.status}\n")
    return 0


def _cmd_sweep(args, out) -> int:
    config = load_config(args.config)
    estimation = config.estimation
    overrides = {}
    if args.delta is not None:
        overrides["delta"] = args.delta
    if args.h is not None:
        overrides["h"] = args.h
    if args.samples is not None:
        overrides["num_samples"] = args.samples
    if overrides:
        estimation = EstimationConfig(
            h=overrides.get("h", estimation.h),
            num_samples=overrides.get("num_samples", estimation.num_samples),
            targets=estimation.targets,
            delta=overrides.get("delta", estimation.delta),
            substeps=estimation.substeps,
            match_tol=estimation.match_tol,
            solver=estimation.solver,
        )
    transform = polar_to_cartesian if config.grid_coords == "polar" else None
    oracle = (
        builtin_oracle(config.bundle, config.perturbed_index)
        if config.oracle == "builtin"
        else None
    )
    threads = args.threads if args.threads is not None else config.threads
    grid = grid_sweep(
        config.bundle.field,
        config.axes,
        config.perturbed_index,
        estimation,
        oracle=oracle,
        transform=transform,
        threads=threads,
    )
    path = args.out if args.out is not None else config.output_path
    fmt = args.format if args.format is not None else config.output_format
    if path is not None:
        write_grid(grid, path, fmt)
        out.write(f"wrote {len(grid.estimates)} rows to {path}\n")
    summary = grid.summary
    out.write(f"total points: {summary['total_points']}\n")
    for label, entry in summary["targets"].items():
        out.write(
            f"{label}: matched {entry['matched_points']}/{summary['total_points']}\n"
        )
        for k, err in entry["mean_abs_error"].items():
            shown = "n/a" if err is None else f"{err:.6f}"
            out.write(f"  err({label}, k={k + 1}) = {shown}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopmanpf",
        description=(
            "Participation factors for linear and nonlinear systems, "
            "with data-driven estimation from simulated trajectories."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lti-pf", help="participation factors of a linear system")
    p.add_argument("--matrix", required=True, help="JSON file with a square matrix")

    p = sub.add_parser("simulate", help="integrate a built-in system")
    p.add_argument("--system", required=True, choices=["ex1_ep", "ex2_lc"])
    p.add_argument("--x0", required=True, type=float, nargs="+")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--substeps", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("estimate", help="estimate participations at one state")
    p.add_argument("--system", required=True, choices=["ex1_ep", "ex2_lc"])
    p.add_argument("--x0", required=True, type=float, nargs="+")
    p.add_argument("--l", type=int, default=1, help="1-based perturbed state index")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--substeps", type=int, default=10)

    p = sub.add_parser("sweep", help="grid sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    return parser


_HANDLERS = {
    "lti-pf": _cmd_lti_pf,
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
}


def run_command(argv, out=None, err=None) -> int:
    """Dispatch a parsed command line; returns the process exit code."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _HANDLERS[args.command](args, out)
    except (ParseError, ValidationError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        err.write(f"runtime error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
