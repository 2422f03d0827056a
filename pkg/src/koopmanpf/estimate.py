"""Data-driven estimation of participation factors and generalized
participations.

For an initial state x0, one state coordinate ell of the variational
initial condition is set to a small Delta; the prolonged system is
simulated for 2N uniform samples; Prony-type DMD extracts eigenvalues and
modes; the eigenvalue closest to each requested target is matched; and the
participation value is read off the variation block of the matched mode,
divided by Delta. Perturbing ell = k yields the participation factor
P_j^k, ell != k the mode-in-state generalized participation P_j^{k(ell)}.

Grid sweeps evaluate this at every node of a rectangular grid (optionally
through a coordinate transform, e.g. polar) and summarize mean absolute
errors against an analytic oracle.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional, Sequence

import numpy as np

from .dmd import DmdError, DmdSpectrum, prony_dmd
from .dynsys import NonFinite, Trajectory, VectorField, prolong, rk4_integrate
from .numerics import NumericsError

STATUSES = ("ok", "no_match", "dmd_failed", "diverged")


class EstimationError(Exception):
    pass


class EmptySet(EstimationError):
    """A mean was requested over zero successful estimates."""


def default_match_tol(target: complex) -> float:
    """Matching tolerance 0.1 * (1 + |target|): loose enough for sampling
    error, tight enough to separate the built-in spectra."""
    return 0.1 * (1.0 + abs(target))


@dataclass(frozen=True)
class EstimationConfig:
    """Settings of one estimation run.

    ``targets`` is a list of ``(label, eigenvalue)`` pairs; ``num_samples``
    must be even (2N samples give model order N). ``match_tol`` of None
    selects :func:`default_match_tol` per target. ``solver`` is the
    least-squares method of the characteristic fit ("qr" or "normal").
    """

    h: float
    num_samples: int
    targets: tuple
    delta: float = 1e-6
    substeps: int = 10
    match_tol: Optional[float] = None
    solver: str = "qr"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.num_samples < 2 or self.num_samples % 2 != 0:
            raise ValueError("num_samples must be even and >= 2")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.match_tol is not None and self.match_tol <= 0:
            raise ValueError("match_tol must be positive")
        if self.solver not in ("qr", "normal"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not self.targets:
            raise ValueError("targets must be nonempty")

    def tol_for(self, target: complex) -> float:
        if self.match_tol is not None:
            return self.match_tol
        return default_match_tol(target)


@dataclass(frozen=True)
class PfEstimate:
    """One estimated participation value (0-based state indices).

    ``value`` is present exactly when ``status == "ok"``; it is the
    variation-block mode entry of the matched eigenvalue divided by Delta.
    """

    x0: np.ndarray
    perturbed_index: int
    state_k: int
    target_label: str
    target: complex
    status: str
    matched_lambda: Optional[complex] = None
    value: Optional[complex] = None


def match_eigenvalue(spectrum: DmdSpectrum, target: complex, tol: float):
    """Index of the estimated eigenvalue closest to ``target`` if within
    ``tol``, else None. Ties resolve to the smaller index."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    dist = np.abs(spectrum.lambda_hat - target)
    # degenerate discrete eigenvalues (rho ~ 0) map to non-finite lambda
    dist = np.where(np.isfinite(dist), dist, np.inf)
    j = int(np.argmin(dist))
    return j if dist[j] <= tol else None


def _simulate_prolonged(field: VectorField, x0, xi0, cfg: EstimationConfig):
    """Samples of the prolonged system, shape (num_samples, 2n)."""
    if field.fast_prolonged is not None:
        samples = field.fast_prolonged(
            np.asarray(x0, dtype=float),
            np.asarray(xi0, dtype=float),
            cfg.h,
            cfg.num_samples,
            cfg.substeps,
        )
        if not np.all(np.isfinite(samples)):
            raise NonFinite("prolonged trajectory diverged")
        return samples
    traj = rk4_integrate(
        prolong(field),
        np.concatenate([np.asarray(x0, float), np.asarray(xi0, float)]),
        cfg.h,
        cfg.num_samples - 1,
        cfg.substeps,
    )
    return traj.samples


def estimate_pf(
    field: VectorField, x0, perturbed_index: int, cfg: EstimationConfig
) -> list:
    """All participation estimates at one initial state.

    Returns one :class:`PfEstimate` per (target, state index) pair, in
    target-major order. Failures are reported through the status field,
    never raised.
    """
    x0 = np.asarray(x0, dtype=float)
    n = field.n
    if not 0 <= perturbed_index < n:
        raise ValueError(f"perturbed_index {perturbed_index} out of range")

    def all_with_status(status):
        return [
            PfEstimate(
                x0=x0,
                perturbed_index=perturbed_index,
                state_k=k,
                target_label=label,
                target=target,
                status=status,
            )
            for label, target in cfg.targets
            for k in range(n)
        ]

    xi0 = np.zeros(n)
    xi0[perturbed_index] = cfg.delta
    try:
        samples = _simulate_prolonged(field, x0, xi0, cfg)
    except NonFinite:
        return all_with_status("diverged")
    try:
        spectrum = prony_dmd(
            Trajectory(h=cfg.h, samples=samples), method=cfg.solver
        )
    except (NumericsError, DmdError):
        return all_with_status("dmd_failed")

    out = []
    for label, target in cfg.targets:
        j = match_eigenvalue(spectrum, target, cfg.tol_for(target))
        for k in range(n):
            if j is None:
                out.append(
                    PfEstimate(
                        x0=x0,
                        perturbed_index=perturbed_index,
                        state_k=k,
                        target_label=label,
                        target=target,
                        status="no_match",
                    )
                )
            else:
                out.append(
                    PfEstimate(
                        x0=x0,
                        perturbed_index=perturbed_index,
                        state_k=k,
                        target_label=label,
                        target=target,
                        status="ok",
                        matched_lambda=complex(spectrum.lambda_hat[j]),
                        value=complex(spectrum.modes[n + k, j]) / cfg.delta,
                    )
                )
    return out


@dataclass(frozen=True)
class GridAxis:
    """One grid dimension; ``endpoint=False`` drops the upper bound
    (half-open axes such as an angle over [-pi, pi))."""

    minimum: float
    maximum: float
    count: int
    endpoint: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not np.isfinite(self.minimum) or not np.isfinite(self.maximum):
            raise ValueError("axis bounds must be finite")

    def points(self) -> np.ndarray:
        return np.linspace(
            self.minimum, self.maximum, self.count, endpoint=self.endpoint
        )


@dataclass(frozen=True)
class PfGrid:
    """Sweep result: row-major grid nodes, the flat estimate list (node-major,
    then target-major, then state index), and the summary statistics."""

    axes: tuple
    nodes: np.ndarray
    estimates: tuple
    summary: dict


def mean_error(estimates: Sequence[PfEstimate], oracle: Callable) -> float:
    """Mean absolute deviation from ``oracle(x0, label, k)`` over the
    estimates with status ok."""
    errs = [
        abs(oracle(e.x0, e.target_label, e.state_k) - e.value)
        for e in estimates
        if e.status == "ok"
    ]
    if not errs:
        raise EmptySet("no successful estimates to average over")
    return float(np.mean(errs))


def _summarize(estimates, targets, n, total_nodes, oracle):
    per_target = {}
    for label, target in targets:
        sub = [e for e in estimates if e.target_label == label]
        matched_nodes = sum(
            1 for e in sub if e.state_k == 0 and e.status == "ok"
        )
        entry = {
            "target": complex(target),
            "matched_points": matched_nodes,
            "mean_abs_error": {},
        }
        if oracle is not None:
            for k in range(n):
                ok = [e for e in sub if e.state_k == k and e.status == "ok"]
                try:
                    entry["mean_abs_error"][k] = mean_error(ok, oracle)
                except EmptySet:
                    entry["mean_abs_error"][k] = None
        per_target[label] = entry
    status_counts = {s: 0 for s in STATUSES}
    for e in estimates:
        status_counts[e.status] += 1
    return {
        "total_points": total_nodes,
        "targets": per_target,
        "status_counts": status_counts,
    }


def grid_sweep(
    field: VectorField,
    axes: Sequence[GridAxis],
    perturbed_index: int,
    cfg: EstimationConfig,
    oracle: Optional[Callable] = None,
    transform: Optional[Callable] = None,
    threads: int = 1,
) -> PfGrid:
    """Run :func:`estimate_pf` at every node of a rectangular grid.

    ``transform`` maps a grid coordinate tuple to the initial state (e.g.
    polar to Cartesian); ``oracle(x0, label, k)`` supplies analytic values
    for the summary errors. Output ordering is row-major over the axes and
    independent of ``threads``.
    """
    axes = tuple(axes)
    coords = [ax.points() for ax in axes]
    raw_nodes = list(itertools.product(*coords))
    if transform is not None:
        nodes = np.array([transform(np.array(p)) for p in raw_nodes])
    else:
        nodes = np.array(raw_nodes)

    def work(x0):
        return estimate_pf(field, x0, perturbed_index, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_node = list(pool.map(work, nodes))
    else:
        per_node = [work(x0) for x0 in nodes]
    estimates = tuple(itertools.chain.from_iterable(per_node))
    summary = _summarize(
        estimates, cfg.targets, field.n, len(nodes), oracle
    )
    return PfGrid(axes=axes, nodes=nodes, estimates=estimates, summary=summary)
