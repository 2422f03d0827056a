"""Dense linear-algebra contract shared by the rest of the package.

Thin, deterministic wrappers around numpy.linalg with explicit error
classes so callers can tell apart genuine degeneracy (rank loss, singular
systems) from solver failure.
"""

from __future__ import annotations

import numpy as np

#: Singular values below RANK_RCOND times the largest one count as zero.
RANK_RCOND = 1e-12


class NumericsError(Exception):
    """Base class for linear-algebra failures."""


class NonConvergence(NumericsError):
    """The iterative eigensolver failed to converge."""


class RankDeficient(NumericsError):
    """A least-squares matrix has numerical rank below its column count."""


class Singular(NumericsError):
    """A square system is numerically singular."""


def _as_matrix(m, name="matrix"):
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or (
        np.iscomplexobj(a) and not np.all(np.isfinite(a.imag))
    ):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def normalize_eigenvectors(v):
    """Scale each column to unit 2-norm with its largest-magnitude entry
    rotated to be real-positive, so decompositions are reproducible."""
    v = np.array(v, dtype=complex)
    for j in range(v.shape[1]):
        col = v[:, j]
        nrm = np.linalg.norm(col)
        if nrm > 0:
            col = col / nrm
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if np.abs(pivot) > 0:
            col = col * (np.abs(pivot) / pivot)
        v[:, j] = col
    return v


def eig_general(m):
    """General eigendecomposition of a square matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    normalized deterministically (unit norm, largest entry real-positive).
    Complex-conjugate pairs of a real input are both present, as returned
    by LAPACK.
    """
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        cond = _cond_estimate(a)
        raise NonConvergence(
            f"eigensolver did not converge (cond estimate {cond:.3e}): {exc}"
        ) from exc
    return w, normalize_eigenvectors(v)


def _cond_estimate(a):
    try:
        s = np.linalg.svd(a, compute_uv=False)
        return float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    except np.linalg.LinAlgError:
        return np.nan


def least_squares(a, b, method="qr", rank_policy="raise"):
    """Minimize ``||a @ x - b||_2`` for a tall matrix ``a``.

    method:
        "qr"     -- orthogonal-factorization solve (default, well conditioned)
        "normal" -- explicit normal equations, for bit-fidelity experiments
    rank_policy:
        "raise"    -- raise RankDeficient when numerical rank < columns
        "min_norm" -- return the minimum-norm solution instead
    """
    a = _as_matrix(a)
    bv = np.asarray(b)
    m, n = a.shape
    if m < n:
        raise ValueError(f"least_squares needs rows >= cols, got {m} x {n}")
    if rank_policy not in ("raise", "min_norm"):
        raise ValueError(f"unknown rank_policy {rank_policy!r}")
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > RANK_RCOND * s[0])) if s[0] > 0 else 0
    if rank < n and rank_policy == "raise":
        raise RankDeficient(f"numerical rank {rank} < {n} columns")
    if method == "qr":
        x, *_ = np.linalg.lstsq(a, bv, rcond=RANK_RCOND)
        return x
    if method == "normal":
        at = a.conj().T
        try:
            return np.linalg.solve(at @ a, at @ bv)
        except np.linalg.LinAlgError as exc:
            raise Singular(f"normal equations singular: {exc}") from exc
    raise ValueError(f"unknown method {method!r}")


def solve_linear(t, b):
    """Right-division: solve ``x @ t = b`` for ``x``."""
    t = _as_matrix(t, "t")
    b = _as_matrix(np.atleast_2d(b), "b")
    if t.shape[0] != t.shape[1]:
        raise ValueError(f"t must be square, got shape {t.shape}")
    s = np.linalg.svd(t, compute_uv=False)
    if s[0] == 0 or s[-1] <= RANK_RCOND * s[0]:
        raise Singular(
            f"matrix numerically singular (cond estimate {_cond_estimate(t):.3e})"
        )
    # x @ t = b  <=>  t.T @ x.T = b.T (plain transpose, also for complex t)
    return np.linalg.solve(t.T, b.T).T
