"""Prony-type dynamic mode decomposition from one uniformly sampled
trajectory.

Pipeline: block-Hankel assembly, least-squares fit of the characteristic
polynomial coefficients, companion-matrix eigenvalues (discrete spectrum),
Vandermonde solve for the modes, and the principal-branch map to
continuous-time eigenvalues ``lambda = ln(rho) / h``.

The model order is half the sample count: 2N samples give N modes.
Frequencies with ``|Im(lambda)| >= pi/h`` alias and can never be returned;
``Im(lambda_hat)`` always lies in ``(-pi/h, pi/h]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    NumericsError,
    Singular,
    eig_general,
    least_squares,
    solve_linear,
)

#: Discrete eigenvalues closer than this make the Vandermonde matrix
#: numerically singular; the solve fails explicitly instead of regularizing.
COINCIDENT_RHO_TOL = 1e-10


class DmdError(Exception):
    pass


class OddLength(DmdError):
    """The trajectory must contain an even number of samples (2N)."""


@dataclass(frozen=True)
class DmdSpectrum:
    """Result of one decomposition.

    ``rho[j]`` is the j-th discrete eigenvalue, ``lambda_hat[j]`` its
    continuous-time image, and ``modes[:, j]`` the matching mode vector.
    ``residual`` is the max-norm reconstruction error over the fitted
    window and ``hankel_cond`` a condition estimate of the fitted system.
    """

    h: float
    rho: np.ndarray
    lambda_hat: np.ndarray
    modes: np.ndarray
    residual: float
    hankel_cond: float

    @property
    def order(self) -> int:
        return self.rho.shape[0]


def _samples_2d(samples) -> np.ndarray:
    y = np.asarray(samples, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise ValueError(f"samples must be 1-D or 2-D, got shape {y.shape}")
    return y


def build_hankel(samples):
    """Block-Hankel system for 2N samples of d-dimensional data.

    Returns ``(H, b)`` with ``H`` of shape (N*d, N) whose block column j
    stacks ``y[j], ..., y[j+N-1]``, and ``b = -(y[N], ..., y[2N-1])``
    stacked into a vector of length N*d.
    """
    y = _samples_2d(samples)
    m, d = y.shape
    if m < 2 or m % 2 != 0:
        raise OddLength(f"need an even sample count >= 2, got {m}")
    n = m // 2
    h = np.empty((n * d, n))
    for i in range(n):
        for j in range(n):
            h[i * d : (i + 1) * d, j] = y[i + j]
    b = -y[n:].reshape(n * d)
    return h, b


def fit_characteristic(h, b, method="qr", rank_policy="min_norm"):
    """Least-squares coefficients ``p`` of the monic characteristic
    polynomial ``z^N + p[N-1] z^{N-1} + ... + p[0]``.

    Long windows of smooth data make the Hankel matrix numerically
    rank-deficient even when the fit itself is excellent, so the default
    policy takes the minimum-norm solution; pass ``rank_policy="raise"``
    to surface rank loss instead. ``method="normal"`` solves the explicit
    normal equations.
    """
    return least_squares(h, b, method=method, rank_policy=rank_policy)


def companion_eigenvalues(p):
    """Eigenvalues of the companion matrix of ``z^N + p[N-1] z^{N-1} +
    ... + p[0]``, sorted by descending magnitude then ascending argument."""
    p = np.atleast_1d(np.asarray(p))
    n = p.shape[0]
    if n < 1:
        raise ValueError("p must have length >= 1")
    c = np.zeros((n, n), dtype=p.dtype)
    if n > 1:
        c[np.arange(1, n), np.arange(n - 1)] = 1.0
    c[:, n - 1] = -p
    w, _ = eig_general(c)
    order = np.lexsort((np.angle(w), -np.abs(w)))
    return w[order]


def vandermonde_modes(samples, rho):
    """Mode vectors from the first N samples: solve
    ``[V_1, ..., V_N] T = [y_0, ..., y_{N-1}]`` with ``T[j, t] = rho_j^t``.

    Raises Singular when two discrete eigenvalues (numerically) coincide.
    """
    y = _samples_2d(samples)
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if y.shape[0] < n:
        raise ValueError(f"need at least {n} samples, got {y.shape[0]}")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(rho[i] - rho[j]) < COINCIDENT_RHO_TOL:
                raise Singular(
                    f"discrete eigenvalues {rho[i]} and {rho[j]} coincide; "
                    "Vandermonde matrix is singular"
                )
    t = rho[:, None] ** np.arange(n)[None, :]
    y0 = y[:n].T.astype(complex)  # (d, N)
    return solve_linear(t, y0)


def prony_dmd(trajectory, method="qr", rank_policy="min_norm") -> DmdSpectrum:
    """Full decomposition of a uniformly sampled trajectory.

    Accepts a :class:`~koopmanpf.dynsys.Trajectory` or any object with
    ``h`` and ``samples`` attributes. Any step failure is re-raised with
    the step name prepended.
    """
    y = _samples_2d(trajectory.samples)
    h_period = float(trajectory.h)

    def step(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (NumericsError, DmdError) as exc:
            raise type(exc)(f"{name}: {exc}") from exc

    hankel, b = step("build_hankel", build_hankel, y)
    p = step(
        "fit_characteristic",
        fit_characteristic,
        hankel,
        b,
        method=method,
        rank_policy=rank_policy,
    )
    rho = step("companion_eigenvalues", companion_eigenvalues, p)
    modes = step("vandermonde_modes", vandermonde_modes, y, rho)

    with np.errstate(divide="ignore", invalid="ignore"):
        lambda_hat = np.log(rho) / h_period

    n = rho.shape[0]
    recon = (modes[:, :, None] * rho[None, :, None] ** np.arange(2 * n)).sum(axis=1)
    residual = float(np.max(np.abs(y.T - recon)))
    s = np.linalg.svd(hankel, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    return DmdSpectrum(
        h=h_period,
        rho=rho,
        lambda_hat=lambda_hat,
        modes=modes,
        residual=residual,
        hankel_cond=cond,
    )
