"""Classical participation factors for linear systems ``dx/dt = A x``.

Builds biorthogonal modal bases (right/left eigenvector pairs with
``u_j^T v_k = delta_jk``), the mode-in-state participation-factor matrix,
both generalized-participation tensors, the analytic modal solution, and
the modal response to an initial perturbation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import NumericsError, eig_general

#: Eigenvalue pairs with a relative gap below this are treated as repeated.
REPEATED_EIG_RTOL = 1e-8

BIORTHOGONALITY_TOL = 1e-10


class RepeatedEigenvalues(NumericsError):
    """The matrix has (numerically) repeated eigenvalues; the modal basis
    is not defined."""


@dataclass(frozen=True)
class ModalBasis:
    """Eigentriples of a real matrix, biorthogonally normalized.

    ``right[:, j]`` and ``left[:, j]`` are the right/left eigenvectors of
    eigenvalue ``eigenvalues[j]`` with ``left[:, j].T @ right[:, j] == 1``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class ParticipationTensors:
    """All participation quantities of one modal basis.

    pf[j, k]                    mode j in state k
    gp_mode_in_state[j, k, l]   effect on state k through mode j of an
                                initial change in state l
    gp_state_in_mode[i, j, k]   effect of mode i on mode j via state k
    """

    pf: np.ndarray
    gp_mode_in_state: np.ndarray
    gp_state_in_mode: np.ndarray


def _check_distinct(w):
    n = w.shape[0]
    scale = max(1.0, float(np.max(np.abs(w))))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= REPEATED_EIG_RTOL * scale:
                raise RepeatedEigenvalues(
                    f"eigenvalues {w[i]} and {w[j]} are numerically repeated"
                )


def biorthogonal_eig(a) -> ModalBasis:
    """Modal basis of a real square matrix with distinct eigenvalues.

    Eigenvalues are sorted by descending real part, then ascending
    imaginary part. Left eigenvectors are obtained from the transposed
    matrix, paired by eigenvalue proximity, and rescaled so that
    ``u_j^T v_j = 1``.
    """
    a = np.asarray(a, dtype=float)
    w, v = eig_general(a)
    _check_distinct(w)
    order = np.lexsort((w.imag, -w.real))
    w = w[order]
    v = v[:, order]

    wl, ul = eig_general(a.T)
    left = np.empty_like(v)
    used = np.zeros(len(wl), dtype=bool)
    scale = max(1.0, float(np.max(np.abs(w))))
    for j in range(len(w)):
        dist = np.abs(wl - w[j])
        dist[used] = np.inf
        i = int(np.argmin(dist))
        if dist[i] > 1e-6 * scale:
            raise RepeatedEigenvalues(
                f"could not pair left eigenvector for eigenvalue {w[j]}"
            )
        used[i] = True
        left[:, j] = ul[:, i]

    # rescale so u_j^T v_j = 1 (plain transpose, not conjugate)
    for j in range(len(w)):
        denom = left[:, j] @ v[:, j]
        left[:, j] = left[:, j] / denom

    residual = np.max(np.abs(left.T @ v - np.eye(len(w))))
    if residual > BIORTHOGONALITY_TOL:
        raise NumericsError(
            f"biorthogonality residual {residual:.3e} exceeds tolerance"
        )
    return ModalBasis(eigenvalues=w, right=v, left=left)


def mode_in_state_pf(basis: ModalBasis) -> np.ndarray:
    """Participation-factor matrix ``P[j, k] = u_jk * v_jk``.

    Every column and every row sums to one.
    """
    return (basis.left * basis.right).T


def generalized_participations(basis: ModalBasis) -> ParticipationTensors:
    u, v = basis.left, basis.right
    n = basis.n
    gp_mis = v.T[:, :, None] * u.T[:, None, :]
    # the PF matrix is the perturbed==observed diagonal, extracted (not
    # recomputed) so the reduction is exact to the bit
    pf = np.einsum("jkk->jk", gp_mis).copy()
    gp_sim = v.T[:, None, :] * u.T[None, :, :]
    gp_sim[np.arange(n), np.arange(n), :] = pf
    return ParticipationTensors(pf=pf, gp_mode_in_state=gp_mis, gp_state_in_mode=gp_sim)


def modal_solution(basis: ModalBasis, x0, t: float) -> np.ndarray:
    """State at time ``t >= 0`` via the modal expansion
    ``sum_j exp(lambda_j t) (u_j^T x0) v_j`` (real part)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x0 = np.asarray(x0, dtype=float)
    coef = basis.left.T @ x0
    x = basis.right @ (np.exp(basis.eigenvalues * t) * coef)
    return x.real


def variational_response(basis: ModalBasis, delta_x, t: float):
    """Response to an initial perturbation ``delta_x``.

    Returns ``(dx, dz)``: the state variation assembled from the
    participation factors and generalized participations, and the complex
    modal variations ``dz_j = exp(lambda_j t) (sum_k P_j^k) (u_j^T dx0)``.
    For a linear system ``dx`` equals the modal solution started at
    ``delta_x`` (superposition).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    delta_x = np.asarray(delta_x, dtype=float)
    tensors = generalized_participations(basis)
    growth = np.exp(basis.eigenvalues * t)
    dx = np.einsum("j,jkl,l->k", growth, tensors.gp_mode_in_state, delta_x).real
    dz0 = basis.left.T @ delta_x
    dz = growth * tensors.pf.sum(axis=1) * dz0
    return dx, dz
