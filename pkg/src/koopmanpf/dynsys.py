"""Vector fields, fixed-step RK4 integration, the prolonged (variational)
system, and the two built-in example systems with closed-form Koopman data.

The built-in systems are:

* ``ep_system`` -- a planar field with a globally stable equilibrium at the
  origin (``dx1 = -x1 + x2^2``, ``dx2 = -sqrt(2) x2``), whose principal and
  one higher-order Koopman eigenfunction are polynomial.
* ``lc_system`` -- the planar oscillator ``dx = x - y - x(x^2+y^2)``,
  ``dy = x + y - y(x^2+y^2)`` with the unit circle as a stable limit
  cycle; eigenfunctions are expressed in polar coordinates and evaluated
  in Cartesian form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np

from . import _accel

SQRT2 = math.sqrt(2.0)

#: Limit-cycle eigenfunctions are undefined at the origin; reject inside this.
LC_EXCLUDED_RADIUS = 1e-8

#: Radius below which the limit-cycle mode expansion is not guaranteed to
#: converge; evaluation only warns there.
LC_CONVERGENCE_RADIUS = 1.0 / SQRT2


class DynamicsError(Exception):
    pass


class NonFinite(DynamicsError):
    """A state evaluation or trajectory diverged to non-finite values."""


class SingularPoint(DynamicsError):
    """Eigenfunction evaluation requested at an excluded point."""


class UnknownIndex(DynamicsError):
    """The bundle carries no Koopman triple with the requested index."""


@dataclass
class VectorField:
    """An autonomous system ``dx/dt = rhs(x)`` of dimension ``n``.

    ``jacobian`` may be None, in which case :func:`jacobian_fd` is used.
    ``fast_prolonged`` is an optional compiled integrator for the prolonged
    system, used by the estimation pipeline when present.
    """

    n: int
    rhs: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""
    fast_prolonged: Optional[Callable] = None

    def jac(self, x, eps: float = 1e-6) -> np.ndarray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(np.asarray(x, dtype=float)))
        return jacobian_fd(self, x, eps)


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution: ``samples[t]`` is the state at time t*h."""

    h: float
    samples: np.ndarray

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


def rk4_integrate(
    field: VectorField, x0, h: float, steps: int, substeps: int = 1
) -> Trajectory:
    """Classical fourth-order Runge-Kutta with ``substeps`` internal steps
    per sampling period ``h``. Returns ``steps + 1`` samples including the
    initial state."""
    if h <= 0:
        raise ValueError("h must be positive")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    x = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise NonFinite("initial state is not finite")
    out = np.empty((steps + 1, field.n))
    out[0] = x
    dt = h / substeps
    f = field.rhs
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, steps + 1):
            for _ in range(substeps):
                k1 = f(x)
                k2 = f(x + 0.5 * dt * k1)
                k3 = f(x + 0.5 * dt * k2)
                k4 = f(x + dt * k3)
                x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NonFinite(f"trajectory diverged at sample {t}")
            out[t] = x
    return Trajectory(h=h, samples=out)


def jacobian_fd(field: VectorField, x, eps: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``field.rhs`` at ``x``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    jac = np.empty((field.n, field.n))
    for k in range(field.n):
        step = np.zeros_like(x)
        step[k] = eps
        jac[:, k] = (field.rhs(x + step) - field.rhs(x - step)) / (2.0 * eps)
    if not np.all(np.isfinite(jac)):
        raise NonFinite("finite-difference Jacobian is not finite")
    return jac


def prolong(field: VectorField) -> VectorField:
    """The 2n-dimensional prolonged system coupling the flow with its
    variational equation: ``(dx, dxi) = (F(x), DF(x) xi)``."""
    n = field.n

    def rhs(y):
        x, xi = y[:n], y[n:]
        return np.concatenate([field.rhs(x), field.jac(x) @ xi])

    return VectorField(n=2 * n, rhs=rhs, name=f"prolonged({field.name})")


@dataclass(frozen=True)
class KoopmanTriple:
    """One Koopman eigenvalue with its eigenfunction, gradient, and mode."""

    index: tuple
    eigenvalue: complex
    phi: Callable[[np.ndarray], complex]
    grad: Callable[[np.ndarray], np.ndarray]
    mode: np.ndarray


@dataclass(frozen=True)
class SystemBundle:
    """A vector field together with its closed-form Koopman data."""

    field: VectorField
    triples: tuple
    attractor_kind: str
    basin_note: str = ""

    def triple(self, index) -> KoopmanTriple:
        index = tuple(index)
        for t in self.triples:
            if t.index == index:
                return t
        raise UnknownIndex(f"no Koopman triple with index {index}")

    @property
    def n(self) -> int:
        return self.field.n


def _fast_ep_prolonged(x0, xi0, h, num_samples, substeps):
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(xi0, float)])
    return _accel.rk4_ep_prolonged(y0, h, num_samples, substeps)


def _fast_lc_prolonged(x0, xi0, h, num_samples, substeps):
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(xi0, float)])
    return _accel.rk4_lc_prolonged(y0, h, num_samples, substeps)


def ep_system() -> SystemBundle:
    """Built-in equilibrium-point system with closed-form Koopman data."""
    c = (1.0 + 2.0 * SQRT2) / 7.0

    def rhs(x):
        return np.array([-x[0] + x[1] ** 2, -SQRT2 * x[1]])

    def jac(x):
        return np.array([[-1.0, 2.0 * x[1]], [0.0, -SQRT2]])

    field = VectorField(
        n=2, rhs=rhs, jacobian=jac, name="ep_quadratic",
        fast_prolonged=_fast_ep_prolonged,
    )
    triples = (
        KoopmanTriple(
            index=(1, 0),
            eigenvalue=-1.0 + 0.0j,
            phi=lambda x: complex(x[0] + c * x[1] ** 2),
            grad=lambda x: np.array([1.0, 2.0 * c * x[1]], dtype=complex),
            mode=np.array([1.0, 0.0], dtype=complex),
        ),
        KoopmanTriple(
            index=(0, 1),
            eigenvalue=complex(-SQRT2),
            phi=lambda x: complex(x[1]),
            grad=lambda x: np.array([0.0, 1.0], dtype=complex),
            mode=np.array([0.0, 1.0], dtype=complex),
        ),
        KoopmanTriple(
            index=(0, 2),
            eigenvalue=complex(-2.0 * SQRT2),
            phi=lambda x: complex(x[1] ** 2),
            grad=lambda x: np.array([0.0, 2.0 * x[1]], dtype=complex),
            mode=np.array([-c, 0.0], dtype=complex),
        ),
    )
    return SystemBundle(
        field=field,
        triples=triples,
        attractor_kind="equilibrium",
        basin_note="globally attracting equilibrium at the origin",
    )


def _lc_guard(x):
    r2 = x[0] ** 2 + x[1] ** 2
    if r2 < LC_EXCLUDED_RADIUS**2:
        raise SingularPoint("eigenfunction undefined at the origin")
    if r2 < LC_CONVERGENCE_RADIUS**2:
        warnings.warn(
            "point inside r = 1/sqrt(2): the mode expansion of the "
            "limit-cycle system is not guaranteed to converge here",
            RuntimeWarning,
            stacklevel=3,
        )
    return r2


def lc_system() -> SystemBundle:
    """Built-in limit-cycle system (unit-circle attractor) with closed-form
    Koopman data in Cartesian coordinates."""

    def rhs(x):
        r2 = x[0] ** 2 + x[1] ** 2
        return np.array([x[0] - x[1] - x[0] * r2, x[0] + x[1] - x[1] * r2])

    def jac(x):
        x1, x2 = x
        return np.array(
            [
                [1.0 - 3.0 * x1**2 - x2**2, -1.0 - 2.0 * x1 * x2],
                [1.0 - 2.0 * x1 * x2, 1.0 - x1**2 - 3.0 * x2**2],
            ]
        )

    def phi1(x):
        r2 = _lc_guard(x)
        return complex(x[0], x[1]) / math.sqrt(r2)

    def grad1(x):
        r2 = _lc_guard(x)
        e = complex(x[0], x[1]) / math.sqrt(r2)
        return np.array([-1j * e * x[1] / r2, 1j * e * x[0] / r2])

    def phi2(x):
        r2 = _lc_guard(x)
        return complex(1.0 - 1.0 / r2)

    def grad2(x):
        r2 = _lc_guard(x)
        return np.array([2.0 * x[0] / r2**2, 2.0 * x[1] / r2**2], dtype=complex)

    def phi11(x):
        return phi1(x) * phi2(x)

    def grad11(x):
        return phi2(x) * grad1(x) + phi1(x) * grad2(x)

    field = VectorField(
        n=2, rhs=rhs, jacobian=jac, name="lc_circular",
        fast_prolonged=_fast_lc_prolonged,
    )
    triples = (
        KoopmanTriple(
            index=(1, 0), eigenvalue=1j, phi=phi1, grad=grad1,
            mode=np.array([0.5, -0.5j]),
        ),
        KoopmanTriple(
            index=(0, 1), eigenvalue=-2.0 + 0.0j, phi=phi2, grad=grad2,
            mode=np.array([0.0j, 0.0j]),
        ),
        KoopmanTriple(
            index=(1, 1), eigenvalue=-2.0 + 1.0j, phi=phi11, grad=grad11,
            mode=np.array([0.25, -0.25j]),
        ),
    )
    return SystemBundle(
        field=field,
        triples=triples,
        attractor_kind="limit_cycle",
        basin_note=(
            "unit circle attracting; eigenfunctions undefined at the origin "
            f"(rejected inside r = {LC_EXCLUDED_RADIUS:g}); mode expansion "
            "guaranteed convergent only for r > 1/sqrt(2)"
        ),
    )


def linear_bundle(a) -> SystemBundle:
    """Wrap ``dx/dt = A x`` as a bundle with ``phi_j = u_j^T x`` and
    ``V_j = v_j``, reducing the nonlinear definitions to the classical ones."""
    from .lti import biorthogonal_eig

    a = np.asarray(a, dtype=float)
    basis = biorthogonal_eig(a)
    field = VectorField(
        n=a.shape[0],
        rhs=lambda x: a @ x,
        jacobian=lambda x: a,
        name="linear",
    )
    triples = []
    for j in range(basis.n):
        u = basis.left[:, j].copy()
        v = basis.right[:, j].copy()
        index = tuple(1 if i == j else 0 for i in range(basis.n))
        triples.append(
            KoopmanTriple(
                index=index,
                eigenvalue=complex(basis.eigenvalues[j]),
                phi=lambda x, u=u: complex(u @ np.asarray(x, dtype=float)),
                grad=lambda x, u=u: u.astype(complex),
                mode=v.astype(complex),
            )
        )
    return SystemBundle(
        field=field,
        triples=tuple(triples),
        attractor_kind="equilibrium",
        basin_note="linear field; valid on the whole state space",
    )


def evaluate_eigenfunction(bundle: SystemBundle, index, x) -> complex:
    """Evaluate the eigenfunction with the given multi-index at ``x``."""
    return bundle.triple(index).phi(np.asarray(x, dtype=float))


PF_KINDS = ("pf", "gp_mode_in_state", "gp_state_in_mode")


def analytic_pf(bundle: SystemBundle, kind: str, mode_index, state_k: int, x,
                aux_index=None) -> complex:
    """Closed-form participation quantity at state ``x`` (0-based indices).

    kind:
        "pf"               -- d(phi_mode)/dx_k * V_{mode,k}
        "gp_mode_in_state" -- d(phi_mode)/dx_aux * V_{mode,k}
                              (aux_index is the perturbed state index)
        "gp_state_in_mode" -- d(phi_mode)/dx_k * V_{aux,k}
                              (aux_index is the mode supplying the Koopman
                              mode vector; may be a multi-index)
    """
    if kind not in PF_KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    x = np.asarray(x, dtype=float)
    t = bundle.triple(mode_index)
    if kind == "pf":
        return complex(t.grad(x)[state_k] * t.mode[state_k])
    if kind == "gp_mode_in_state":
        if not isinstance(aux_index, (int, np.integer)):
            raise ValueError("gp_mode_in_state needs an integer aux_index")
        return complex(t.grad(x)[aux_index] * t.mode[state_k])
    other = bundle.triple(aux_index)
    return complex(t.grad(x)[state_k] * other.mode[state_k])
