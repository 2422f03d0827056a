"""Fixed-step RK4 kernels for the built-in prolonged systems.

The kernels are compiled with numba when it is importable; setting the
environment variable ``KOOPMANPF_NO_NUMBA=1`` forces the pure-numpy path
(same function bodies, uncompiled).  ``benchmarks/bench_rk4.py`` compares
the two paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAS_NUMBA = False

USE_NUMBA = _HAS_NUMBA and os.environ.get("KOOPMANPF_NO_NUMBA", "") not in (
    "1",
    "true",
    "yes",
)

_SQRT2 = math.sqrt(2.0)


def _ep_prolonged_rhs(y, out):
    # state (x1, x2) followed by the variation (xi1, xi2)
    out[0] = -y[0] + y[1] * y[1]
    out[1] = -_SQRT2 * y[1]
    out[2] = -y[2] + 2.0 * y[1] * y[3]
    out[3] = -_SQRT2 * y[3]


def _lc_prolonged_rhs(y, out):
    x1 = y[0]
    x2 = y[1]
    r2 = x1 * x1 + x2 * x2
    out[0] = x1 - x2 - x1 * r2
    out[1] = x1 + x2 - x2 * r2
    # Jacobian of the flow applied to the variation
    j11 = 1.0 - 3.0 * x1 * x1 - x2 * x2
    j12 = -1.0 - 2.0 * x1 * x2
    j21 = 1.0 - 2.0 * x1 * x2
    j22 = 1.0 - x1 * x1 - 3.0 * x2 * x2
    out[2] = j11 * y[2] + j12 * y[3]
    out[3] = j21 * y[2] + j22 * y[3]


def _rk4_ep_prolonged(y0, h, num_samples, substeps):
    dim = 4
    out = np.empty((num_samples, dim))
    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    out[0] = y
    dt = h / substeps
    for t in range(1, num_samples):
        for _ in range(substeps):
            _ep_prolonged_rhs(y, k1)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k1[i]
            _ep_prolonged_rhs(tmp, k2)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k2[i]
            _ep_prolonged_rhs(tmp, k3)
            for i in range(dim):
                tmp[i] = y[i] + dt * k3[i]
            _ep_prolonged_rhs(tmp, k4)
            for i in range(dim):
                y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        out[t] = y
    return out


def _rk4_lc_prolonged(y0, h, num_samples, substeps):
    dim = 4
    out = np.empty((num_samples, dim))
    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    out[0] = y
    dt = h / substeps
    for t in range(1, num_samples):
        for _ in range(substeps):
            _lc_prolonged_rhs(y, k1)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k1[i]
            _lc_prolonged_rhs(tmp, k2)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k2[i]
            _lc_prolonged_rhs(tmp, k3)
            for i in range(dim):
                tmp[i] = y[i] + dt * k3[i]
            _lc_prolonged_rhs(tmp, k4)
            for i in range(dim):
                y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        out[t] = y
    return out


if USE_NUMBA:
    _ep_prolonged_rhs = numba.njit(cache=True)(_ep_prolonged_rhs)
    _lc_prolonged_rhs = numba.njit(cache=True)(_lc_prolonged_rhs)
    rk4_ep_prolonged = numba.njit(cache=True)(_rk4_ep_prolonged)
    rk4_lc_prolonged = numba.njit(cache=True)(_rk4_lc_prolonged)
else:
    rk4_ep_prolonged = _rk4_ep_prolonged
    rk4_lc_prolonged = _rk4_lc_prolonged
