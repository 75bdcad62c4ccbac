"""Hot stencil kernels with a numba fast path and a pure-numpy fallback.

The explicit update and the max-gradient reduction dominate solver
runtime, so both carry @njit implementations for 1D and 2D grids (the
desk-scale cases).  Higher dimensions and the fallback path use
vectorized numpy.

Backend selection: the ANISOLAB_BACKEND environment variable may be set
to "numba", "numpy", or "auto" (default).  "auto" picks numba when it
imports cleanly.  Tests and the benchmark script can also switch at
runtime via set_backend().
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "ANISOLAB_BACKEND"

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def _resolve_backend(requested: str) -> str:
    requested = requested.lower()
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not _HAS_NUMBA:
            raise RuntimeError("ANISOLAB_BACKEND=numba but numba is not importable")
        return "numba"
    if requested == "auto":
        return "numba" if _HAS_NUMBA else "numpy"
    raise ValueError(f"unknown backend {requested!r} (use auto, numba, or numpy)")


_BACKEND = _resolve_backend(os.environ.get(_ENV_FLAG, "auto"))


def get_backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return _BACKEND


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime ("auto", "numba", or "numpy")."""
    global _BACKEND
    _BACKEND = _resolve_backend(name)


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAS_NUMBA else ("numpy",)


# ----------------------------------------------------------------------
# numpy fallback path (any dimension)


def _step_numpy(padded: np.ndarray, u: np.ndarray, dt: float, spacing, qexp) -> np.ndarray:
    out = u.astype(np.float64, copy=True)
    ndim = u.ndim
    for ax in range(ndim):
        keep = tuple(slice(1, -1) if a != ax else slice(None) for a in range(ndim))
        d = np.diff(padded[keep], axis=ax) / spacing[ax]
        f = np.abs(d) ** qexp[ax] * d
        hi = tuple(slice(1, None) if a == ax else slice(None) for a in range(ndim))
        lo = tuple(slice(None, -1) if a == ax else slice(None) for a in range(ndim))
        out += (dt / spacing[ax]) * (f[hi] - f[lo])
    return out


def _maxgrad_numpy(padded: np.ndarray, spacing) -> np.ndarray:
    ndim = padded.ndim
    out = np.empty(ndim)
    for ax in range(ndim):
        keep = tuple(slice(1, -1) if a != ax else slice(None) for a in range(ndim))
        d = np.diff(padded[keep], axis=ax) / spacing[ax]
        out[ax] = np.max(np.abs(d))
    return out


# ----------------------------------------------------------------------
# numba fast path (1D and 2D specializations)


@njit(cache=True)
def _step_1d(padded, out, dt, h0, q0):
    n = out.shape[0]
    inv = 1.0 / h0
    for j in range(n):
        c = padded[j + 1]
        dp = (padded[j + 2] - c) * inv
        dm = (c - padded[j]) * inv
        fp = abs(dp) ** q0 * dp
        fm = abs(dm) ** q0 * dm
        out[j] = c + dt * (fp - fm) * inv


@njit(cache=True)
def _step_2d(padded, out, dt, h0, h1, q0, q1):
    n0, n1 = out.shape
    i0 = 1.0 / h0
    i1 = 1.0 / h1
    for j in range(n0):
        for k in range(n1):
            c = padded[j + 1, k + 1]
            d0p = (padded[j + 2, k + 1] - c) * i0
            d0m = (c - padded[j, k + 1]) * i0
            d1p = (padded[j + 1, k + 2] - c) * i1
            d1m = (c - padded[j + 1, k]) * i1
            acc = (abs(d0p) ** q0 * d0p - abs(d0m) ** q0 * d0m) * i0
            acc += (abs(d1p) ** q1 * d1p - abs(d1m) ** q1 * d1m) * i1
            out[j, k] = c + dt * acc


@njit(cache=True)
def _maxgrad_1d(padded, h0):
    n = padded.shape[0] - 1
    inv = 1.0 / h0
    g = 0.0
    for j in range(n):
        d = abs(padded[j + 1] - padded[j]) * inv
        if d > g:
            g = d
    return g


@njit(cache=True)
def _maxgrad_2d(padded, h0, h1):
    n0 = padded.shape[0] - 2
    n1 = padded.shape[1] - 2
    i0 = 1.0 / h0
    i1 = 1.0 / h1
    g0 = 0.0
    for j in range(n0 + 1):
        for k in range(n1):
            d = abs(padded[j + 1, k + 1] - padded[j, k + 1]) * i0
            if d > g0:
                g0 = d
    g1 = 0.0
    for j in range(n0):
        for k in range(n1 + 1):
            d = abs(padded[j + 1, k + 1] - padded[j + 1, k]) * i1
            if d > g1:
                g1 = d
    return g0, g1


# ----------------------------------------------------------------------
# dispatch


def step_update(padded: np.ndarray, u: np.ndarray, dt: float, spacing, qexp) -> np.ndarray:
    """One explicit conservative update of the interior field.

    `padded` is the field with one ghost layer per side, already closed
    per the boundary condition; qexp[i] = p_i - 2.
    """
    if _BACKEND == "numba":
        if u.ndim == 1:
            out = np.empty_like(u)
            _step_1d(padded, out, dt, float(spacing[0]), float(qexp[0]))
            return out
        if u.ndim == 2:
            out = np.empty_like(u)
            _step_2d(
                padded, out, dt,
                float(spacing[0]), float(spacing[1]),
                float(qexp[0]), float(qexp[1]),
            )
            return out
    return _step_numpy(padded, u, dt, spacing, qexp)


def max_face_gradients(padded: np.ndarray, spacing) -> np.ndarray:
    """Per-axis max |one-sided difference| over all faces, ghosts included."""
    if _BACKEND == "numba":
        if padded.ndim == 1:
            return np.array([_maxgrad_1d(padded, float(spacing[0]))])
        if padded.ndim == 2:
            g0, g1 = _maxgrad_2d(padded, float(spacing[0]), float(spacing[1]))
            return np.array([g0, g1])
    return _maxgrad_numpy(padded, spacing)
