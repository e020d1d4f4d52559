"""Hot loops for trajectory rollout and quadrature.

Each kernel exists twice: a numba ``@njit`` version and a plain numpy
version.  The numba path is used when numba imports cleanly and the
environment variable ``LQDISSIP_NO_NUMBA`` is unset (or ``0``).  Both paths
must produce identical results up to floating point reassociation.
"""
import os

import numpy as np

_DISABLED = os.environ.get("LQDISSIP_NO_NUMBA", "0") not in ("", "0", "false", "False")

try:
    if _DISABLED:
        raise ImportError("numba disabled by LQDISSIP_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(func):
            return func

        return deco


# --- numpy reference implementations -------------------------------------


def rollout_numpy(phi, gam, x0, v):
    """x[k+1] = phi @ x[k] + gam @ v[k] for k = 0..len(v)-2."""
    nsteps = v.shape[0]
    xs = np.empty((nsteps, x0.shape[0]))
    xs[0] = x0
    for k in range(nsteps - 1):
        xs[k + 1] = phi @ xs[k] + gam @ v[k]
    return xs


def quadform_trapz_numpy(z, M, dt):
    vals = np.einsum("ki,ij,kj->k", z, M, z)
    if vals.shape[0] < 2:
        return 0.0
    return float(dt * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def sample_shift_numpy(x0_grid, x0_vals, u_times, u_vals, xi, t):
    # x(xi, t) = x0(xi - t) for xi >= t, else u(t - xi); linear interpolation
    out = np.empty(xi.shape[0])
    for i in range(xi.shape[0]):
        s = xi[i] - t
        if s >= 0.0:
            out[i] = np.interp(s, x0_grid, x0_vals)
        else:
            out[i] = np.interp(-s, u_times, u_vals)
    return out


# --- numba kernels ---------------------------------------------------------


@njit(cache=True)
def _rollout_jit(phi, gam, x0, v):
    nsteps = v.shape[0]
    xs = np.empty((nsteps, x0.shape[0]))
    xs[0] = x0
    for k in range(nsteps - 1):
        # np.dot dispatches to BLAS gemv inside numba
        xs[k + 1] = np.dot(phi, xs[k]) + np.dot(gam, v[k])
    return xs


@njit(cache=True)
def _quadform_trapz_jit(z, M, dt):
    nk = z.shape[0]
    d = z.shape[1]
    if nk < 2:
        return 0.0
    total = 0.0
    for k in range(nk):
        q = 0.0
        for i in range(d):
            zi = z[k, i]
            if zi == 0.0:
                continue
            row = 0.0
            for j in range(d):
                row += M[i, j] * z[k, j]
            q += zi * row
        if k == 0 or k == nk - 1:
            total += 0.5 * q
        else:
            total += q
    return dt * total


@njit(cache=True)
def _sample_shift_jit(x0_grid, x0_vals, u_times, u_vals, xi, t):
    out = np.empty(xi.shape[0])
    for i in range(xi.shape[0]):
        s = xi[i] - t
        if s >= 0.0:
            out[i] = np.interp(s, x0_grid, x0_vals)
        else:
            out[i] = np.interp(-s, u_times, u_vals)
    return out


def use_numba():
    return HAVE_NUMBA


def rollout(phi, gam, x0, v):
    phi = np.ascontiguousarray(phi, dtype=float)
    gam = np.ascontiguousarray(gam, dtype=float)
    x0 = np.ascontiguousarray(x0, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    if HAVE_NUMBA:
        return _rollout_jit(phi, gam, x0, v)
    return rollout_numpy(phi, gam, x0, v)


def quadform_trapz(z, M, dt):
    """Trapezoid approximation of the integral of z(t)^T M z(t)."""
    z = np.ascontiguousarray(z, dtype=float)
    M = np.ascontiguousarray(M, dtype=float)
    if HAVE_NUMBA:
        return float(_quadform_trapz_jit(z, M, float(dt)))
    return quadform_trapz_numpy(z, M, dt)


def sample_shift(x0_grid, x0_vals, u_times, u_vals, xi, t):
    args = [np.ascontiguousarray(a, dtype=float) for a in (x0_grid, x0_vals, u_times, u_vals, xi)]
    if HAVE_NUMBA:
        return _sample_shift_jit(*args, float(t))
    return sample_shift_numpy(*args, t)
