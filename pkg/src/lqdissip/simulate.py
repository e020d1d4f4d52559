"""Sampled trajectories, cost quadrature and the dissipation balance.

Time stepping is the exact zero-order-hold discretization of the closed
loop, so the only error left in integral identities is the trapezoid
quadrature error, O(dt^2) on smooth trajectories.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import DivergedError
from .matrix_core import as_matrix, matexp, spectral_abscissa


@dataclass(frozen=True)
class InputPolicy:
    """u(t) = gain @ x(t) + v(t), with v held constant on each step."""

    gain: np.ndarray = None
    v_times: np.ndarray = None
    v_values: np.ndarray = None
    name: str = "zero"

    def offsets(self, times, m):
        if self.v_times is None:
            return np.zeros((times.shape[0], m))
        idx = np.searchsorted(self.v_times, times + 1e-12 * max(1.0, times[-1]), side="right") - 1
        vals = np.zeros((times.shape[0], m))
        inside = idx >= 0
        vals[inside] = self.v_values[idx[inside]]
        return vals


def zero_policy():
    return InputPolicy()


def gain_policy(Fgain):
    return InputPolicy(gain=as_matrix(Fgain, "Fgain"), name="gain")


def table_policy(times, values, Fgain=None):
    """Open-loop table with zero-order hold (optionally on top of a gain)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if times.ndim != 1 or times.shape[0] != values.shape[0]:
        raise ValueError("table times and values must have matching lengths")
    if np.any(np.diff(times) <= 0):
        raise ValueError("table times must be strictly increasing")
    gain = None if Fgain is None else as_matrix(Fgain, "Fgain")
    return InputPolicy(gain=gain, v_times=times, v_values=values, name="table")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    w_outputs: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dt(self):
        return self.meta["dt"]

    @property
    def T(self):
        return float(self.times[-1])


@dataclass(frozen=True)
class BalanceReport:
    lhs: float
    rhs: float
    gap: float
    T: float
    lhs_ineq: bool

    @property
    def relative_gap(self):
        return self.gap / (1.0 + abs(self.lhs))


def _time_grid(T, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not T >= dt:
        raise ValueError("T must be at least dt")
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return dt * np.arange(nsteps + 1)


def zoh_matrices(A, B, dt):
    """(Phi, Gamma) with x+ = Phi x + Gamma v for v constant over dt."""
    n, m = B.shape
    Mx = np.zeros((n + m, n + m))
    Mx[:n, :n] = A
    Mx[:n, n:] = B
    E = matexp(Mx, dt)
    return E[:n, :n], E[:n, n:]


def simulate_lti(ext, x0, policy=None, T=1.0, dt=1e-3):
    """Sampled closed-loop trajectory of the extended system.

    Outputs are split into the original rows ``y`` and the dissipation
    output ``w``.  A non-finite state raises :class:`DivergedError`.
    """
    policy = zero_policy() if policy is None else policy
    sysb = ext.base
    n, m = sysb.n, sysb.m
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {n}")
    times = _time_grid(float(T), float(dt))
    Fg = np.zeros((m, n)) if policy.gain is None else policy.gain
    if Fg.shape != (m, n):
        raise ValueError(f"gain must be {(m, n)}, got {Fg.shape}")
    v = policy.offsets(times, m)
    phi, gam = zoh_matrices(sysb.A + sysb.B @ Fg, sysb.B, dt)
    with np.errstate(over="ignore", invalid="ignore"):
        xs = _accel.rollout(phi, gam, x0, v)
    bad = ~np.all(np.isfinite(xs), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise DivergedError(f"state became non-finite at step {k}", k)
    us = xs @ Fg.T + v
    outs = xs @ sysb.C.T + us @ sysb.D.T
    p_y = ext.p_y
    meta = {"dt": float(dt), "method": "zoh-exact", "policy": policy.name,
            "numba": _accel.use_numba()}
    return Trajectory(times=times, states=xs, inputs=us, outputs=outs[:, :p_y],
                      w_outputs=outs[:, p_y:], meta=meta)


def cost_quadrature(traj, sr):
    """Trapezoid approximation of the integral of s(y, u) over the trajectory."""
    if traj.times.shape[0] == 0:
        raise ValueError("empty trajectory")
    z = np.hstack([traj.outputs, traj.inputs])
    return _accel.quadform_trapz(z, sr.block(), traj.meta["dt"])


def w_energy(traj):
    r = traj.w_outputs.shape[1]
    return _accel.quadform_trapz(traj.w_outputs, np.eye(r), traj.meta["dt"])


def dissipation_balance(traj, sr, P, tol=1e-4):
    """Compare S(x(T)) - S(x(0)) + int s  with  int ||w||^2.

    ``lhs_ineq`` reports the dissipation inequality ``lhs >= -tol (1 + |lhs|)``.
    """
    P = np.asarray(P, dtype=float)
    x0, xT = traj.states[0], traj.states[-1]
    lhs = float(xT @ P @ xT - x0 @ P @ x0) + cost_quadrature(traj, sr)
    rhs = w_energy(traj)
    return BalanceReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs), T=traj.T,
                         lhs_ineq=bool(lhs >= -tol * (1.0 + abs(lhs))))


def _as_function(spec, grid):
    if callable(spec):
        return spec
    vals = np.asarray(spec, dtype=float)
    return lambda s: np.interp(s, grid, vals)


def transport_characteristics(x0, u_table=None, T=1.0, dt=1e-3, n=None):
    """Exact transport solution sampled on the cell centers.

    ``x(xi, t) = x0(xi - t)`` for ``xi >= t`` and ``u(t - xi)`` otherwise;
    the output is ``y(t) = x(1, t)``.  ``x0`` is a callable or samples on
    the cell centers; ``u_table`` is ``None`` (zero input), a callable, or a
    pair ``(times, values)`` interpolated linearly.
    """
    if callable(x0):
        if n is None:
            raise ValueError("n is required when x0 is a callable")
        x0_fn = x0
    else:
        x0_vals = np.asarray(x0, dtype=float)
        n = x0_vals.shape[0]
        x0_fn = _as_function(x0_vals, (np.arange(n) + 0.5) / n)
    xi = (np.arange(n) + 0.5) / n
    times = _time_grid(float(T), float(dt))
    if u_table is None:
        u_fn = lambda s: np.zeros_like(np.asarray(s, dtype=float))  # noqa: E731
    elif callable(u_table):
        u_fn = u_table
    else:
        ut, uv = (np.asarray(a, dtype=float) for a in u_table)
        u_fn = lambda s: np.interp(s, ut, uv)  # noqa: E731

    fine = np.linspace(0.0, 1.0, 8 * n + 1)
    x0_fine = np.asarray(x0_fn(fine), dtype=float)
    u_grid = np.linspace(0.0, max(float(T), 1e-12), 8 * times.shape[0] + 1)
    u_fine = np.asarray(u_fn(u_grid), dtype=float)
    states = np.empty((times.shape[0], n))
    for k, t in enumerate(times):
        states[k] = _accel.sample_shift(fine, x0_fine, u_grid, u_fine, xi, t)
    inputs = np.asarray(u_fn(times), dtype=float)[:, None]
    ends = np.array([1.0])
    y = np.array([_accel.sample_shift(fine, x0_fine, u_grid, u_fine, ends, t)[0] for t in times])
    meta = {"dt": float(dt), "method": "characteristics", "policy": "table"}
    return Trajectory(times=times, states=states, inputs=inputs, outputs=y[:, None],
                      w_outputs=np.zeros((times.shape[0], 0)), meta=meta)


def auto_horizon(A_cl, gram, x0, cap=50.0, decay=1e-4, dt=None):
    """Horizon T with ||x(T)||_G <= decay * ||x0||_G for x' = A_cl x.

    Starts at min(cap, 8/|alpha|) with alpha the spectral abscissa and
    doubles while the decay target is missed (non-normal transients can
    outlast the eigenvalue estimate).  Returns ``(T, ratio)`` where
    ``ratio = ||x(T)||_G / ||x0||_G``.
    """
    x0 = np.asarray(x0, dtype=float)
    nrm0 = float(np.sqrt(x0 @ gram @ x0))
    alpha = spectral_abscissa(A_cl)
    T = cap if alpha >= 0 else min(cap, 8.0 / abs(alpha))
    if nrm0 == 0:
        return _round_to(T, dt), 0.0
    while True:
        T = _round_to(T, dt)
        xT = matexp(A_cl, T) @ x0
        ratio = float(np.sqrt(xT @ gram @ xT)) / nrm0
        if ratio <= decay or T >= cap:
            return T, ratio
        T = min(cap, 2.0 * T)


def _round_to(T, dt):
    if dt is None:
        return float(T)
    return float(dt * max(1, int(np.ceil(T / dt - 1e-9))))


def trajectory_csv(traj):
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    p = traj.outputs.shape[1]
    r = traj.w_outputs.shape[1]
    header = (["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"u_{i}" for i in range(1, m + 1)]
              + [f"y_{i}" for i in range(1, p + 1)] + [f"w_{i}" for i in range(1, r + 1)])
    data = np.hstack([traj.times[:, None], traj.states, traj.inputs, traj.outputs, traj.w_outputs])
    lines = [",".join(header)]
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in data)
    return "\n".join(lines) + "\n"
