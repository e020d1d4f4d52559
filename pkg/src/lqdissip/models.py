"""Semi-discretized boundary control systems: transport, wave and heat on (0, 1).

Transport and wave use a box (cell-average) scheme.  The state holds cell
averages ``z_i`` over ``[(i-1)h, ih]``; node values are reconstructed from
the boundary data through ``z_i = (x_{i-1} + x_i) / 2`` and each average
moves with the flux difference across its cell.  For these hyperbolic
problems the scheme is exactly energy-neutral in the interior, so the
continuous storage functions remain storage functions of the discrete model
and the dissipation output is supported on the boundary, as in the PDE.

The heat model uses the standard second-difference operator on interior
nodes with the Dirichlet data as inputs.
"""
from dataclasses import dataclass, field

import numpy as np

from .dissipative import StateSpaceSystem, SupplyRate

MODELS = ("transport", "wave", "heat")


@dataclass(frozen=True)
class ModelBundle:
    sys: StateSpaceSystem
    sr: SupplyRate
    P: np.ndarray
    meta: dict = field(default_factory=dict)


def _check_n(n, minimum):
    if int(n) != n or n < minimum:
        raise ValueError(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def cell_centers(n):
    return (np.arange(n) + 0.5) / n


def _transport_nodes(n):
    """Node values x_0..x_n as Nz @ z + Nu * u with x_0 = u."""
    Nz = np.zeros((n + 1, n))
    Nu = np.zeros(n + 1)
    Nu[0] = 1.0
    for i in range(1, n + 1):
        Nz[i] = -Nz[i - 1]
        Nz[i, i - 1] += 2.0
        Nu[i] = -Nu[i - 1]
    return Nz, Nu


def build_transport(n):
    """Transport ``x_t = -x_xi`` with inflow ``u = x(0)`` and outflow ``y = x(1)``.

    Supply rate ``2|y|^2 - |u|^2`` and storage ``||x||^2``.
    """
    n = _check_n(n, 2)
    h = 1.0 / n
    Nz, Nu = _transport_nodes(n)
    A = -(Nz[1:] - Nz[:-1]) / h
    B = (-(Nu[1:] - Nu[:-1]) / h)[:, None]
    C = Nz[n:n + 1]
    D = np.array([[Nu[n]]])
    gram = h * np.eye(n)
    sys = StateSpaceSystem(A=A, B=B, C=C, D=D, gram=gram)
    sr = SupplyRate(Q=[[2.0]], S=[[0.0]], R=[[-1.0]])
    meta = {"model": "transport", "n": n, "h": h, "scheme": "box"}
    return ModelBundle(sys=sys, sr=sr, P=gram.copy(), meta=meta)


def transport_upwind_system(n):
    """First-order upwind transport; kept only as a counterexample.

    Its numerical diffusion damps high wavenumbers while the outflow output
    samples the last node, so ``W(gram)`` is indefinite and the indefinite
    cost is unbounded below for this model.
    """
    n = _check_n(n, 2)
    h = 1.0 / n
    A = (np.eye(n, k=-1) - np.eye(n)) / h
    B = np.zeros((n, 1))
    B[0, 0] = 1.0 / h
    C = np.zeros((1, n))
    C[0, -1] = 1.0
    sys = StateSpaceSystem(A=A, B=B, C=C, D=np.zeros((1, 1)), gram=h * np.eye(n))
    sr = SupplyRate(Q=[[2.0]], S=[[0.0]], R=[[-1.0]])
    return sys, sr


def _wave_box(n, left):
    """Riemann-invariant box scheme in the (r, l) = (x1 + x2, x1 - x2) variables.

    r travels left, l travels right.  Node values of both invariants are the
    solution of the cell-average relations plus one boundary condition at
    each end.
    """
    h = 1.0 / n
    N = 2 * n
    M = np.zeros((N + 2, N + 2))
    Hz = np.zeros((N + 2, N))
    Hu = np.zeros(N + 2)
    r = np.arange(n + 1)
    l = n + 1 + np.arange(n + 1)
    for i in range(1, n + 1):
        M[i - 1, r[i - 1]] = M[i - 1, r[i]] = 1.0
        Hz[i - 1, i - 1] = 2.0
        M[n + i - 1, l[i - 1]] = M[n + i - 1, l[i]] = 1.0
        Hz[n + i - 1, n + i - 1] = 2.0
    if left == "damper":  # x1(0) = x2(0)
        M[N, l[0]] = 1.0
    elif left == "reflect":  # x1(0) = 0
        M[N, r[0]] = M[N, l[0]] = 1.0
    else:
        raise ValueError(f"unknown left boundary {left!r}")
    M[N + 1, r[n]], M[N + 1, l[n]] = 1.0, -1.0  # x2(1) = u
    Hu[N + 1] = 2.0
    Vz = np.linalg.solve(M, Hz)
    Vu = np.linalg.solve(M, Hu)

    Arl = np.zeros((N, N))
    Brl = np.zeros(N)
    Arl[:n] = (Vz[r[1:]] - Vz[r[:-1]]) / h
    Brl[:n] = (Vu[r[1:]] - Vu[r[:-1]]) / h
    Arl[n:] = -(Vz[l[1:]] - Vz[l[:-1]]) / h
    Brl[n:] = -(Vu[l[1:]] - Vu[l[:-1]]) / h

    I = np.eye(n)
    T = 0.5 * np.block([[I, I], [I, -I]])  # (x1, x2) = T (r, l)
    Ti = 2.0 * T
    A = T @ Arl @ Ti
    B = (T @ Brl)[:, None]
    # y = x1(1) = (r_n + l_n) / 2
    C = (0.5 * (Vz[r[n]] + Vz[l[n]]) @ Ti)[None, :]
    D = np.array([[0.5 * (Vu[r[n]] + Vu[l[n]])]])
    return A, B, C, D


def _wave_staggered(n):
    """x1 on cell centers, x2 on faces 0..n-1 with x2(1) = u.

    The damper row couples the first face to the first center.  The face at
    xi = 0 carries half the Gram weight.  The resulting problem has no
    feedthrough and a rank-one dissipation output without input part, i.e.
    the associated LQ problem is singular.
    """
    h = 1.0 / n
    N = 2 * n
    A = np.zeros((N, N))
    B = np.zeros((N, 1))
    for i in range(n):
        A[i, n + i] -= 1.0 / h
        if i + 1 < n:
            A[i, n + i + 1] += 1.0 / h
        else:
            B[i, 0] += 1.0 / h
    for j in range(1, n):
        A[n + j, j] += 1.0 / h
        A[n + j, j - 1] -= 1.0 / h
    A[n, 0] += 2.0 / h
    A[n, n] -= 2.0 / h
    C = np.zeros((1, N))
    C[0, n - 1] = 1.0
    g = np.full(N, h)
    g[n] = 0.5 * h
    return A, B, C, np.zeros((1, 1)), np.diag(g)


def build_wave(n, scheme="box", left_boundary="damper"):
    """Wave equation in first-order form with a damper at 0 and control at 1.

    ``(x1, x2)_t = [[0, 1], [1, 0]] (x1, x2)_xi``, ``x1(0) = x2(0)``,
    ``u = x2(1)``, ``y = x1(1)``; impedance supply ``2 y u`` and storage
    ``-||x||^2``.  State ordering is ``(x1 cells, x2 cells)``.

    ``left_boundary="reflect"`` replaces the damper by ``x1(0) = 0``; that
    variant is lossless and only used to check energy conservation.
    """
    n = _check_n(n, 2)
    h = 1.0 / n
    if scheme == "box":
        A, B, C, D = _wave_box(n, left_boundary)
        gram = h * np.eye(2 * n)
    elif scheme == "staggered":
        if left_boundary != "damper":
            raise ValueError("the staggered scheme only supports the damper boundary")
        A, B, C, D, gram = _wave_staggered(n)
    else:
        raise ValueError(f"unknown wave scheme {scheme!r}")
    sys = StateSpaceSystem(A=A, B=B, C=C, D=D, gram=gram)
    sr = SupplyRate(Q=[[0.0]], S=[[1.0]], R=[[0.0]])
    meta = {"model": "wave", "n": n, "h": h, "scheme": scheme, "left_boundary": left_boundary}
    return ModelBundle(sys=sys, sr=sr, P=-gram, meta=meta)


def build_heat(n):
    """Heat equation with both Dirichlet values as inputs.

    ``n`` interior nodes, ``h = 1/(n+1)``; outputs are the one-sided outward
    normal derivatives at 0 and 1.  Supply ``2 <y, u>``, storage ``-||x||^2``.
    """
    n = _check_n(n, 3)
    h = 1.0 / (n + 1)
    A = (np.eye(n, k=1) - 2.0 * np.eye(n) + np.eye(n, k=-1)) / h**2
    B = np.zeros((n, 2))
    B[0, 0] = B[-1, 1] = 1.0 / h**2
    C = np.zeros((2, n))
    C[0, 0] = -1.0 / h
    C[1, -1] = -1.0 / h
    D = np.eye(2) / h
    gram = h * np.eye(n)
    sys = StateSpaceSystem(A=A, B=B, C=C, D=D, gram=gram)
    sr = SupplyRate(Q=np.zeros((2, 2)), S=np.eye(2), R=np.zeros((2, 2)))
    meta = {"model": "heat", "n": n, "h": h, "scheme": "fd"}
    return ModelBundle(sys=sys, sr=sr, P=-gram, meta=meta)


def heat_gradient(n):
    """Forward differences (x_{i+1} - x_i)/h, i = 0..n, as a map of (x, u)."""
    h = 1.0 / (n + 1)
    G = np.zeros((n + 1, n + 2))
    G[:, :n] = (np.eye(n + 1, n) - np.eye(n + 1, n, k=-1)) / h
    G[0, n] = -1.0 / h
    G[n, n + 1] = 1.0 / h
    return G


def build_model(name, n, **kwargs):
    builders = {"transport": build_transport, "wave": build_wave, "heat": build_heat}
    if name not in builders:
        raise ValueError(f"unknown model {name!r}")
    return builders[name](n, **kwargs)


def transport_exact_value(x0_samples, h):
    x0 = np.asarray(x0_samples, dtype=float)
    val_Jw = float(h * np.sum(x0**2))
    return 2.0 * val_Jw, val_Jw


def wave_exact_value(x01, x02, h):
    x01 = np.asarray(x01, dtype=float)
    x02 = np.asarray(x02, dtype=float)
    if x01.shape != x02.shape:
        raise ValueError("x01 and x02 must have equal lengths")
    val_J = float(-0.5 * h * np.sum((x01 - x02) ** 2))
    val_Jw = float(0.5 * h * np.sum((x01 + x02) ** 2))
    return val_J, val_Jw


def state_grid(bundle):
    """Spatial positions of the state components (per field for the wave)."""
    meta = bundle.meta
    n = meta["n"]
    if meta["model"] == "heat":
        return np.arange(1, n + 1) * meta["h"]
    return cell_centers(n)


def smooth_random_profile(xi, rng, modes=8, half=False):
    """sum_k c_k sin(w_k xi) with c_k ~ N(0, 1) / k^3.

    ``w_k = k pi`` gives profiles vanishing at both ends; ``half=True``
    uses ``w_k = k pi / 2``, vanishing at 0 only with generic value and
    slope at 1.
    """
    k = np.arange(1, modes + 1)
    w = k * np.pi / 2 if half else k * np.pi
    c = rng.standard_normal(modes) / k**3
    return np.sin(np.outer(xi, w)) @ c


def initial_state(bundle, kind="sine", rng=None):
    """Sampled initial state of a named kind: sine, indicator or random.

    For the wave, ``sine``/``indicator`` set the first field and leave the
    second at zero; ``random`` draws both fields.  Random states are smooth
    and satisfy the zero-input boundary conditions (inflow value 0 for
    transport, ``x1(0) = x2(0)`` and ``x2(1) = 0`` for the wave, zero
    Dirichlet data for heat), so zero-input trajectories stay smooth.
    """
    xi = state_grid(bundle)
    wave = bundle.meta["model"] == "wave"
    if kind == "sine":
        f = np.sin(np.pi * xi)
        return np.concatenate([f, np.zeros_like(f)]) if wave else f
    if kind == "indicator":
        f = np.ones_like(xi)
        return np.concatenate([f, np.zeros_like(f)]) if wave else f
    if kind == "random":
        rng = np.random.default_rng() if rng is None else rng
        if wave:
            return np.concatenate([smooth_random_profile(xi, rng, half=True),
                                   smooth_random_profile(xi, rng)])
        return smooth_random_profile(xi, rng, half=bundle.meta["model"] == "transport")
    raise ValueError(f"unknown initial state kind {kind!r}")
