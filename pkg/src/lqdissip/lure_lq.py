"""Nonnegative LQ problem of the extended system and its link to the indefinite one.

The extended system carries the dissipation output ``w = Kx + Lu``; its cost
``int ||w||^2`` is minimized by the maximal nonnegative solution ``P_w`` of a
(possibly singular) Riccati equation.  The singular case ``L'L`` not
invertible is handled by a vanishing Tikhonov term ``eps * I``.
"""
from dataclasses import dataclass, field

import numpy as np

from .dissipative import extended_supply, lure_residual, supply_matrix
from .errors import (
    NoConvergenceError,
    NotPSDError,
    UnsolvableError,
    UnstabilizableError,
)
from .matrix_core import (
    DEFAULT_CLAMP_TOL,
    is_hurwitz,
    psd_factor,
    solve_care,
    solve_lyapunov,
    sym,
)

DEFAULT_EPS_SCHEDULE = tuple(10.0 ** (-k) for k in range(2, 11))
CAUCHY_TOL = 1e-7


@dataclass(frozen=True)
class FeedbackGain:
    Fgain: np.ndarray
    closed_loop_spectrum: np.ndarray
    stabilizing: bool


@dataclass(frozen=True)
class LureSolution:
    P_w: np.ndarray
    E: np.ndarray
    F: np.ndarray
    eps_schedule: tuple
    P_w_per_eps: tuple
    converged: bool
    increments: tuple = ()
    ext: object = field(default=None, repr=False, compare=False)

    @property
    def rank(self):
        return self.E.shape[0]


@dataclass(frozen=True)
class ValueReport:
    val_J: float
    val_Jw: float
    storage_at_x0: float
    identity_gap: float


def _gain(A, B, Fgain):
    Acl = A + B @ Fgain
    spec = np.linalg.eigvals(Acl) if A.shape[0] else np.zeros(0, dtype=complex)
    stab = bool(spec.size == 0 or np.max(spec.real) < 0)
    return FeedbackGain(Fgain=Fgain, closed_loop_spectrum=spec, stabilizing=stab)


def stabilizing_feedback(sys):
    """A state feedback u = Fgain x making A + B Fgain Hurwitz.

    Taken from the Riccati equation with unit weights (state weight = Gram
    matrix, input weight = identity).
    """
    n, m = sys.n, sys.m
    if m == 0 or not np.any(sys.B):
        fb = _gain(sys.A, sys.B, np.zeros((m, n)))
        if not fb.stabilizing:
            raise UnstabilizableError("A is not Hurwitz and B = 0")
        return fb
    try:
        Ps = solve_care(sys.A, sys.B, sys.gram, np.zeros((n, m)), np.eye(m))
    except UnsolvableError as exc:
        raise UnstabilizableError(str(exc)) from exc
    fb = _gain(sys.A, sys.B, -sys.B.T @ Ps)
    if not fb.stabilizing:
        raise UnstabilizableError("closed-loop spectrum touches the closed right half-plane")
    return fb


def _factor_residual(W, clamp_tol):
    try:
        factor, _ = psd_factor(W, clamp_tol)
        return factor, True
    except NotPSDError:
        lam, V = np.linalg.eigh(sym(W))
        keep = lam > clamp_tol * np.max(np.abs(lam))
        return (V[:, keep] * np.sqrt(lam[keep])).T, False


def solve_singular_lq(ext, eps_schedule=DEFAULT_EPS_SCHEDULE, clamp_tol=DEFAULT_CLAMP_TOL,
                      cauchy_tol=CAUCHY_TOL, strict=False):
    """Maximal nonnegative ``P_w`` for the cost ``int ||Kx + Lu||^2``.

    Each ``eps`` in the (descending) schedule gives a definite Riccati
    equation with input weight ``L'L + eps I``; its stabilizing solution is
    the regularized value function.  The last iterate is kept and marked
    converged once successive relative increments fall below ``cauchy_tol``.
    The residual of the extended Lur'e equation at ``P_w`` is factored into
    ``[E F]``.
    """
    sysb = ext.base
    A, B = sysb.A, sysb.B
    n, m = sysb.n, sysb.m
    K, L = ext.K, ext.L
    eps_schedule = tuple(float(e) for e in eps_schedule)
    if not eps_schedule:
        raise ValueError("eps_schedule is empty")
    if any(e <= 0 for e in eps_schedule) or any(
        a <= b for a, b in zip(eps_schedule, eps_schedule[1:])
    ):
        raise ValueError("eps_schedule must be positive and strictly descending")

    Qc, Sc, Rc = sym(K.T @ K), K.T @ L, sym(L.T @ L)
    iterates = []
    incs = []
    for eps in eps_schedule:
        try:
            P = solve_care(A, B, Qc, Sc, Rc + eps * np.eye(m))
        except UnsolvableError as exc:
            raise UnstabilizableError(f"regularized problem at eps={eps:g}: {exc}") from exc
        if iterates:
            prev = iterates[-1]
            incs.append(float(np.linalg.norm(P - prev, "fro") / (1.0 + np.linalg.norm(P, "fro"))))
        iterates.append(P)

    P_w = iterates[-1]
    converged = bool(incs[-1] <= cauchy_tol) if incs else False
    W_ext = lure_residual(sysb, extended_supply(ext), P_w)
    EF, psd_ok = _factor_residual(W_ext, clamp_tol)
    converged = converged and psd_ok
    sol = LureSolution(
        P_w=P_w,
        E=EF[:, :n],
        F=EF[:, n:],
        eps_schedule=eps_schedule,
        P_w_per_eps=tuple(iterates),
        converged=converged,
        increments=tuple(incs),
        ext=ext,
    )
    if strict and not converged:
        raise NoConvergenceError("eps schedule exhausted before convergence", sol)
    return sol


def combined_lure_check(sys, sr, P, sol):
    """Relative Frobenius residual of  W(P + P_w) = [E F]'[E F]."""
    W = lure_residual(sys, sr, sym(np.asarray(P) + sol.P_w))
    EF = np.hstack([sol.E, sol.F])
    return float(np.linalg.norm(W - EF.T @ EF, "fro") / (1.0 + np.linalg.norm(W, "fro")))


def optimal_feedback(sol, lsq_tol=1e-8):
    """Solve the kernel condition ``E x + F u = 0`` for a static gain.

    Returns the least-squares gain ``-pinv(F) E`` and whether the condition
    is solvable exactly (up to ``lsq_tol``) by static feedback.
    """
    E, F = sol.E, sol.F
    m = F.shape[1]
    n = E.shape[1]
    if E.shape[0] == 0:
        Fgain = np.zeros((m, n))
        solvable = True
    else:
        Fp = np.linalg.pinv(F, rcond=1e-10)
        Fgain = -Fp @ E
        leftover = E - F @ (Fp @ E)
        solvable = bool(np.linalg.norm(leftover) <= lsq_tol * np.linalg.norm(E))
    if sol.ext is not None:
        fb = _gain(sol.ext.base.A, sol.ext.base.B, Fgain)
    else:
        fb = FeedbackGain(Fgain=Fgain, closed_loop_spectrum=np.zeros(0, dtype=complex),
                          stabilizing=False)
    return fb, solvable


def value_functions(P, sol, x0):
    x0 = np.asarray(x0, dtype=float)
    val_Jw = float(x0 @ sol.P_w @ x0)
    storage = float(x0 @ np.asarray(P) @ x0)
    val_J = val_Jw + storage
    gap = abs(val_J - val_Jw - storage)
    return ValueReport(val_J=val_J, val_Jw=val_Jw, storage_at_x0=storage, identity_gap=gap)


def feedback_cost_matrix(sys, sr, Fgain):
    """Z with x0' Z x0 = int s(y, u) dt along u = Fgain x (closed loop Hurwitz)."""
    M = supply_matrix(sys, sr)
    T = np.vstack([np.eye(sys.n), Fgain])
    return solve_lyapunov(sys.A + sys.B @ Fgain, sym(T.T @ M @ T))


def _unit_vectors(gram, count, rng):
    lam, V = np.linalg.eigh(gram)
    G_mhalf = (V / np.sqrt(lam)) @ V.T
    X = rng.standard_normal((count, gram.shape[0]))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X @ G_mhalf


def maximality_probe(sys, sr, P, sol, n_feedbacks=20, n_vectors=50, seed=0,
                     perturbation=0.1, max_retries=50, extra_gains=()):
    """Largest excess of Val_J over the cost of random stabilizing feedbacks.

    Every admissible closed loop costs at least Val_J, so the returned
    violation must be nonpositive up to round-off.  Test vectors have unit
    Gram norm.
    """
    rng = np.random.default_rng(seed)
    base = stabilizing_feedback(sys).Fgain
    scale = max(np.linalg.norm(base), 1.0)
    gains = [np.asarray(g, dtype=float) for g in extra_gains]
    for _ in range(n_feedbacks):
        for _attempt in range(max_retries):
            delta = rng.standard_normal(base.shape)
            delta *= perturbation * scale / max(np.linalg.norm(delta), 1e-300)
            F = base + delta
            if is_hurwitz(sys.A + sys.B @ F):
                gains.append(F)
                break
        else:
            raise UnstabilizableError("could not sample a stabilizing perturbed gain")
    X = _unit_vectors(sys.gram, n_vectors, rng)
    PJ = sym(np.asarray(P) + sol.P_w)
    worst = -np.inf
    for F in gains:
        D = PJ - feedback_cost_matrix(sys, sr, F)
        worst = max(worst, float(np.max(np.einsum("ki,ij,kj->k", X, D, X))))
    return worst
