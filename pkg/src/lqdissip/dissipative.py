"""Finite-dimensional dissipative systems, supply rates and storage certificates.

Conventions
-----------
State inner product is ``<x, z>_G = x.T @ gram @ z``.  A quadratic storage
function is carried by its *form matrix* ``P`` so that ``S(x) = x.T @ P @ x``;
the storage ``||x||_G^2`` therefore has ``P = gram``.  The dissipation
inequality reads

    S(x(t)) - S(x(0)) + int_0^t s(y, u) dt >= 0,

whose infinitesimal version is the matrix inequality ``W(P) >= 0`` with
``W(P)`` returned by :func:`lure_residual`.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .matrix_core import (
    DEFAULT_CLAMP_TOL,
    as_matrix,
    check_symmetric,
    psd_factor,
    sym,
)


@dataclass(frozen=True)
class StateSpaceSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        D = as_matrix(self.D, "D")
        if B.shape[0] != n:
            raise ShapeError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise ShapeError(f"C has {C.shape[1]} columns, expected {n}")
        if D.shape != (C.shape[0], B.shape[1]):
            raise ShapeError(f"D must be {(C.shape[0], B.shape[1])}, got {D.shape}")
        G = check_symmetric(self.gram, "gram")
        if G.shape != (n, n):
            raise ShapeError(f"gram must be {(n, n)}, got {G.shape}")
        if n and np.linalg.eigvalsh(G).min() <= 0:
            raise ShapeError("gram must be positive definite")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D), ("gram", G)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class SupplyRate:
    """s(y, u) = y' Om Q y + 2 y' Om S u + u' R u with Om = out_gram."""

    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray
    out_gram: np.ndarray = None

    def __post_init__(self):
        Q = check_symmetric(self.Q, "Q")
        R = check_symmetric(self.R, "R")
        S = as_matrix(self.S, "S")
        p, m = Q.shape[0], R.shape[0]
        if S.shape != (p, m):
            raise ShapeError(f"S must be {(p, m)}, got {S.shape}")
        Om = np.eye(p) if self.out_gram is None else check_symmetric(self.out_gram, "out_gram")
        if Om.shape != (p, p):
            raise ShapeError(f"out_gram must be {(p, p)}, got {Om.shape}")
        if p and np.linalg.eigvalsh(Om).min() <= 0:
            raise ShapeError("out_gram must be positive definite")
        for name, val in (("Q", Q), ("S", S), ("R", R), ("out_gram", Om)):
            object.__setattr__(self, name, val)

    @property
    def p(self):
        return self.Q.shape[0]

    @property
    def m(self):
        return self.R.shape[0]

    def block(self):
        """Symmetric weight of the (y, u) quadratic form."""
        OQ = sym(self.out_gram @ self.Q)
        OS = self.out_gram @ self.S
        return np.block([[OQ, OS], [OS.T, self.R]])


@dataclass(frozen=True)
class StorageCertificate:
    P: np.ndarray
    K: np.ndarray
    L: np.ndarray
    rank_w: int


@dataclass(frozen=True)
class ExtendedSystem:
    """The base system with the dissipation output w stacked below y."""

    base: StateSpaceSystem
    w_rows: int

    @property
    def p_y(self):
        return self.base.p - self.w_rows

    @property
    def K(self):
        return self.base.C[self.p_y:]

    @property
    def L(self):
        return self.base.D[self.p_y:]


def _check_pair(sys, sr):
    if sr.p != sys.p or sr.m != sys.m:
        raise ShapeError(
            f"supply rate is for (p={sr.p}, m={sr.m}), system has (p={sys.p}, m={sys.m})"
        )


def supply_eval(sr, y, u):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if y.shape != (sr.p,) or u.shape != (sr.m,):
        raise ShapeError(f"expected y of length {sr.p} and u of length {sr.m}")
    Oy = sr.out_gram @ y
    return float(Oy @ (sr.Q @ y) + 2.0 * Oy @ (sr.S @ u) + u @ (sr.R @ u))


def supply_matrix(sys, sr):
    """Weight M with s(Cx + Du, u) = (x, u)' M (x, u)."""
    _check_pair(sys, sr)
    n, m = sys.n, sys.m
    T = np.block([[sys.C, sys.D], [np.zeros((m, n)), np.eye(m)]])
    return sym(T.T @ sr.block() @ T)


def lure_residual(sys, sr, P):
    """Matrix W(P) of the form (x, u) -> 2 x'P(Ax + Bu) + s(Cx + Du, u)."""
    _check_pair(sys, sr)
    P = check_symmetric(P, "P", tol=1e-10)
    if P.shape != (sys.n, sys.n):
        raise ShapeError(f"P must be {(sys.n, sys.n)}, got {P.shape}")
    n, m = sys.n, sys.m
    AB = np.hstack([sys.A, sys.B])
    PAB = np.zeros((n + m, n + m))
    PAB[:n] = P @ AB
    return sym(PAB + PAB.T) + supply_matrix(sys, sr)


def check_dissipativity(sys, sr, P, tol=1e-8):
    """Return ``(dissipative, min_eig)`` for the LMI ``W(P) >= 0``."""
    W = lure_residual(sys, sr, P)
    if W.size == 0:
        return True, 0.0
    lam = np.linalg.eigvalsh(W)
    norm2 = float(np.max(np.abs(lam)))
    min_eig = float(lam[0])
    return bool(min_eig >= -tol * (1.0 + norm2)), min_eig


def dissipation_factor(sys, sr, P, clamp_tol=DEFAULT_CLAMP_TOL):
    """Factor ``W(P) = [K L]' [K L]``; w = Kx + Lu is the dissipation output."""
    W = lure_residual(sys, sr, P)
    factor, rank = psd_factor(W, clamp_tol)
    n = sys.n
    return StorageCertificate(P=sym(np.asarray(P, dtype=float)), K=factor[:, :n],
                              L=factor[:, n:], rank_w=rank)


def extend_system(sys, cert):
    if cert.K.shape[1] != sys.n or cert.L.shape[1] != sys.m:
        raise ShapeError("certificate does not match the system dimensions")
    base = StateSpaceSystem(
        A=sys.A,
        B=sys.B,
        C=np.vstack([sys.C, cert.K]),
        D=np.vstack([sys.D, cert.L]),
        gram=sys.gram,
    )
    return ExtendedSystem(base=base, w_rows=cert.rank_w)


def extended_supply(ext):
    """Supply rate ``||w||^2`` on the stacked output (y, w)."""
    p_tot = ext.base.p
    m = ext.base.m
    Q = np.zeros((p_tot, p_tot))
    Q[ext.p_y:, ext.p_y:] = np.eye(ext.w_rows)
    return SupplyRate(Q=Q, S=np.zeros((p_tot, m)), R=np.zeros((m, m)), out_gram=np.eye(p_tot))
