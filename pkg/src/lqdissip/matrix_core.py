"""Dense real linear-algebra kernels.

Matrices are plain 2-D ``numpy.ndarray`` objects.  Every routine here is a
pure function of its inputs.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import (
    ConditioningError,
    NotPSDError,
    NotStableError,
    ShapeError,
    UnsolvableError,
)

SYM_TOL = 1e-12
DEFAULT_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class SymEigResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns


def as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ShapeError(f"{name} has non-finite entries")
    return M


def _check_square(M, name):
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")


def check_symmetric(M, name="matrix", tol=SYM_TOL):
    M = as_matrix(M, name)
    _check_square(M, name)
    scale = max(1.0, np.linalg.norm(M, "fro"))
    if np.linalg.norm(M - M.T, "fro") > tol * scale:
        raise ShapeError(f"{name} is not symmetric")
    return M


def sym(M):
    return 0.5 * (M + M.T)


def sym_eig(M):
    """Eigen-decomposition of a symmetric matrix, eigenvalues ascending."""
    M = check_symmetric(M, "M")
    lam, V = np.linalg.eigh(sym(M))
    return SymEigResult(lam, V)


def psd_factor(M, clamp_tol=DEFAULT_CLAMP_TOL):
    """Factor a positive semidefinite ``M`` as ``factor.T @ factor``.

    Eigenvalues in ``[-clamp_tol*||M||_2, clamp_tol*||M||_2]`` are dropped.

    Returns
    -------
    factor : ndarray, shape (rank, n)
    rank : int

    Raises
    ------
    NotPSDError
        If an eigenvalue lies below ``-clamp_tol*||M||_2``.
    """
    res = sym_eig(M)
    lam, V = res.eigenvalues, res.eigenvectors
    n = lam.shape[0]
    norm2 = float(np.max(np.abs(lam))) if n else 0.0
    thresh = clamp_tol * norm2
    if n and lam[0] < -thresh:
        raise NotPSDError(
            f"matrix is not positive semidefinite: eigenvalue {lam[0]:.3e} "
            f"below -{thresh:.3e}",
            float(lam[0]),
        )
    keep = lam > thresh
    factor = (V[:, keep] * np.sqrt(lam[keep])).T
    return factor, int(keep.sum())


def spectral_abscissa(A):
    A = as_matrix(A, "A")
    if A.shape[0] == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(A).real))


def is_hurwitz(A, margin=0.0):
    return spectral_abscissa(A) < -margin


def solve_lyapunov(A, M):
    """Solve ``A.T Z + Z A + M = 0`` for Hurwitz ``A``."""
    A = as_matrix(A, "A")
    _check_square(A, "A")
    M = check_symmetric(M, "M", tol=1e-10)
    if A.shape != M.shape:
        raise ShapeError(f"A {A.shape} and M {M.shape} differ in shape")
    if not is_hurwitz(A):
        raise NotStableError("A is not Hurwitz")
    Z = sla.solve_continuous_lyapunov(A.T, -M)
    return sym(Z)


def care_residual(A, B, Qc, Sc, Rc, P):
    K = np.linalg.solve(Rc, B.T @ P + Sc.T)
    return A.T @ P + P @ A + Qc - (P @ B + Sc) @ K


def solve_care(A, B, Qc, Sc=None, Rc=None, refine=3):
    """Stabilizing solution of the continuous algebraic Riccati equation

        A.T P + P A + Qc - (P B + Sc) Rc^{-1} (B.T P + Sc.T) = 0

    via the ordered real Schur form of the Hamiltonian matrix, followed by
    at most ``refine`` Newton (Kleinman) correction steps when the residual
    is above tolerance.
    """
    A = as_matrix(A, "A")
    _check_square(A, "A")
    n = A.shape[0]
    B = as_matrix(B, "B").reshape(n, -1)
    m = B.shape[1]
    Qc = check_symmetric(Qc, "Qc", tol=1e-10)
    Sc = np.zeros((n, m)) if Sc is None else as_matrix(Sc, "Sc").reshape(n, m)
    Rc = np.eye(m) if Rc is None else check_symmetric(Rc, "Rc", tol=1e-10)
    if Qc.shape != (n, n) or Rc.shape != (m, m):
        raise ShapeError("Qc/Rc shapes inconsistent with A, B")
    Qc, Rc = sym(Qc), sym(Rc)

    rmin = np.linalg.eigvalsh(Rc).min() if m else 1.0
    if rmin <= 1e-12:
        raise ConditioningError(f"Rc is near-singular (min eigenvalue {rmin:.3e})")

    Rinv_St = np.linalg.solve(Rc, Sc.T)
    Ar = A - B @ Rinv_St
    Qr = sym(Qc - Sc @ Rinv_St)
    Gm = sym(B @ np.linalg.solve(Rc, B.T))
    H = np.block([[Ar, -Gm], [-Qr, -Ar.T]])

    T, Z, sdim = sla.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise UnsolvableError(
            f"Hamiltonian has {sdim} stable eigenvalues, expected {n}"
        )
    ev = np.linalg.eigvals(T[:n, :n]) if n else np.zeros(0)
    hscale = max(1.0, np.linalg.norm(H, 1))
    if n and np.max(ev.real) > -1e-13 * hscale:
        raise UnsolvableError("Hamiltonian has eigenvalues on the imaginary axis")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if n and np.linalg.cond(U1) > 1e14:
        raise UnsolvableError("stable invariant subspace is not a graph")
    P = sym(np.linalg.solve(U1.T, U2.T).T) if n else np.zeros((0, 0))

    def resid(Pm):
        return np.linalg.norm(care_residual(A, B, Qc, Sc, Rc, Pm), "fro")

    r = resid(P)
    for _ in range(refine):
        if r <= 1e-10 * (1.0 + np.linalg.norm(P, "fro")):
            break
        K = np.linalg.solve(Rc, B.T @ P + Sc.T)
        Ak = A - B @ K
        if not is_hurwitz(Ak):
            break
        rhs = Qc - Sc @ K - K.T @ Sc.T + K.T @ Rc @ K
        Pn = sym(sla.solve_continuous_lyapunov(Ak.T, -sym(rhs)))
        rn = resid(Pn)
        if not rn < r:
            break
        P, r = Pn, rn

    K = np.linalg.solve(Rc, B.T @ P + Sc.T)
    if n and not is_hurwitz(A - B @ K):
        raise UnsolvableError("Riccati solution is not stabilizing")
    return P


_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def matexp(A, h=1.0):
    """exp(A h) by scaling and squaring with a degree-13 Pade approximant."""
    A = as_matrix(A, "A")
    _check_square(A, "A")
    if h < 0:
        raise ValueError("h must be nonnegative")
    n = A.shape[0]
    I = np.eye(n)
    if h == 0 or n == 0:
        return I
    X = A * h
    norm1 = np.linalg.norm(X, 1)
    if norm1 == 0:
        return I
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA13))))
    X = X / (2.0**s)
    b = _PADE13
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I)
    V = X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I
    E = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        E = E @ E
    return E
