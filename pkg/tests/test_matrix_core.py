import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg as sla

from lqdissip.errors import (
    ConditioningError,
    NotPSDError,
    NotStableError,
    ShapeError,
    UnsolvableError,
)
from lqdissip.matrix_core import (
    check_symmetric,
    is_hurwitz,
    matexp,
    psd_factor,
    solve_care,
    solve_lyapunov,
    spectral_abscissa,
    sym_eig,
)


def random_hurwitz(rng, n, shift=0.5):
    A = rng.standard_normal((n, n))
    return A - (spectral_abscissa(A) + shift) * np.eye(n)


def test_sym_eig_ascending_orthonormal(rng):
    M = rng.standard_normal((6, 6))
    M = M + M.T
    res = sym_eig(M)
    assert np.all(np.diff(res.eigenvalues) >= 0)
    np.testing.assert_allclose(res.eigenvectors.T @ res.eigenvectors, np.eye(6), atol=1e-13)
    np.testing.assert_allclose(res.eigenvectors @ np.diag(res.eigenvalues) @ res.eigenvectors.T, M,
                               atol=1e-12)


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(ShapeError):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


def test_psd_factor_identity():
    factor, rank = psd_factor(np.eye(3))
    assert rank == 3
    np.testing.assert_allclose(factor, np.eye(3), atol=1e-15)


def test_psd_factor_rank_one():
    v = np.array([1.0, 2.0, -1.0])
    factor, rank = psd_factor(np.outer(v, v))
    assert rank == 1
    np.testing.assert_allclose(factor.T @ factor, np.outer(v, v), atol=1e-13)


def test_psd_factor_zero_matrix():
    factor, rank = psd_factor(np.zeros((4, 4)))
    assert rank == 0
    assert factor.shape == (0, 4)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(NotPSDError) as info:
        psd_factor(np.diag([1.0, -0.5]))
    assert info.value.eigenvalue == pytest.approx(-0.5)


def test_psd_factor_clamps_roundoff():
    M = np.diag([1.0, -1e-12, 0.0])
    factor, rank = psd_factor(M)
    assert rank == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_psd_factor_reconstructs(n, r, seed):
    g = np.random.default_rng(seed)
    X = g.standard_normal((min(r, n), n))
    M = X.T @ X
    factor, rank = psd_factor(M)
    assert rank <= min(r, n)
    np.testing.assert_allclose(factor.T @ factor, M, atol=1e-9 * (1 + np.abs(M).max()))


def test_check_symmetric_tolerance():
    M = np.array([[1.0, 1.0], [1.0 + 1e-14, 1.0]])
    check_symmetric(M)
    with pytest.raises(ShapeError):
        check_symmetric(np.array([[1.0, 1.0], [1.1, 1.0]]))


def test_lyapunov_against_kronecker(rng):
    n = 5
    A = random_hurwitz(rng, n)
    M = rng.standard_normal((n, n))
    M = M @ M.T
    Z = solve_lyapunov(A, M)
    # oracle: vec(A'Z + ZA) = (I kron A' + A' kron I) vec(Z)
    L = np.kron(np.eye(n), A.T) + np.kron(A.T, np.eye(n))
    Z_ref = np.linalg.solve(L, -M.reshape(-1, order="F")).reshape(n, n, order="F")
    np.testing.assert_allclose(Z, Z_ref, atol=1e-10)
    np.testing.assert_allclose(Z, Z.T, atol=0)


def test_lyapunov_scalar():
    np.testing.assert_allclose(solve_lyapunov([[-1.0]], [[2.0]]), [[1.0]])


def test_lyapunov_requires_hurwitz():
    with pytest.raises(NotStableError):
        solve_lyapunov(np.diag([-1.0, 0.5]), np.eye(2))


def test_care_matches_scipy(rng):
    n, m = 6, 2
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    Qc = np.eye(n)
    Sc = 0.1 * rng.standard_normal((n, m))
    Rc = np.diag([1.0, 2.0])
    P = solve_care(A, B, Qc, Sc, Rc)
    P_ref = sla.solve_continuous_are(A, B, Qc, Rc, s=Sc)
    np.testing.assert_allclose(P, P_ref, rtol=1e-9, atol=1e-10)
    K = np.linalg.solve(Rc, B.T @ P + Sc.T)
    assert is_hurwitz(A - B @ K)


def test_care_scalar_closed_form():
    # -2p + 2 - p^2/2 = 0  ->  p = -2 + 2 sqrt(2)
    P = solve_care([[-1.0]], [[1.0]], [[2.0]], [[0.0]], [[2.0]])
    np.testing.assert_allclose(P, [[2 * np.sqrt(2) - 2]], rtol=1e-13)


def test_care_unstabilizable():
    A = np.diag([1.0, -1.0])
    B = np.array([[0.0], [1.0]])
    with pytest.raises(UnsolvableError):
        solve_care(A, B, np.eye(2), None, np.eye(1))


def test_care_singular_weight():
    with pytest.raises(ConditioningError):
        solve_care([[-1.0]], [[1.0]], [[1.0]], [[0.0]], [[0.0]])


@pytest.mark.parametrize("scale", [1e-3, 1.0, 8.0, 40.0])
def test_matexp_matches_scipy(rng, scale):
    A = scale * rng.standard_normal((7, 7))
    E = matexp(A, 1.0)
    E_ref = sla.expm(A)
    np.testing.assert_allclose(E, E_ref, rtol=1e-9, atol=1e-12 * np.abs(E_ref).max())


def test_matexp_zero_step_and_commuting():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(matexp(A, 0.0), np.eye(2))
    R = matexp(A, np.pi / 2)
    np.testing.assert_allclose(R, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14)
    np.testing.assert_allclose(matexp(A, 0.3) @ matexp(A, 0.4), matexp(A, 0.7), atol=1e-14)
