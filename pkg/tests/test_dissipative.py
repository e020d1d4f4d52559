import numpy as np
import pytest

from lqdissip.dissipative import (
    StateSpaceSystem,
    SupplyRate,
    check_dissipativity,
    dissipation_factor,
    extend_system,
    extended_supply,
    lure_residual,
    supply_eval,
    supply_matrix,
)
from lqdissip.errors import NotPSDError, ShapeError


def rc_circuit(feedthrough=0.0):
    # x' = -x + u, y = x + d u, impedance supply 2 y u
    sys = StateSpaceSystem(A=[[-1.0]], B=[[1.0]], C=[[1.0]], D=[[feedthrough]], gram=[[1.0]])
    sr = SupplyRate(Q=[[0.0]], S=[[1.0]], R=[[0.0]])
    return sys, sr


def test_supply_eval_examples():
    sr = SupplyRate(Q=[[2.0]], S=[[0.0]], R=[[-1.0]])
    assert supply_eval(sr, [1.0], [1.0]) == pytest.approx(1.0)
    imp = SupplyRate(Q=[[0.0]], S=[[1.0]], R=[[0.0]])
    assert supply_eval(imp, 3.0, -2.0) == pytest.approx(-12.0)


def test_supply_eval_out_gram():
    sr = SupplyRate(Q=np.eye(2), S=np.zeros((2, 1)), R=[[0.0]], out_gram=np.diag([2.0, 3.0]))
    assert supply_eval(sr, [1.0, 1.0], [0.0]) == pytest.approx(5.0)


def test_shape_validation():
    with pytest.raises(ShapeError):
        StateSpaceSystem(A=np.eye(2), B=np.ones((3, 1)), C=np.ones((1, 2)), D=[[0.0]], gram=np.eye(2))
    with pytest.raises(ShapeError):
        StateSpaceSystem(A=np.eye(2), B=np.ones((2, 1)), C=np.ones((1, 2)), D=[[0.0]],
                         gram=-np.eye(2))
    with pytest.raises(ShapeError):
        SupplyRate(Q=[[1.0]], S=[[1.0, 2.0]], R=[[1.0]])
    sys, _ = rc_circuit()
    with pytest.raises(ShapeError):
        lure_residual(sys, SupplyRate(Q=np.eye(2), S=np.zeros((2, 1)), R=[[0.0]]), [[1.0]])


def test_lure_residual_is_the_dissipation_form(rng):
    n, m, p = 4, 2, 3
    sys = StateSpaceSystem(A=rng.standard_normal((n, n)), B=rng.standard_normal((n, m)),
                           C=rng.standard_normal((p, n)), D=rng.standard_normal((p, m)),
                           gram=np.eye(n))
    Q = rng.standard_normal((p, p))
    sr = SupplyRate(Q=Q + Q.T, S=rng.standard_normal((p, m)), R=np.eye(m),
                    out_gram=np.diag([1.0, 2.0, 0.5]))
    P = rng.standard_normal((n, n))
    P = P + P.T
    W = lure_residual(sys, sr, P)
    for _ in range(5):
        x, u = rng.standard_normal(n), rng.standard_normal(m)
        y = sys.C @ x + sys.D @ u
        direct = 2 * x @ P @ (sys.A @ x + sys.B @ u) + supply_eval(sr, y, u)
        z = np.concatenate([x, u])
        assert z @ W @ z == pytest.approx(direct, rel=1e-12, abs=1e-12)
    M = supply_matrix(sys, sr)
    np.testing.assert_allclose(lure_residual(sys, sr, np.zeros((n, n))), M)


def test_rc_circuit_is_passive():
    sys, sr = rc_circuit()
    ok, min_eig = check_dissipativity(sys, sr, [[-1.0]])
    assert ok
    # W(-1) = diag(2, 0)
    np.testing.assert_allclose(lure_residual(sys, sr, [[-1.0]]), np.diag([2.0, 0.0]))
    ok, min_eig = check_dissipativity(sys, sr, [[1.0]])
    assert not ok and min_eig < 0


def test_dissipation_factor_and_extension():
    sys, sr = rc_circuit(feedthrough=1.0)
    cert = dissipation_factor(sys, sr, [[-1.0]])
    assert cert.rank_w == 2
    KL = np.hstack([cert.K, cert.L])
    np.testing.assert_allclose(KL.T @ KL, np.diag([2.0, 2.0]), atol=1e-14)
    ext = extend_system(sys, cert)
    assert ext.p_y == 1 and ext.w_rows == 2
    np.testing.assert_array_equal(ext.K, cert.K)
    esr = extended_supply(ext)
    x, u = np.array([0.7]), np.array([-0.3])
    yw = ext.base.C @ x + ext.base.D @ u
    w = cert.K @ x + cert.L @ u
    assert supply_eval(esr, yw, u) == pytest.approx(w @ w)


def test_dissipation_factor_rejects_non_storage():
    sys, sr = rc_circuit()
    with pytest.raises(NotPSDError):
        dissipation_factor(sys, sr, [[1.0]])
