import numpy as np
import pytest

from lqdissip.dissipative import ExtendedSystem, check_dissipativity, dissipation_factor, extend_system, lure_residual
from lqdissip.lure_lq import optimal_feedback, solve_singular_lq, value_functions
from lqdissip.models import (
    build_heat,
    build_model,
    build_transport,
    build_wave,
    cell_centers,
    heat_gradient,
    initial_state,
    transport_exact_value,
    transport_upwind_system,
    wave_exact_value,
)
from lqdissip.simulate import simulate_lti, zero_policy


def solve(b, **kw):
    cert = dissipation_factor(b.sys, b.sr, b.P)
    ext = extend_system(b.sys, cert)
    return cert, ext, solve_singular_lq(ext, **kw)


@pytest.mark.parametrize("name", ["transport", "wave", "heat"])
@pytest.mark.parametrize("n", [3, 10, 50])
def test_bundles_are_dissipative(name, n):
    b = build_model(name, n)
    ok, min_eig = check_dissipativity(b.sys, b.sr, b.P, 1e-8)
    assert ok, min_eig
    assert b.meta["model"] == name and b.meta["n"] == n


@pytest.mark.parametrize("builder,bad", [(build_transport, 1), (build_wave, 1), (build_heat, 2)])
def test_grid_size_validation(builder, bad):
    with pytest.raises(ValueError):
        builder(bad)


def test_transport_exact_value_examples():
    n = 40
    h = 1.0 / n
    assert transport_exact_value(np.ones(n), h) == pytest.approx((2.0, 1.0))
    assert transport_exact_value(np.zeros(n), h) == (0.0, 0.0)
    assert transport_exact_value(np.sin(np.pi * cell_centers(n)), h) == pytest.approx((1.0, 0.5))


def test_wave_exact_value_examples():
    n = 25
    h = 1.0 / n
    one, zero = np.ones(n), np.zeros(n)
    assert wave_exact_value(one, zero, h) == pytest.approx((-0.5, 0.5))
    f = np.sin(np.pi * cell_centers(n))
    assert wave_exact_value(f, f, h)[0] == 0.0
    assert wave_exact_value(f, -f, h)[1] == 0.0
    with pytest.raises(ValueError):
        wave_exact_value(one, np.ones(n + 1), h)


def test_transport_dissipation_output_is_boundary_term():
    b = build_transport(50)
    cert = dissipation_factor(b.sys, b.sr, b.P)
    assert cert.rank_w == 1
    # W = [C D]'[C D]: only the outflow value is dissipated
    CD = np.hstack([b.sys.C, b.sys.D])
    np.testing.assert_allclose(lure_residual(b.sys, b.sr, b.P), CD.T @ CD, atol=1e-10)


def test_upwind_transport_is_not_dissipative():
    sys, sr = transport_upwind_system(50)
    ok, min_eig = check_dissipativity(sys, sr, sys.gram)
    assert not ok and min_eig < -1.0


def test_transport_values_and_zero_control():
    b = build_transport(200)
    cert, ext, sol = solve(b)
    x0 = initial_state(b, "sine")
    vr = value_functions(b.P, sol, x0)
    assert vr.val_Jw == pytest.approx(0.5, abs=1e-9)
    assert vr.val_J == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(sol.P_w, b.sys.gram, atol=1e-10)


def test_transport_zero_input_empties_the_domain():
    b = build_transport(200)
    cert = dissipation_factor(b.sys, b.sr, b.P)
    traj = simulate_lti(extend_system(b.sys, cert), initial_state(b, "sine"), zero_policy(), 2.0, 1e-3)
    norms = np.sqrt(np.einsum("ki,ij,kj->k", traj.states, b.sys.gram, traj.states))
    assert norms[-1] <= 1e-3
    k = np.searchsorted(traj.times, 1.1)
    assert np.all(norms[k:] <= 1e-6 * norms[0])


def test_wave_dissipation_output_is_left_trace():
    n = 50
    b = build_wave(n)
    cert = dissipation_factor(b.sys, b.sr, b.P)
    assert cert.rank_w == 1
    # w = sqrt(2) x1(0): the damper value is a fixed combination of the cells
    # whose square, times 2, is the quadratic form of W
    W = lure_residual(b.sys, b.sr, b.P)
    KL = np.hstack([cert.K, cert.L])
    np.testing.assert_allclose(KL.T @ KL, W, atol=1e-10)
    refl = build_wave(n, left_boundary="reflect")
    W_refl = lure_residual(refl.sys, refl.sr, refl.P)
    # without the damper the scheme is lossless: W only couples to the input
    np.testing.assert_allclose(W_refl[: 2 * n, : 2 * n], 0.0, atol=1e-9)


def test_wave_reflecting_variant_conserves_energy():
    b = build_wave(40, left_boundary="reflect")
    x0 = initial_state(b, "random", np.random.default_rng(1))
    traj = simulate_lti(ExtendedSystem(base=b.sys, w_rows=0), x0, zero_policy(), 1.0, 1e-3)
    energy = np.einsum("ki,ij,kj->k", traj.states, b.sys.gram, traj.states)
    np.testing.assert_allclose(energy, energy[0], rtol=1e-10)


def test_wave_closed_loop_under_output_feedback_is_stable():
    b = build_wave(50)
    # u = -y with y = Cx + Du
    F = -np.linalg.solve(np.eye(1) + b.sys.D, b.sys.C)
    assert np.max(np.linalg.eigvals(b.sys.A + b.sys.B @ F).real) < 0


def test_wave_box_optimal_cost_operator():
    n = 40
    b = build_wave(n)
    cert, ext, sol = solve(b)
    h = 1.0 / n
    I = np.eye(n)
    np.testing.assert_allclose(sol.P_w, 0.5 * h * np.block([[I, I], [I, I]]), atol=1e-8)


def test_wave_staggered_scheme_is_singular():
    b = build_wave(20, scheme="staggered")
    ok, _ = check_dissipativity(b.sys, b.sr, b.P)
    assert ok
    cert = dissipation_factor(b.sys, b.sr, b.P)
    np.testing.assert_allclose(cert.L, 0.0, atol=1e-12)
    cert, ext, sol = solve(b, eps_schedule=[1e-2, 1e-4, 1e-6])
    assert not sol.converged


def test_heat_dissipation_is_discrete_gradient():
    n = 30
    b = build_heat(n)
    h = b.meta["h"]
    W = lure_residual(b.sys, b.sr, b.P)
    Gd = heat_gradient(n)
    np.testing.assert_allclose(W, 2 * h * Gd.T @ Gd, atol=1e-9 * np.abs(W).max())
    # restricted to u = 0: 2 h sum of squared forward differences
    x = np.sin(3 * np.arange(1, n + 1) * h)
    nodes = np.concatenate([[0.0], x, [0.0]])
    z = np.concatenate([x, [0.0, 0.0]])
    assert z @ W @ z == pytest.approx(2 * h * np.sum((np.diff(nodes) / h) ** 2), rel=1e-12)
    cert = dissipation_factor(b.sys, b.sr, b.P)
    assert cert.rank_w == n + 1


def test_heat_energy_decays():
    b = build_heat(40)
    x0 = initial_state(b, "sine")
    traj = simulate_lti(extend_system(b.sys, dissipation_factor(b.sys, b.sr, b.P)), x0,
                        zero_policy(), 0.5, 1e-3)
    energy = np.einsum("ki,ij,kj->k", traj.states, b.sys.gram, traj.states)
    assert np.all(np.diff(energy) < 0)


def test_heat_output_feedback_margin_under_refinement():
    margins = []
    for n in (20, 40, 80, 160):
        s = build_heat(n).sys
        F = -np.linalg.solve(np.eye(2) + s.D, s.C)
        margins.append(-np.max(np.linalg.eigvals(s.A + s.B @ F).real))
    assert min(margins) > 1.0
    assert abs(margins[-1] - margins[-2]) < 0.1 * margins[-1]


def test_heat_solution_is_stabilizing():
    b = build_heat(25)
    cert, ext, sol = solve(b)
    fb, solvable = optimal_feedback(sol)
    assert solvable and fb.stabilizing


def test_initial_state_kinds():
    w = build_wave(10)
    x = initial_state(w, "indicator")
    np.testing.assert_array_equal(x, np.r_[np.ones(10), np.zeros(10)])
    t = build_transport(10)
    np.testing.assert_allclose(initial_state(t, "sine"), np.sin(np.pi * cell_centers(10)))
    r = initial_state(t, "random", np.random.default_rng(0))
    assert r.shape == (10,)
    with pytest.raises(ValueError):
        initial_state(t, "gaussian")
