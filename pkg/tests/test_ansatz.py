import math
from fractions import Fraction

import numpy as np
import pytest

from shproof.ansatz import (
    RadialConfig,
    build_trace_and_project,
    default_weights,
    disk_to_square_fourier,
    galerkin_newton,
    solve_radial,
    trace_check,
    trace_matrix,
    trace_rows,
)
from shproof.d2seq import D2Sequence, evaluate_grid
from shproof.errors import NoConvergence, TraceCheckFailed
from shproof.shmodel import ModelParams, residual_F

PARAMS = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(20), 8, 12)


def flat_exact(U):
    return np.array([Fraction(x) for x in U.coeffs.ravel()], dtype=object)


@pytest.mark.parametrize("seed", range(20))
def test_projection_lands_exactly_in_trace_kernel(seed):
    rng = np.random.default_rng(seed)
    N0 = int(rng.integers(3, 9))
    U = D2Sequence(rng.standard_normal((N0 + 1, N0 + 1)), 5.0)
    P, system = build_trace_and_project(U)
    assert P.kind == "exact"
    trace_check(P)
    M = trace_matrix(N0)
    assert not any(M.astype(object) @ flat_exact(P))
    # the trace rows describe u and its second normal derivative on x1 = d
    x2 = np.linspace(-5, 5, 7)
    Pf = P.to_float()
    assert np.max(np.abs(evaluate_grid(Pf, [5.0, -5.0], x2))) <= 1e-12
    n2 = np.arange(N0 + 1) ** 2
    uxx = D2Sequence(Pf.coeffs * n2[:, None], 5.0)
    uyy = D2Sequence(Pf.coeffs * n2[None, :], 5.0)
    assert np.max(np.abs(evaluate_grid(uxx, [5.0], x2))) <= 1e-11
    assert np.max(np.abs(evaluate_grid(uyy, x2, [5.0]))) <= 1e-11
    # idempotent, and a small change for inputs that are nearly in the kernel already
    Q, _ = build_trace_and_project(P)
    assert np.array_equal(Q.coeffs, P.coeffs)
    assert len(trace_rows(N0, system.drop)) == 4 * N0


def test_projection_is_small_for_localized_input():
    d = 20.0
    U = disk_to_square_fourier(lambda x, y: np.exp(-(x * x + y * y) / 4), d, 40)
    P, _ = build_trace_and_project(U)
    diff = np.max(np.abs(P.to_float().coeffs - U.coeffs))
    assert diff <= 1e-12 * np.max(np.abs(U.coeffs))


def test_trace_check_rejects_float_and_broken_input():
    U = D2Sequence(np.ones((4, 4)), 3.0)
    with pytest.raises(TraceCheckFailed):
        trace_check(U)
    c = np.full((4, 4), Fraction(0), dtype=object)
    c[0, 0] = Fraction(1)
    with pytest.raises(TraceCheckFailed):
        trace_check(D2Sequence(c, 3.0))


def test_default_weights_positive_and_decreasing():
    w = default_weights(10, 7)
    assert all(x > 0 for x in w) and all(a > b for a, b in zip(w, w[1:]))


@pytest.fixture(scope="module")
def spot():
    cfg = RadialConfig(R=20.0, N1=2, s=4, points=400, amplitude=1.0, width=3.0)
    return solve_radial(PARAMS, cfg)


def test_radial_solve_converges(spot):
    assert spot.residual <= 1e-8
    v = spot.evaluate(np.array([0.0]), np.array([0.0]))[0]
    assert abs(v) > 0.1
    # D4 symmetry of the reconstructed function
    x, y = np.array([1.3, -0.4]), np.array([0.2, 2.1])
    np.testing.assert_allclose(spot.evaluate(x, y), spot.evaluate(y, x), atol=1e-12)
    np.testing.assert_allclose(spot.evaluate(x, y), spot.evaluate(-x, y), atol=1e-12)
    assert spot.evaluate(np.array([25.0]), np.array([0.0]))[0] == 0.0


def test_galerkin_newton_converges_from_radial_seed(spot):
    U = disk_to_square_fourier(spot, float(PARAMS.d), PARAMS.N0)
    Ug, report = galerkin_newton(U, PARAMS, tol=1e-12)
    assert report["residuals"][-1] <= 1e-12
    F = residual_F(Ug, PARAMS).coeffs[: PARAMS.N0 + 1, : PARAMS.N0 + 1]
    assert np.max(np.abs(F)) <= 1e-12
    assert report["iterations"] <= 8


def test_galerkin_newton_reports_no_convergence():
    rng = np.random.default_rng(0)
    U = D2Sequence(rng.standard_normal((9, 9)) * 3, 20.0)
    with pytest.raises(NoConvergence) as info:
        galerkin_newton(U, PARAMS, max_iter=1)
    assert info.value.residual > 1.0
