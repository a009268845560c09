import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shproof import _convref
from shproof.d2seq import (
    HAVE_COMPILED,
    D2Sequence,
    DomainMismatch,
    alpha,
    convolve,
    convolve_fast,
    evaluate,
    evaluate_grid,
    from_grid,
    norm,
    to_grid,
    young_bound,
)
from shproof.seqio import FormatError, read_shd2, read_shd2x, write_shd2, write_shd2x


def z2_extend(u: np.ndarray) -> np.ndarray:
    """Symmetric extension u~(j) = u(|j1|, |j2|) on [-M, M]^2."""
    M = u.shape[0] - 1
    j = np.abs(np.arange(-M, M + 1))
    return u[np.ix_(j, j)]


def z2_oracle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Full Z^2 convolution of the symmetric extensions, restricted to N0^2."""
    U, V = z2_extend(u), z2_extend(v)
    mu, mv = u.shape[0] - 1, v.shape[0] - 1
    mo = mu + mv
    full = np.zeros((2 * mo + 1, 2 * mo + 1))
    for a in range(2 * mv + 1):
        for b in range(2 * mv + 1):
            full[a:a + 2 * mu + 1, b:b + 2 * mu + 1] += V[a, b] * U
    return full[mo:, mo:]


def test_alpha_weights():
    a = alpha(2)
    assert a[0, 0] == 1 and a[1, 0] == 2 and a[0, 2] == 2 and a[1, 1] == 4


def test_norm_examples():
    assert norm(D2Sequence.delta(1.0), 2) == 1.0
    assert norm(D2Sequence.from_dict({(1, 0): 1.0}, 1.0), 1) == 2.0
    assert norm(D2Sequence.from_dict({(1, 1): 3.0}, 1.0), 2) == 6.0


def test_convolution_small_examples():
    d = 3.0
    U = D2Sequence.from_dict({(1, 0): 0.5}, d)
    W = convolve(U, U)
    expect = np.zeros((3, 3))
    expect[0, 0], expect[2, 0] = 0.5, 0.25
    np.testing.assert_array_equal(W.coeffs, expect)
    rng = np.random.default_rng(0)
    V = D2Sequence(rng.standard_normal((4, 4)), d)
    np.testing.assert_array_equal(convolve(D2Sequence.delta(d), V).coeffs, V.coeffs)


def test_convolution_matches_z2_oracle_200_pairs():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(200):
        m, n = rng.integers(0, 13, 2)
        u = rng.standard_normal((m + 1, m + 1))
        v = rng.standard_normal((n + 1, n + 1))
        got = convolve(D2Sequence(u, 1.0), D2Sequence(v, 1.0)).coeffs
        ref = z2_oracle(u, v)
        scale = np.max(np.abs(ref)) or 1.0
        worst = max(worst, float(np.max(np.abs(got - ref))) / scale)
    assert worst <= 1e-13


def test_exact_convolution_is_commutative_and_associative():
    rng = np.random.default_rng(1)
    mk = lambda m: D2Sequence(np.array([[Fraction(int(x), 7) for x in row]
                                        for row in rng.integers(-9, 10, (m + 1, m + 1))], dtype=object), 1)
    for _ in range(5):
        A, B, C = mk(3), mk(2), mk(4)
        assert convolve(A, B) == convolve(B, A)
        assert convolve(convolve(A, B), C) == convolve(A, convolve(B, C))


def test_interval_convolution_encloses_exact():
    rng = np.random.default_rng(2)
    u = rng.standard_normal((6, 6))
    v = rng.standard_normal((5, 5))
    W = convolve(D2Sequence(u, 1.0).to_interval(), D2Sequence(v, 1.0))
    ex = _convref.conv_plain(np.array([[Fraction(x) for x in r] for r in u], dtype=object),
                             np.array([[Fraction(x) for x in r] for r in v], dtype=object))
    m = W.as_matrix()
    for i in range(ex.shape[0]):
        for j in range(ex.shape[1]):
            e = m.entry(i, j)
            assert Fraction(e.lo) <= ex[i, j] <= Fraction(e.hi)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_compiled_kernel_matches_pure_python_bitwise():
    code = ("import numpy as np; from shproof.d2seq import D2Sequence, convolve;"
            "r=np.random.default_rng(5); u=r.standard_normal((9,9)); v=r.standard_normal((7,7));"
            "print(convolve(D2Sequence(u,1.),D2Sequence(v,1.).to_interval()).rad.tobytes().hex()[:4000],"
            "convolve(D2Sequence(u,1.),D2Sequence(v,1.)).coeffs.tobytes().hex()[:4000])")
    out = [subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                          env={**os.environ, **env}).stdout for env in ({}, {"SHPROOF_PURE_PYTHON": "1"})]
    assert out[0] and out[0] == out[1]


def test_domain_mismatch():
    with pytest.raises(DomainMismatch):
        convolve(D2Sequence.delta(1.0), D2Sequence.delta(2.0))


def test_projections_partition():
    rng = np.random.default_rng(3)
    U = D2Sequence(rng.standard_normal((11, 11)), 2.0)
    head, tail = U.project(4, "head"), U.project(4, "tail")
    np.testing.assert_array_equal((head.resize(10) + tail).coeffs, U.coeffs)
    np.testing.assert_array_equal(head.project(4).coeffs, head.coeffs)
    mask = np.maximum.outer(np.arange(11), np.arange(11)) > 4
    np.testing.assert_array_equal(tail.coeffs, np.where(mask, U.coeffs, 0.0))
    assert D2Sequence.delta(1.0).project(0) == D2Sequence.delta(1.0)


def test_evaluate_examples_and_symmetry():
    d = 2.5
    U = D2Sequence.from_dict({(1, 0): 0.5}, d)
    assert evaluate(U, (0.0, 0.0)) == pytest.approx(1.0)
    assert evaluate(U, (d, 0.0)) == pytest.approx(-1.0)
    assert evaluate(U, (d + 0.1, 0.0)) == 0.0
    assert evaluate(D2Sequence.delta(d), (0.3, -1.2)) == 1.0
    rng = np.random.default_rng(4)
    V = D2Sequence(rng.standard_normal((6, 6)), d)
    for x in rng.uniform(-d, d, (20, 2)):
        v = evaluate(V, x)
        assert evaluate(V, (-x[0], x[1])) == pytest.approx(v, abs=1e-12)
        assert evaluate(V, (x[0], -x[1])) == pytest.approx(v, abs=1e-12)


def test_parseval_by_exact_quadrature():
    # trapezoid rule on a periodic grid is exact for these trigonometric polynomials
    rng = np.random.default_rng(6)
    d = 1.7
    for _ in range(5):
        U = D2Sequence(rng.standard_normal((7, 7)), d)
        P = 32
        xs = -d + 2 * d * np.arange(P) / P
        f = evaluate_grid(U, xs, xs)
        l2 = np.sqrt(np.sum(f * f) * (2 * d / P) ** 2)
        assert l2 == pytest.approx(np.sqrt(4 * d * d) * norm(U, 2), rel=1e-12)


def test_product_of_functions():
    rng = np.random.default_rng(7)
    d = 3.0
    U = D2Sequence(rng.standard_normal((5, 5)), d)
    V = D2Sequence(rng.standard_normal((4, 4)), d)
    W = convolve(U, V)
    for x in rng.uniform(-d, d, (10, 2)):
        assert evaluate(W, x) == pytest.approx(evaluate(U, x) * evaluate(V, x), rel=1e-10, abs=1e-10)


def test_young_examples():
    dl = D2Sequence.delta(1.0)
    assert young_bound(dl, dl) == 1.0 == norm(convolve(dl, dl), 2)
    U = D2Sequence.from_dict({(1, 0): 0.5}, 1.0)
    assert young_bound(U, U) == pytest.approx(np.sqrt(0.5))
    # alpha_(2,0) = 2, so ||U*U||_2 = sqrt(1/4 + 2/16)
    assert norm(convolve(U, U), 2) == pytest.approx(np.sqrt(3 / 8))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_young_inequality(m, n, seed):
    rng = np.random.default_rng(seed)
    U = D2Sequence(rng.standard_normal((m + 1, m + 1)), 1.0)
    V = D2Sequence(rng.standard_normal((n + 1, n + 1)), 1.0)
    assert norm(convolve(U, V), 2) <= young_bound(U, V) * (1 + 1e-12)


def test_fast_convolution_and_grid_round_trip():
    rng = np.random.default_rng(8)
    U = D2Sequence(rng.standard_normal((9, 9)), 2.0)
    V = D2Sequence(rng.standard_normal((7, 7)), 2.0)
    np.testing.assert_allclose(convolve_fast(U, V).coeffs, convolve(U, V).coeffs, atol=1e-12)
    np.testing.assert_allclose(from_grid(to_grid(U, 32), 2.0, 8).coeffs, U.coeffs, atol=1e-13)


def test_shd2_round_trips(tmp_path):
    rng = np.random.default_rng(9)
    U = D2Sequence(rng.standard_normal((6, 6)) * 10.0 ** rng.integers(-20, 5, (6, 6)), Fraction(70))
    write_shd2(tmp_path / "u.shd2", U, (0.27, -1.6, 1))
    V, head = read_shd2(tmp_path / "u.shd2")
    np.testing.assert_array_equal(V.coeffs, U.coeffs)
    assert head["mu"] == Fraction(27, 100) and head["d"] == 70 and head["size"] == 5
    X = D2Sequence(np.array([[Fraction(int(a), int(b) + 1) for a, b in zip(r, r[::-1])]
                             for r in rng.integers(-50, 50, (4, 4))], dtype=object), Fraction(8))
    write_shd2x(tmp_path / "u.shd2x", X, (Fraction(1, 3), -1, 1))
    Y, _ = read_shd2x(tmp_path / "u.shd2x")
    assert Y == X
    (tmp_path / "bad.shd2").write_text("SHD2 v1\nmu=1\n")
    with pytest.raises(FormatError):
        read_shd2(tmp_path / "bad.shd2")
