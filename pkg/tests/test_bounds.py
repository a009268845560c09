import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate

from shproof.bounds import (
    BoundSet,
    appendix_constants,
    appendix_sequences,
    assemble_Z1,
    compute_bounds,
    compute_Y0,
    compute_Z1_periodic,
    compute_Z2,
    compute_Zu,
    conv_matrix,
    conv_matrix_columnwise,
    e_sequences,
    exp_overlap_integrals,
    l_tail_min,
)
from shproof.d2seq import D2Sequence, alpha, convolve
from shproof.interval import IntervalScalar
from shproof.shmodel import ModelParams, l_diagonal, residual_F, v0_of

PATTERN_AD = [(0.27, 70.0), (0.32, 70.0), (0.27, 70.0)]


def a_of(mu):
    return math.sqrt(-1 + math.sqrt(1 + mu)) / 2


def random_ad(n, seed=3):
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0.1, 3.0)), float(rng.uniform(2.0, 80.0))) for _ in range(n)]


# ---------------------------------------------------------------------------
# overlap integrals and appendix constants
# ---------------------------------------------------------------------------

def overlap_oracle(n, x, z, a, d, which):
    f = lambda y: mpmath.exp(-a * abs(y - x)) * mpmath.exp(-a * abs(y - z - 2 * d * n))
    kinks = sorted({x, z + 2 * d * n})
    kind = which[1]
    if kind == "1":
        lo, hi = kinks[0] - 60 / a, kinks[-1] + 60 / a
    elif kind == "2" or n == 0:
        lo, hi = -d, d
    else:
        lo, hi = 2 * d * n - d, 2 * d * n + d
    pts = [lo] + [k for k in kinks if lo < k < hi] + [hi]
    with mpmath.workdps(30):
        return float(mpmath.quad(f, pts))


def test_overlap_examples():
    assert exp_overlap_integrals(0, 0.3, 0.3, 0.7, 2.0, "I1") == pytest.approx(1 / 0.7)
    ref = 1.5 * math.exp(-2) - math.exp(-4) / 2
    assert exp_overlap_integrals(1, 0.0, 0.0, 1.0, 1.0, "I2") == pytest.approx(ref, rel=1e-15)
    for w in ("1", "2", "3"):
        assert exp_overlap_integrals(2, 0.1, -0.4, 0.5, 1.5, "I" + w) == \
            exp_overlap_integrals(2, 0.1, -0.4, 0.5, 1.5, "J" + w)


def test_overlap_integrals_match_quadrature():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(60):
        a, d = float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.5, 5.0))
        n = int(rng.integers(0, 4))
        x, z = (float(v) for v in rng.uniform(-d, d, 2))
        for which in ("I1", "I2", "I3"):
            got = exp_overlap_integrals(n, x, z, a, d, which)
            ref = overlap_oracle(n, x, z, a, d, which)
            worst = max(worst, abs(got - ref) / abs(ref))
    assert worst <= 1e-10


@pytest.mark.parametrize("a,d", [(a_of(mu), d) for mu, d in PATTERN_AD] + random_ad(7))
def test_appendix_domination(a, d):
    C1, C12, C2 = appendix_constants(a, d)
    for c in (C1, C12, C2):
        assert 0 < c.lo and math.isfinite(c.hi)
    p, q, s = appendix_sequences(a, d, 60)
    f = math.exp(-4 * a * d)
    assert p.sum() <= C1.lo * f
    assert q.sum() <= C12.lo * f
    assert s.sum() <= C2.lo * f


# ---------------------------------------------------------------------------
# E-sequences
# ---------------------------------------------------------------------------

def test_e_sequences_structure_and_values():
    a, d = 0.17814, 70.0
    E1, E12, E2 = e_sequences(a, d, 6)
    assert not np.any(E1.coeffs[:, 1:]) and np.array_equal(E2.coeffs, E1.coeffs.T)
    np.testing.assert_allclose(E12.coeffs, np.outer(E1.coeffs[:, 0], E1.coeffs[:, 0]), rtol=1e-14)
    ref = math.sinh(2 * a * d) / (2 * a * d)
    assert E1.coeffs[0, 0] == pytest.approx(ref, rel=1e-8)
    for n in range(4):
        q = integrate.quad(lambda x: math.cosh(2 * a * x) * math.cos(math.pi * n * x / d), -d, d,
                           limit=400, epsabs=0, epsrel=1e-12)[0] / (2 * d)
        assert E1.coeffs[n, 0] == pytest.approx(q, rel=1e-8)
    # a -> 0: the cosh factor tends to the constant 1
    E1s, _, _ = e_sequences(1e-9, 3.0, 2)
    assert E1s.coeffs[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_e_sequence_parseval():
    a, d = 0.3, 2.0
    rng = np.random.default_rng(1)
    V = D2Sequence(rng.standard_normal((3, 3)), d)
    E1, _, _ = e_sequences(a, d, 4)
    E1 = D2Sequence(E1.coeffs, d, E1.rad)
    ip = V.to_interval().inner(convolve(V.to_interval(), E1))
    n = np.arange(3)
    w = alpha(2) * V.coeffs

    def v(x1, x2):
        return np.cos(np.pi * n * x1 / d) @ w @ np.cos(np.pi * n * x2 / d)

    ref = integrate.dblquad(lambda y, x: v(x, y) ** 2 * math.cosh(2 * a * x), -d, d, -d, d,
                            epsabs=0, epsrel=1e-11)[0]
    assert ip.mid * 4 * d * d == pytest.approx(ref, rel=1e-9)


# ---------------------------------------------------------------------------
# convolution operator matrices
# ---------------------------------------------------------------------------

def test_conv_matrix_matches_columnwise_builder():
    rng = np.random.default_rng(2)
    V = D2Sequence(rng.standard_normal((5, 5)), 3.0)
    A = conv_matrix(V, 6, 3)
    B = conv_matrix_columnwise(V, 6, 3)
    assert np.max(np.abs(A.mid - B.mid)) <= 1e-14
    assert np.all(A.lo <= B.hi) and np.all(B.lo <= A.hi)
    S = conv_matrix(V, 4, 4)
    np.testing.assert_allclose(S.mid, S.mid.T, atol=1e-14)


def _scaled_dense(V: D2Sequence, rows: int, cols: int) -> np.ndarray:
    """Float scaled convolution block built from the Z^2-extension formula."""
    M = np.zeros(((rows + 1) ** 2, (cols + 1) ** 2))
    sa_r = np.sqrt(alpha(rows)).ravel()
    sa_c = np.sqrt(alpha(cols)).ravel()
    for j in range((cols + 1) ** 2):
        e = np.zeros((cols + 1, cols + 1))
        e.flat[j] = 1.0
        col = convolve(V, D2Sequence(e, V.d)).resize(rows).coeffs.ravel()
        M[:, j] = sa_r * col / sa_c[j]
    return M


# ---------------------------------------------------------------------------
# the bounds on small problems, against dense float oracles
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(4)
    p = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(6), 3, 5)
    U0 = D2Sequence(rng.standard_normal((6, 6)) * np.exp(-np.add.outer(np.arange(6), np.arange(6))), 6.0)
    V0 = v0_of(U0, p)
    N = p.N
    A = _scaled_dense(V0.resize(2 * N), N, N) / l_diagonal(N, 0.27, 6.0).ravel()[None, :]
    B = np.linalg.inv(np.eye(A.shape[0]) + A)
    return p, U0, B


def test_Y0_against_float_oracle(small):
    p, U0, B = small
    F = residual_F(U0, p)
    f = F.coeffs
    N = p.N
    head = (np.sqrt(alpha(N)) * f[:N + 1, :N + 1]).ravel()
    tail = alpha(F.size) * f * f
    tail[:N + 1, :N + 1] = 0
    ref = 12.0 * math.sqrt(np.sum((B @ head) ** 2) + tail.sum())
    y = compute_Y0(U0, B, p)
    assert y.lo <= ref * (1 + 1e-12) and ref * (1 - 1e-12) <= y.hi
    assert y.hi <= ref * (1 + 1e-8)
    z = compute_Y0(D2Sequence.zeros(5, 6.0), B, p)
    assert z.hi <= 1e-100


def test_Z1_against_dense_oracle(small):
    p, U0, B = small
    N = p.N
    V0N = v0_of(U0, p).resize(2 * N)
    K = _scaled_dense(V0N, 3 * N, 3 * N)
    A = K / l_diagonal(3 * N, 0.27, 6.0).ravel()[None, :]
    idx = np.arange(3 * N + 1)
    P = ((idx[:, None] <= N) & (idx[None, :] <= N)).ravel()
    T = ~P
    nP = P.sum()
    X = np.hstack([np.eye(nP) - B @ (np.eye(nP) + A[np.ix_(P, P)]), -B @ A[np.ix_(P, T)]])
    z1n = math.sqrt(np.linalg.norm(X, 2) ** 2 + np.linalg.norm(A[np.ix_(T, P)], 2) ** 2)
    Z1N, Z1 = compute_Z1_periodic(V0N, B, p)
    assert z1n <= Z1N.hi <= z1n * (1 + 1e-6) + 1e-12
    lmin = l_tail_min(N, p.mu, p.d).lo
    vl1 = np.sum(alpha(2 * N) * np.abs(V0N.coeffs))
    assert Z1.hi >= math.sqrt(z1n**2 + (vl1 / lmin) ** 2)


def test_Z1_trivial():
    p = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(6), 3, 5)
    Z1N, Z1 = compute_Z1_periodic(D2Sequence.zeros(6, 6.0), np.eye(16), p)
    assert Z1N.hi <= 1e-12 and Z1.hi <= 1e-12


def test_l_tail_min():
    N, mu, d = 3, 0.27, 6.0
    big = l_diagonal(3 * N, mu, d)
    idx = np.arange(3 * N + 1)
    mask = np.maximum.outer(idx, idx) > N
    assert l_tail_min(N, mu, d).lo <= big[mask].min()


def test_Z2_against_dense_oracle(small):
    p, U0, B = small
    N = p.N
    V = U0.scale(6.0) + D2Sequence.delta(6.0, 5).scale(-3.2)
    K = _scaled_dense(V, N, N + V.size)
    ref_core = max(3.2, math.sqrt(np.linalg.norm(B @ K, 2) ** 2 + np.sum(alpha(5) * np.abs(V.coeffs)) ** 2))
    kappa = IntervalScalar.point(2.0)
    s, c = compute_Z2(U0, B, kappa, p)
    normB = max(1.0, np.linalg.norm(B, 2))
    assert c.hi >= ref_core * 2 / 0.27 and c.hi <= ref_core * 2 / 0.27 * (1 + 1e-6)
    assert s.hi >= 3 * 4 / 0.27 * normB
    sh, ch = compute_Z2(U0, B, kappa, p, periodic=True)
    assert ch.hi >= 2 * ref_core and sh.hi >= 12 * normB


def test_Z2_zero_pattern_branch():
    p = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(6), 3, 5)
    s, c = compute_Z2(D2Sequence.zeros(5, 6.0), np.eye(16), 1.0, p, periodic=True)
    assert c.contains(Fraction(16, 5)) and s.contains(3)


def test_Zu_zero_and_monotone_in_d():
    p = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(6), 3, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        zu = compute_Zu(D2Sequence.zeros(6, 6.0), 2.66, a_of(0.27), p)
    assert all(z.hi <= 1e-100 for z in zu)
    # a fixed Gaussian bump seen on two domain sizes
    out = []
    for d in (10, 20):
        q = ModelParams(Fraction(27, 100), Fraction(-8, 5), Fraction(1), Fraction(d), 3, 5)
        m = 4 * d
        k = np.pi * np.arange(m + 1) / d
        V = np.pi / (4 * d * d) * np.exp(-np.add.outer(k * k, k * k) / 4)
        out.append(compute_Zu(D2Sequence(V, float(d)), 2.66, a_of(0.27), q)[2])
    assert out[1].hi < out[0].lo
    assert out[0].subset(IntervalScalar(0.0, math.inf))


def test_assemble_Z1():
    z1 = IntervalScalar(0.1, 0.1)
    zero = IntervalScalar(0.0, 0.0)
    cal, hat = assemble_Z1(z1, zero, IntervalScalar(0.0, 5.0), zero, Fraction(27, 100))
    assert cal == z1 and hat == z1
    cal, hat = assemble_Z1(z1, IntervalScalar(0.01, 0.01), IntervalScalar(0.0, 5.0),
                           IntervalScalar(0.0027, 0.0027), Fraction(27, 100))
    assert cal.contains(Fraction(1, 10) + 5 * (Fraction(1, 100) + Fraction(1, 100)))
    assert hat.contains(Fraction(1, 10) + 5 * (Fraction(2, 100) + Fraction(1, 100)))


def test_compute_bounds_checkpoint_resume(small):
    p, U0, B = small
    seen = {}
    a = a_of(0.27)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        full = compute_bounds(U0, B, p, 2.66, a, on_bound=lambda k, v: seen.setdefault(k, v))
        assert set(seen) == {"normB", "v_tail", "kappa", "kappa_hat", "Y0", "Z2_core", "Z1_pair", "Zu_triple"}
        again = []
        resumed = compute_bounds(U0, B, p, 2.66, a, known=seen, on_bound=lambda k, v: again.append(k))
    assert again == [] and resumed == full
    assert BoundSet.from_record(full.as_record()) == full
    s = full.summary()
    assert full.Zu.hi ** 2 >= full.Zu1.lo ** 2 + full.Zu2.lo ** 2
    assert s["Z1hat"] >= s["calZ1"] >= s["Z1"]
