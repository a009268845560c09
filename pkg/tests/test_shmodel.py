import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from shproof.d2seq import D2Sequence, convolve, evaluate, norm
from shproof.shmodel import (
    ModelParams,
    apply_L,
    apply_L_inv,
    kappa_localized,
    kappa_periodic,
    l_diagonal,
    l_diagonal_interval,
    nonlinearity_G,
    norm_inv_l_closed_form,
    residual_F,
    symbol_l,
    v0_of,
)

# integral_0^inf r (mu + (1 - r^2)^2)^-2 dr, 30-digit mpmath quadrature
RADIAL_QUADRATURE = {"0.1": 24.687862731366545, "0.27": 5.4732843524517494, "0.32": 4.2196269340801765,
                     "1": 0.71404862254808620, "3": 0.12159996467967880}
# direct evaluation of the periodic Banach-algebra constant, 30 digits
KAPPA_HAT = {("0.27", 70): 5.844838322552434, ("0.32", 70): 4.8523313504976046,
             ("0.27", 40): 7.4618210253946658}

P = (Fraction(27, 100), Fraction(-8, 5), Fraction(1))


def test_model_params_validation():
    p = ModelParams(0.27, -1.6, 1, 70, 90, 130)
    assert p.mu == Fraction(27, 100) and p.nu1 == Fraction(-8, 5)
    with pytest.raises(ValueError):
        ModelParams(0.27, -1.6, 1, 70, 130, 130)
    with pytest.raises(ValueError):
        ModelParams(0, -1.6, 1, 70, 1, 2)


def test_symbol_examples():
    assert symbol_l((0, 0), 0.27) == pytest.approx(1.27)
    assert symbol_l((1 / (2 * math.pi), 0), 0.27) == pytest.approx(0.27)
    assert symbol_l((1, 0), 1) == pytest.approx((1 - 4 * math.pi**2) ** 2 + 1, rel=1e-15)
    assert symbol_l((1, 0), 1) == pytest.approx(1481.5886213, rel=1e-10)


def test_l_diagonal_matches_symbol_and_is_enclosed():
    ld = l_diagonal(6, 0.27, 7.0)
    li = l_diagonal_interval(6, Fraction(27, 100), 7)
    for n1 in range(7):
        for n2 in range(7):
            v = symbol_l((n1 / 14, n2 / 14), 0.27)
            assert ld[n1, n2] == pytest.approx(v, rel=1e-14)
            assert li.lo[n1, n2] <= v * (1 + 1e-15) and v * (1 - 1e-15) <= li.hi[n1, n2]


def test_apply_L_examples():
    dl = D2Sequence.delta(5.0)
    assert apply_L(dl, 0.27).coeffs[0, 0] == pytest.approx(1.27)
    rng = np.random.default_rng(0)
    U = D2Sequence(rng.standard_normal((9, 9)), 5.0)
    np.testing.assert_allclose(apply_L_inv(apply_L(U, 0.27), 0.27).coeffs, U.coeffs, rtol=1e-14)
    assert norm(apply_L_inv(U, 0.27), 2) <= norm(U, 2) / 0.27
    # q >= d uses l(n/(2q))
    np.testing.assert_allclose(apply_L(U, 0.27, 9.0).coeffs, U.coeffs * l_diagonal(8, 0.27, 9.0))


def test_nonlinearity_examples():
    z = D2Sequence.zeros(3, 2.0)
    assert not np.any(residual_F(z, P).coeffs)
    dl = D2Sequence.delta(2.0)
    assert nonlinearity_G(dl, P).coeffs[0, 0] == pytest.approx(-0.6)
    assert residual_F(dl, P).coeffs[0, 0] == pytest.approx(0.67)
    ex = D2Sequence.delta(Fraction(2), kind="exact")
    # l involves pi, so exact input yields an interval enclosure
    F = residual_F(ex, P)
    assert F.kind == "interval" and F.entry(0, 0).contains(Fraction(67, 100))


def test_residual_matches_collocation():
    rng = np.random.default_rng(1)
    d = 4.0
    U = D2Sequence(rng.standard_normal((6, 6)) * 0.3, d)
    F = residual_F(U, P)
    assert F.size == 15
    LU = apply_L(U, 0.27)
    for x in rng.uniform(-d, d, (10, 2)):
        u = evaluate(U, x)
        ref = evaluate(LU, x) - 1.6 * u * u + u**3
        assert evaluate(F, x) == pytest.approx(ref, rel=1e-10, abs=1e-10)
    np.testing.assert_allclose(residual_F(U, P, fast=True).coeffs, F.coeffs, atol=1e-12)


def test_v0():
    rng = np.random.default_rng(2)
    U = D2Sequence(rng.standard_normal((5, 5)), 3.0)
    V = v0_of(U, P)
    ref = U.resize(8).scale(-3.2) + convolve(U, U).scale(3.0)
    np.testing.assert_allclose(V.coeffs, ref.coeffs, atol=1e-13)


@pytest.mark.parametrize("mu", sorted(RADIAL_QUADRATURE))
def test_closed_form_norm_matches_quadrature(mu):
    v = norm_inv_l_closed_form(mu)
    ref = RADIAL_QUADRATURE[mu]
    assert abs(v.mid - ref) <= 1e-9 * ref
    assert v.hi - v.lo <= 1e-13 * ref


def test_frozen_quadrature_values():
    # re-derive one frozen value so the table cannot drift
    m = mpmath.mpf(1)
    q = mpmath.quad(lambda r: r / ((1 - r * r) ** 2 + m) ** 2, [0, 1, mpmath.inf])
    assert float(q) == pytest.approx(RADIAL_QUADRATURE["1"], rel=1e-12)
    assert RADIAL_QUADRATURE["1"] == pytest.approx((2 + 3 * math.pi) / 16, rel=1e-15)


def test_closed_form_large_mu_envelope():
    for mu in (10, 100, 1000):
        env = (2 * math.sqrt(mu) + (1 + mu) * 2 * math.pi) / (8 * mu**1.5 * (1 + mu))
        assert norm_inv_l_closed_form(mu).hi <= env


@pytest.mark.parametrize("key", sorted(KAPPA_HAT))
def test_kappa_periodic_values(key):
    mu, d = key
    k = kappa_periodic(mu, d)
    assert k.lo <= KAPPA_HAT[key] <= k.hi or abs(k.mid - KAPPA_HAT[key]) < 1e-14
    assert k.lo >= kappa_localized(mu).hi


def test_kappa_localized():
    assert kappa_localized("0.27").mid == pytest.approx(2.3395, abs=1e-4)


def _riemann_sum(mu: float, q: float, M: int) -> float:
    n = np.arange(M + 1, dtype=float)
    w = np.where(n == 0, 1.0, 2.0)
    s = 0.0
    for i0 in range(0, M + 1, 512):
        r = n[i0:i0 + 512, None] ** 2 + n[None, :] ** 2
        l = (1 - (math.pi / q) ** 2 * r) ** 2 + mu
        s += float(np.sum(w[i0:i0 + 512, None] * w[None, :] / (l * l)))
    return s / (4 * q * q)


def test_riemann_sums_below_kappa_hat_squared():
    mu, d = 0.27, 70.0
    k2 = kappa_periodic("0.27", 70).lo ** 2
    for q in np.linspace(d, 10 * d, 20):
        M = int(8 * q)
        # lattice points with max-norm > M lie outside |xi| >= M/(2q) = 4
        r = (M - 1) / (2 * q)
        tail = 1 / (12 * math.pi * ((2 * math.pi * r) ** 2 - 1) ** 3)
        assert _riemann_sum(mu, q, M) + tail <= k2
