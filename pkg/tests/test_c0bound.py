import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from shproof.c0bound import certify_C0, decay_constants, default_order, g_float, g_series
from shproof.errors import CertificationFailed, TruncationPreconditionViolated
from shproof.interval import IntervalScalar


def g_oracle(mu: str, r: float, dps: int = 60):
    """e^{sqrt2 a r} f0(r) through the K0 difference, evaluated with mpmath."""
    with mpmath.workdps(dps):
        m = mpmath.mpf(mu)
        a = mpmath.sqrt(-1 + mpmath.sqrt(1 + m)) / 2
        b = mpmath.sqrt(2) * a - 1j * mpmath.sqrt(m) / (2 * mpmath.sqrt(2) * a)
        rr = mpmath.mpf(r)
        v = (mpmath.besselk(0, b * rr) - mpmath.besselk(0, mpmath.conj(b) * rr)) / (2j * mpmath.sqrt(m))
        return mpmath.re(mpmath.exp(mpmath.sqrt(2) * a * rr) * v)


def test_decay_constants_values():
    c = decay_constants("0.27")
    assert c.a.mid == pytest.approx(0.17814, abs=1e-5)
    assert c.theta.mid == pytest.approx(-1.3310, abs=2e-4)
    assert c.f0_at_0.mid == pytest.approx(2.5619, abs=1e-4)
    assert IntervalScalar(0.5, 0.5).subset(decay_constants(3).a)
    b2 = c.b_abs.sqr()
    assert b2.contains(math.sqrt(1.27)) or abs(b2.mid - math.sqrt(1.27)) < 1e-15
    tan = math.tan(c.theta.mid)
    assert tan == pytest.approx(-math.sqrt(0.27) / (4 * c.a.mid ** 2), rel=1e-12)
    assert c.epsilon(Fraction(1, 100)) <= 1 / c.b_abs.hi


@pytest.mark.parametrize("mu", ["0.27", "0.32"])
def test_g_series_encloses_bessel_oracle(mu):
    c = decay_constants(mu)
    K = default_order(c)
    for frac in (0.1, 0.25, 0.5, 0.9):
        r = frac * c.beta.lo
        enc = g_series(IntervalScalar.point(r), K, c)
        assert enc.contains(Fraction(str(mpmath.nstr(g_oracle(mu, r), 40))))
        assert float(g_float(np.array([r]), c, K)[0]) == pytest.approx(float(g_oracle(mu, r)), rel=1e-11)


def test_g_series_orders_are_consistent():
    c = decay_constants("0.27")
    K = default_order(c)
    r = IntervalScalar.point(c.beta.mid / 2)
    e1, e2 = g_series(r, K, c), g_series(r, K + 5, c)
    assert e1.lo <= e2.hi and e2.lo <= e1.hi
    assert e2.width <= e1.width
    with pytest.raises(TruncationPreconditionViolated):
        g_series(IntervalScalar.point(2 * c.beta.hi), K, c)


def test_certify_C0_properties():
    res = certify_C0("0.27")
    c = decay_constants("0.27")
    assert res.C0hat >= c.f0_at_0.hi
    rs = np.linspace(1e-9, c.beta.hi, 10_000)
    assert np.max(np.abs(g_float(rs, c, res.K))) <= res.C0hat + 1e-12
    # past beta the K0 asymptotic envelope stays below -theta/sqrt(mu)
    s2a = math.sqrt(2) * c.a.mid
    for r in np.linspace(c.beta.hi, 3 * c.beta.hi, 50):
        assert math.sqrt(math.pi / (2 * s2a * r)) / math.sqrt(0.27) <= c.f0_at_0.lo
    # frozen: C0num is the sampled maximum, C0hat = C0num + delta
    assert res.C0num == pytest.approx(2.6471038, abs=1e-6)
    assert res.C0hat == pytest.approx(res.C0num + 0.01, abs=1e-12)


def test_certify_C0_record_is_deterministic():
    a, b = certify_C0("0.32"), certify_C0("0.32")
    assert a.as_record() == b.as_record()


def test_tiny_delta_fails():
    with pytest.raises(CertificationFailed) as exc:
        certify_C0("0.27", delta=Fraction(1, 10**30))
    assert exc.value.margin < 0
