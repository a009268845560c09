"""Certified decay constant of the fundamental solution.

With ``b = |b| e^{i theta}``, ``b^2 = -1 - i sqrt(mu)``, the inverse Fourier
transform of ``1/l`` is ``f0(x) = (K0(b|x|) - K0(conj(b)|x|)) / (2 i sqrt(mu))``
and ``|f0(x)| <= C0 exp(-a |x|_1)`` with ``C0 = sup_r g(r)``,

    g(r) = e^{sqrt2 a r} (1/sqrt(mu)) sum_k (r|b|)^{2k} / (4^k k!^2)
           [(psi(k+1) - ln(r|b|/2)) sin(2k theta) - theta cos(2k theta)].

The supremum is attained on ``[0, beta]``.  ``certify_C0`` proves
``|g| <= C0hat`` there: a mean-value bound on ``[0, eps]`` and interval
evaluation of the truncated series (plus a uniform tail) on a grid of
``[eps, beta]`` with adaptive bisection.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CertificationFailed, TruncationPreconditionViolated
from .interval import EULER, PI, IntervalArray, IntervalScalar, as_interval

__all__ = [
    "DecayConstants",
    "C0Result",
    "decay_constants",
    "default_order",
    "g_series",
    "g_float",
    "certify_C0",
]


def _exact(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class DecayConstants:
    mu: Fraction
    a: IntervalScalar
    b_abs: IntervalScalar
    theta: IntervalScalar
    beta: IntervalScalar
    f0_at_0: IntervalScalar  # -theta / sqrt(mu), a lower bound for C0

    @property
    def sqrt_mu(self) -> IntervalScalar:
        return as_interval(self.mu).sqrt()

    def epsilon(self, delta) -> float:
        """Largest float below ``min{1/|b|, sqrt(mu) delta / ((e^{1/4}-1)|b|(4+e^{-1}+|theta|))}``."""
        q = IntervalScalar.exact(Fraction(1, 4)).exp() - 1
        den = q * self.b_abs * (4 + IntervalScalar(-1.0, -1.0).exp() + abs(self.theta))
        e2 = self.sqrt_mu * as_interval(_exact(delta)) / den
        e1 = 1 / self.b_abs
        return min(e1.lo, e2.lo)


def decay_constants(mu) -> DecayConstants:
    """Enclosures of ``a``, ``|b|``, ``theta``, ``beta`` and ``f0(0)``."""
    m = _exact(mu)
    if m <= 0:
        raise ValueError("mu must be positive")
    mi = as_interval(m)
    s1 = (1 + mi).sqrt()
    four_a2 = s1 - 1
    a = four_a2.sqrt() / 2
    b_abs = s1.sqrt()
    theta = -(mi.sqrt() / four_a2).atan()
    beta = PI / (2 * IntervalScalar.exact(2).sqrt() * a * theta.sqr())
    f00 = -theta / mi.sqrt()
    return DecayConstants(m, a, b_abs, theta, beta, f00)


def default_order(consts: DecayConstants, slack: int = 10) -> int:
    """Least K with ``(beta|b|)^{2(K+1)}/K! <= 1`` (certified), plus ``slack``."""
    x = (consts.beta * consts.b_abs).sqr()
    K = 0
    while not _order_ok(x, K):
        K += 1
        if K > 10000:
            raise TruncationPreconditionViolated("no admissible truncation order")
    return K + slack


def _order_ok(x: IntervalScalar, K: int) -> bool:
    # (beta|b|)^{2(K+1)} / K! <= 1, in log form to avoid overflow
    return (x.log() * (K + 1) - _log_factorial(K)).hi <= 0.0


def _log_factorial(K: int) -> IntervalScalar:
    s = IntervalScalar(0.0, 0.0)
    for j in range(2, K + 1):
        s = s + IntervalScalar.exact(j).log()
    return s


@dataclass(frozen=True)
class _SeriesData:
    K: int
    coef_p: list  # c_k (psi(k+1) sin 2k theta - theta cos 2k theta)
    coef_q: list  # c_k sin 2k theta
    tail: IntervalScalar  # (4 + Mlog + |theta|) / (3 sqrt(mu) 4^K (K+1)!)
    eps: float
    beta_hi: float


def _series_data(consts: DecayConstants, K: int, eps: float) -> _SeriesData:
    x = (consts.beta * consts.b_abs).sqr()
    if not _order_ok(x, K):
        raise TruncationPreconditionViolated(f"(beta|b|)^(2(K+1))/K! <= 1 fails for K={K}")
    th = consts.theta
    coef_p, coef_q = [], []
    harmonic = Fraction(0)
    for k in range(K + 1):
        if k:
            harmonic += Fraction(1, k)
        ck = IntervalScalar.exact(Fraction(1, 4**k * math.factorial(k) ** 2))
        psi = IntervalScalar.exact(harmonic) - EULER
        s2k = (th * (2 * k)).sin()
        c2k = (th * (2 * k)).cos()
        coef_p.append(ck * (psi * s2k - th * c2k))
        coef_q.append(ck * s2k)
    beta_hi = consts.beta.hi
    half_b = consts.b_abs / 2
    l_eps = (IntervalScalar.point(eps) * half_b).log()
    l_beta = (IntervalScalar.point(beta_hi) * half_b).log()
    mlog = max(l_eps.mag, l_beta.mag)
    den = 3 * consts.sqrt_mu * IntervalScalar.exact(4**K * math.factorial(K + 1))
    tail = (4 + IntervalScalar(mlog, mlog) + abs(th)) / den
    return _SeriesData(K, coef_p, coef_q, tail, eps, beta_hi)


def _horner(coefs: list, x: IntervalArray) -> IntervalArray:
    acc = IntervalArray.from_scalar(coefs[-1], x.shape)
    for c in reversed(coefs[:-1]):
        acc = acc * x + c
    return acc


def _g_enclosure(r: IntervalArray, consts: DecayConstants, sd: _SeriesData) -> IntervalArray:
    """Enclosure of ``g`` over each interval of ``r`` (series plus tail)."""
    x = (r * consts.b_abs).sqr()
    L = (r * (consts.b_abs / 2)).log()
    series = _horner(sd.coef_p, x) - L * _horner(sd.coef_q, x)
    s2a = IntervalScalar.exact(2).sqrt() * consts.a
    ex = (r * s2a).exp()
    inv_smu = 1 / consts.sqrt_mu
    t = sd.tail
    return ex * (series * inv_smu + IntervalArray(-t.hi, t.hi))


def g_series(r, K: int, consts: DecayConstants, eps: float | None = None) -> IntervalScalar:
    """Enclosure of ``g(r)`` for an interval ``r`` inside ``[eps, beta]``."""
    r = as_interval(r)
    eps = consts.epsilon(Fraction(1, 100)) if eps is None else eps
    if r.lo < eps or r.hi > consts.beta.hi:
        raise TruncationPreconditionViolated(f"r={r} outside [{eps}, {consts.beta.hi}]")
    sd = _series_data(consts, K, eps)
    out = _g_enclosure(IntervalArray(r.lo, r.hi), consts, sd)
    return out.scalar()


def g_float(r: np.ndarray, consts: DecayConstants, K: int) -> np.ndarray:
    """Floating evaluation of the truncated series (non-rigorous)."""
    r = np.asarray(r, dtype=float)
    a, b, th, mu = consts.a.mid, consts.b_abs.mid, consts.theta.mid, float(consts.mu)
    x = (r * b) ** 2
    with np.errstate(divide="ignore"):
        L = np.log(r * b / 2)
    out = np.zeros_like(r)
    xk = np.ones_like(r)
    psi = -0.5772156649015329
    for k in range(K + 1):
        if k:
            psi += 1.0 / k
            xk = xk * x / (4.0 * k * k)
        s, c = math.sin(2 * k * th), math.cos(2 * k * th)
        term = xk * (psi * s - th * c)
        if k:
            term = term - xk * L * s
        out += term
    return np.exp(math.sqrt(2) * a * r) * out / math.sqrt(mu)


@dataclass
class C0Result:
    mu: Fraction
    delta: Fraction
    grid: int
    K: int
    C0hat: float
    C0num: float
    lower: IntervalScalar
    epsilon: float
    beta: IntervalScalar
    min_margin: float
    intervals_checked: int
    max_depth: int
    seconds: float = field(default=0.0, compare=False)

    def as_record(self) -> dict:
        return {
            "mu": str(self.mu),
            "delta": str(self.delta),
            "grid": self.grid,
            "K": self.K,
            "C0hat": self.C0hat.hex(),
            "C0hat_decimal": repr(self.C0hat),
            "C0num": repr(self.C0num),
            "lower_bound": self.lower.hex(),
            "epsilon": self.epsilon.hex(),
            "beta": self.beta.hex(),
            "min_margin": repr(self.min_margin),
            "intervals_checked": self.intervals_checked,
            "max_depth": self.max_depth,
        }


def certify_C0(mu, delta=Fraction(1, 100), grid: int = 4096, depth: int = 12,
               K: int | None = None, samples: int = 20001) -> C0Result:
    """Certify ``C0 <= C0hat = delta + C0num``.

    ``C0num`` is the maximum of a dense float sampling of ``g`` on ``[0, beta]``.
    Raises :class:`CertificationFailed` if some piece cannot be verified within
    ``depth`` bisections.
    """
    t0 = time.perf_counter()
    delta = _exact(delta)
    if delta <= 0 or grid < 1:
        raise ValueError("need delta > 0 and grid >= 1")
    consts = decay_constants(mu)
    K = default_order(consts) if K is None else K
    eps = consts.epsilon(delta)
    beta_hi = consts.beta.hi

    rs = np.linspace(0.0, beta_hi, samples)
    vals = np.abs(g_float(rs[1:], consts, K))
    c0num = max(float(np.max(vals)), consts.f0_at_0.hi)
    c0hat_iv = IntervalScalar.point(c0num) + as_interval(delta)
    c0hat = c0hat_iv.hi
    if c0hat < consts.f0_at_0.hi:
        raise AssertionError("C0hat below the proven lower bound -theta/sqrt(mu)")

    # [0, eps]: |g| <= e^{sqrt2 a eps} (delta - theta/sqrt(mu))
    s2a = IntervalScalar.exact(2).sqrt() * consts.a
    near = (s2a * eps).exp() * (as_interval(delta) + consts.f0_at_0)
    if not near.hi <= c0hat:
        raise CertificationFailed("near-zero bound exceeds C0hat", (0.0, eps), c0hat - near.hi)

    sd = _series_data(consts, K, eps)
    edges = np.linspace(eps, beta_hi, grid + 1)
    edges[0], edges[-1] = eps, beta_hi
    lo, hi = edges[:-1], edges[1:]
    checked = 0
    min_margin = math.inf
    level = 0
    while lo.size:
        enc = _g_enclosure(IntervalArray(lo, hi), consts, sd)
        sup = enc.mag
        checked += lo.size
        ok = sup <= c0hat
        if np.any(ok):
            min_margin = min(min_margin, float(np.min(c0hat - sup[ok])))
        if np.all(ok):
            break
        if level == depth:
            worst = int(np.argmax(sup - c0hat))
            raise CertificationFailed(
                f"|g| not verified <= {c0hat!r} on [{lo[worst]!r}, {hi[worst]!r}] after {depth} bisections",
                (float(lo[worst]), float(hi[worst])), float(c0hat - sup[worst]))
        flo, fhi = lo[~ok], hi[~ok]
        mid = flo + 0.5 * (fhi - flo)
        lo = np.concatenate([flo, mid])
        hi = np.concatenate([mid, fhi])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        level += 1

    min_margin = min(min_margin, c0hat - near.hi)
    return C0Result(delta=delta, mu=consts.mu, grid=grid, K=K, C0hat=c0hat, C0num=c0num,
                    lower=consts.f0_at_0, epsilon=eps, beta=consts.beta, min_margin=min_margin,
                    intervals_checked=checked, max_depth=level,
                    seconds=time.perf_counter() - t0)
