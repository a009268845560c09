"""Swift-Hohenberg operators on D2 sequences.

The stationary problem is ``L u + nu1 u^2 + nu2 u^3 = 0`` with Fourier symbol
``l(xi) = (1 - |2 pi xi|^2)^2 + mu``.  On the square of half-width ``q`` the
index ``n`` has frequency ``n/(2q)``, so ``|2 pi xi|^2 = (pi/q)^2 (n1^2 + n2^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .d2seq import D2Sequence, convolve, convolve_fast
from .interval import PI, IntervalArray, IntervalMatrix, IntervalScalar, as_interval

__all__ = [
    "ModelParams",
    "symbol_l",
    "l_diagonal",
    "l_diagonal_interval",
    "apply_L",
    "apply_L_inv",
    "nonlinearity_G",
    "residual_F",
    "v0_of",
    "norm_inv_l_closed_form",
    "kappa_localized",
    "kappa_periodic",
]


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal reading of the shortest repr, so 0.27 means 27/100
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class ModelParams:
    """Parameters ``(mu, nu1, nu2, d, N, N0)``, stored as exact rationals."""

    mu: Fraction
    nu1: Fraction
    nu2: Fraction
    d: Fraction
    N: int
    N0: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        for name in ("mu", "nu1", "nu2", "d"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.d <= 0:
            raise ValueError("d must be positive")
        if not 0 <= self.N < self.N0:
            raise ValueError("need 0 <= N < N0")

    def iv(self, name: str) -> IntervalScalar:
        """Interval enclosure of a rational parameter."""
        return IntervalScalar.exact(getattr(self, name))

    @property
    def area(self) -> IntervalScalar:
        """|Omega_0| = 4 d^2."""
        return IntervalScalar.exact(4 * self.d * self.d)

    def as_dict(self) -> dict:
        return {"mu": str(self.mu), "nu1": str(self.nu1), "nu2": str(self.nu2),
                "d": str(self.d), "N": self.N, "N0": self.N0}


def symbol_l(xi, mu) -> float:
    """``l(xi) = (1 - |2 pi xi|^2)^2 + mu`` in floating point."""
    r2 = (2 * math.pi) ** 2 * (float(xi[0]) ** 2 + float(xi[1]) ** 2)
    return (1.0 - r2) ** 2 + float(mu)


def _index_sq(size: int) -> np.ndarray:
    n = np.arange(size + 1, dtype=float)
    return n[:, None] ** 2 + n[None, :] ** 2


def l_diagonal(size: int, mu, q) -> np.ndarray:
    """Float values ``l(n/(2q))`` on {0..size}^2."""
    t = (math.pi / float(q)) ** 2 * _index_sq(size)
    return (1.0 - t) ** 2 + float(mu)


def l_diagonal_interval(size: int, mu, q) -> IntervalArray:
    """Enclosures of ``l(n/(2q))`` on {0..size}^2."""
    pq = (PI / as_interval(_exact(q))).sqr()
    t = IntervalArray(_index_sq(size)) * pq
    return (1.0 - t).sqr() + as_interval(_exact(mu))


def apply_L(U: D2Sequence, mu, q=None) -> D2Sequence:
    q = U.d if q is None else q
    if U.kind == "float":
        return D2Sequence(U.coeffs * l_diagonal(U.size, mu, q), U.d)
    ld = l_diagonal_interval(U.size, mu, q)
    m = U.as_matrix().mul_elementwise(ld.lo, ld.hi)
    return D2Sequence(m.mid, U.d, m.radius())


def apply_L_inv(U: D2Sequence, mu, q=None) -> D2Sequence:
    q = U.d if q is None else q
    if U.kind == "float":
        return D2Sequence(U.coeffs / l_diagonal(U.size, mu, q), U.d)
    inv = 1.0 / l_diagonal_interval(U.size, mu, q)
    m = U.as_matrix().mul_elementwise(inv.lo, inv.hi)
    return D2Sequence(m.mid, U.d, m.radius())


def _params_tuple(params):
    if isinstance(params, ModelParams):
        return params.mu, params.nu1, params.nu2
    return tuple(_exact(p) for p in params)


def _coef(x, kind):
    if kind == "float":
        return float(x)
    if kind == "exact":
        return x
    return IntervalScalar.exact(x)


def nonlinearity_G(U: D2Sequence, params, fast: bool = False) -> D2Sequence:
    """``nu1 U*U + nu2 U*U*U`` of size ``3 size(U)``.

    ``fast`` selects the DCT product (float only, non-rigorous).
    """
    _, nu1, nu2 = _params_tuple(params)
    kind = U.kind
    if fast and kind == "float":
        u2 = convolve_fast(U, U, size=3 * U.size)
        u3 = convolve_fast(U, U, U)
        return u2.scale(float(nu1)) + u3.scale(float(nu2))
    u2 = convolve(U, U)
    u3 = convolve(u2, U)
    return u2.resize(3 * U.size).scale(_coef(nu1, kind)) + u3.scale(_coef(nu2, kind))


def residual_F(U: D2Sequence, params, q=None, fast: bool = False) -> D2Sequence:
    """``F(U) = L U + G(U)`` of size ``3 size(U)``."""
    mu = _params_tuple(params)[0]
    LU = apply_L(U, mu, q).resize(3 * U.size)
    return LU + nonlinearity_G(U, params, fast=fast)


def v0_of(U0: D2Sequence, params) -> D2Sequence:
    """``V0 = 2 nu1 U0 + 3 nu2 U0*U0`` (size ``2 size(U0)``)."""
    _, nu1, nu2 = _params_tuple(params)
    kind = U0.kind
    lin = U0.resize(2 * U0.size).scale(_coef(2 * nu1, kind))
    return lin + convolve(U0, U0).scale(_coef(3 * nu2, kind))


def norm_inv_l_closed_form(mu) -> IntervalScalar:
    """Enclosure of ``||1/l||_2^2`` over R^2:

    (2 sqrt(mu) + (1+mu)(2 pi - 2 arctan(sqrt(mu)))) / (8 mu^{3/2} (1+mu)).
    """
    m = as_interval(_exact(mu))
    if m.lo <= 0:
        raise ValueError("mu must be positive")
    sm = m.sqrt()
    num = 2 * sm + (1 + m) * (2 * PI - 2 * sm.atan())
    return num / (8 * m * sm * (1 + m))


def kappa_localized(mu) -> IntervalScalar:
    """``||1/l||_2``, the smallest admissible Banach-algebra constant."""
    return norm_inv_l_closed_form(mu).sqrt()


def kappa_periodic(mu, d) -> IntervalScalar:
    """Constant valid uniformly for all half-periods ``q >= d``:

    kappa^2 = ||1/l||_2^2 + (2 pi^2/d)(3^{3/4}/mu^{7/4} + 3/mu^{5/2}).
    """
    m = as_interval(_exact(mu))
    dd = as_interval(_exact(d))
    sm = m.sqrt()
    m14 = sm.sqrt()  # mu^{1/4}
    three34 = IntervalScalar.exact(27).sqrt().sqrt()  # 3^{3/4}
    corr = (2 * PI.sqr() / dd) * (three34 / (m * sm * m14) + 3 / (m * m * sm))
    return (norm_inv_l_closed_form(mu) + corr).sqrt()
