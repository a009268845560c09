"""Outward-rounded interval arithmetic.

Three representations share one rounding model:

* :class:`IntervalScalar` -- ``[lo, hi]`` doubles.  Basic operations use
  error-free transformations (TwoSum, Veltkamp/Dekker TwoProduct) to find the
  sign of the rounding error, so results are tight and exact operations stay
  exact.  Elementary functions are evaluated with mpmath at 113 bits, widened
  by a relative 2**-100 and rounded outward to doubles.
* :class:`IntervalArray` -- vectorised ``[lo, hi]`` arrays; every operation is
  followed by a one-ulp ``nextafter`` nudge.  ``exp`` and ``log`` use argument
  reduction plus Taylor/atanh series with explicit remainders.
* :class:`IntervalMatrix` -- midpoint-radius dense matrices.  Products use the
  a-priori dot-product bound ``|fl(x.y) - x.y| <= gamma_n |x|.|y|`` which holds
  for any summation order (so BLAS may be used), with ``gamma_n = n u/(1-n u)``.

All routines are pure; no global rounding-mode state is touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import mpmath
import numpy as np

__all__ = [
    "DivisionByIntervalContainingZero",
    "DomainViolation",
    "NotCertifiablyInvertible",
    "IntervalScalar",
    "IntervalArray",
    "IntervalMatrix",
    "as_interval",
    "gamma",
    "opnorm2_upper",
    "lambda_max_upper",
    "certify_invertible",
    "UNIT_ROUNDOFF",
    "interval_sum",
    "PI",
]

UNIT_ROUNDOFF = 2.0**-53
_ETA = 2.0**-1074
_TINY = 2.0**-1000  # absolute slack covering underflow in dot products
_SPLITTER = 134217729.0  # 2**27 + 1
_MP_PREC = 113
_MP_REL = mpmath.mpf(2) ** -100
_INF = math.inf


class DivisionByIntervalContainingZero(ZeroDivisionError):
    pass


class DomainViolation(ValueError):
    pass


class NotCertifiablyInvertible(ArithmeticError):
    def __init__(self, bound: float, message: str = ""):
        self.bound = bound
        super().__init__(message or f"certified ||I - CK||_inf bound {bound!r} is not < 1")


def gamma(n: int) -> float:
    """Upper bound on ``n u / (1 - n u)``."""
    nu = n * UNIT_ROUNDOFF
    if nu >= 0.5:
        raise ValueError("dimension too large for the rounding model")
    return math.nextafter(math.nextafter(nu, _INF) / math.nextafter(1.0 - nu, 0.0), _INF)


# ---------------------------------------------------------------------------
# scalar directed rounding
# ---------------------------------------------------------------------------

def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float] | None:
    """Exact ``a*b = p + e``; ``None`` when over/underflow could spoil it."""
    p = a * b
    if not math.isfinite(p) or p == 0.0:
        return None
    ap = abs(p)
    if ap < 2.0**-960 or ap > 2.0**990 or abs(a) > 2.0**995 or abs(b) > 2.0**995:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _add_down(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    if not math.isfinite(s):
        return s if s < 0 or math.isnan(s) else _down(s) if s == _INF and math.isfinite(a) and math.isfinite(b) else s
    return _down(s) if e < 0 else s


def _add_up(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    if not math.isfinite(s):
        return s if s > 0 or math.isnan(s) else _up(s) if s == -_INF and math.isfinite(a) and math.isfinite(b) else s
    return _up(s) if e > 0 else s


def _mul_dir(a: float, b: float, up: bool) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a * b
    tp = _two_prod(a, b)
    if tp is None:
        p = a * b
        if p == 0.0:
            # underflow: the true product is nonzero with a known sign
            pos = (a > 0) == (b > 0)
            return (_ETA if up else 0.0) if pos else (0.0 if up else -_ETA)
        return _up(p) if up else _down(p)
    p, e = tp
    if up:
        return _up(p) if e > 0 else p
    return _down(p) if e < 0 else p


def _div_dir(a: float, b: float, up: bool) -> float:
    if a == 0.0:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return a / b
    q = a / b
    if q == 0.0:
        pos = (a > 0) == (b > 0)
        return (_ETA if up else 0.0) if pos else (0.0 if up else -_ETA)
    tp = _two_prod(q, b)
    if tp is None or not math.isfinite(q):
        return _up(q) if up else _down(q)
    p, e = tp
    res = (a - p) - e  # sign of a - q*b
    if res == 0.0:
        return q
    # true quotient is q + res/b
    above = (res > 0) == (b > 0)
    if up:
        return _up(q) if above else q
    return q if above else _down(q)


def _float_down(v: Fraction) -> float:
    f = float(v)
    if Fraction(f) > v:
        f = _down(f)
    return f


def _float_up(v: Fraction) -> float:
    f = float(v)
    if Fraction(f) < v:
        f = _up(f)
    return f


def _mpf_down(v: mpmath.mpf) -> float:
    f = float(v)
    if mpmath.mpf(f) > v:
        f = _down(f)
    return f


def _mpf_up(v: mpmath.mpf) -> float:
    f = float(v)
    if mpmath.mpf(f) < v:
        f = _up(f)
    return f


def _mp_enclose(v: mpmath.mpf) -> tuple[float, float]:
    """Outward float enclosure of a 113-bit value known to relative 2**-100."""
    slack = abs(v) * _MP_REL
    return _mpf_down(v - slack), _mpf_up(v + slack)


Number = Union[int, float, Fraction]


# ---------------------------------------------------------------------------
# IntervalScalar
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class IntervalScalar:
    """Closed interval ``[lo, hi]`` of doubles enclosing a real number."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # construction ---------------------------------------------------------
    @classmethod
    def point(cls, x: float) -> "IntervalScalar":
        return cls(x, x)

    @classmethod
    def exact(cls, v: Number | str) -> "IntervalScalar":
        """Tightest enclosure of an exact rational (int, Fraction, decimal string)."""
        if isinstance(v, float):
            return cls(v, v)
        q = Fraction(v)
        return cls(_float_down(q), _float_up(q))

    @classmethod
    def hull(cls, items: Iterable["IntervalScalar"]) -> "IntervalScalar":
        items = list(items)
        return cls(min(i.lo for i in items), max(i.hi for i in items))

    # basic queries --------------------------------------------------------
    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            return 0.5 * self.lo + 0.5 * self.hi
        return self.lo + 0.5 * (self.hi - self.lo)

    @property
    def width(self) -> float:
        return _sub_up(self.hi, self.lo)

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, IntervalScalar):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, float):
            return self.lo <= x <= self.hi
        q = Fraction(x) if not isinstance(x, mpmath.mpf) else x
        if isinstance(q, Fraction):
            return Fraction(self.lo) <= q <= Fraction(self.hi)
        return mpmath.mpf(self.lo) <= q <= mpmath.mpf(self.hi)

    def subset(self, other: "IntervalScalar") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def union(self, other: "IntervalScalar") -> "IntervalScalar":
        return IntervalScalar(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "IntervalScalar") -> "IntervalScalar":
        return IntervalScalar(max(self.lo, other.lo), min(self.hi, other.hi))

    # arithmetic -----------------------------------------------------------
    def __neg__(self) -> "IntervalScalar":
        return IntervalScalar(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other) -> "IntervalScalar":
        o = as_interval(other)
        return IntervalScalar(_add_down(self.lo, o.lo), _add_up(self.hi, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "IntervalScalar":
        o = as_interval(other)
        return IntervalScalar(_add_down(self.lo, -o.hi), _add_up(self.hi, -o.lo))

    def __rsub__(self, other) -> "IntervalScalar":
        return as_interval(other) - self

    def __mul__(self, other) -> "IntervalScalar":
        o = as_interval(other)
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        lo = min(_mul_dir(a, b, False) for a, b in pairs)
        hi = max(_mul_dir(a, b, True) for a, b in pairs)
        return IntervalScalar(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "IntervalScalar":
        o = as_interval(other)
        if o.lo <= 0.0 <= o.hi:
            raise DivisionByIntervalContainingZero(f"division by {o}")
        pairs = ((self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi))
        lo = min(_div_dir(a, b, False) for a, b in pairs)
        hi = max(_div_dir(a, b, True) for a, b in pairs)
        return IntervalScalar(lo, hi)

    def __rtruediv__(self, other) -> "IntervalScalar":
        return as_interval(other) / self

    def __abs__(self) -> "IntervalScalar":
        return IntervalScalar(self.mig, self.mag)

    def sqr(self) -> "IntervalScalar":
        a = abs(self)
        return IntervalScalar(_mul_dir(a.lo, a.lo, False), _mul_dir(a.hi, a.hi, True))

    def __pow__(self, k: int) -> "IntervalScalar":
        if not isinstance(k, int) or k < 0:
            raise TypeError("only non-negative integer powers are supported")
        if k == 0:
            return IntervalScalar(1.0, 1.0)
        if k % 2 == 0:
            base = self.sqr()
            return base ** (k // 2) if k > 2 else base
        result = self
        for _ in range(k - 1):
            result = result * self
        if self.lo >= 0 or self.hi <= 0:
            return result
        return result

    # comparisons that are certain for all members
    def certainly_lt(self, other) -> bool:
        return self.hi < as_interval(other).lo

    def certainly_le(self, other) -> bool:
        return self.hi <= as_interval(other).lo

    def certainly_gt(self, other) -> bool:
        return self.lo > as_interval(other).hi

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"

    def hex(self) -> str:
        return f"{self.lo.hex()} {self.hi.hex()}"

    @classmethod
    def fromhex(cls, s: str) -> "IntervalScalar":
        lo, hi = s.split()
        return cls(float.fromhex(lo), float.fromhex(hi))

    # elementary functions -------------------------------------------------
    def sqrt(self) -> "IntervalScalar":
        if self.lo < 0:
            raise DomainViolation(f"sqrt of {self}")
        return IntervalScalar(_sqrt_dir(self.lo, False), _sqrt_dir(self.hi, True))

    def exp(self) -> "IntervalScalar":
        return _monotone(self, mpmath.exp)

    def log(self) -> "IntervalScalar":
        if self.lo <= 0:
            raise DomainViolation(f"ln of {self}")
        return _monotone(self, mpmath.log)

    ln = log

    def atan(self) -> "IntervalScalar":
        return _monotone(self, mpmath.atan)

    arctan = atan

    def sinh(self) -> "IntervalScalar":
        return _monotone(self, mpmath.sinh)

    def cosh(self) -> "IntervalScalar":
        if self.lo >= 0:
            return _monotone(self, mpmath.cosh)
        if self.hi <= 0:
            return _monotone(-self, mpmath.cosh)
        top = _monotone(IntervalScalar(0.0, self.mag), mpmath.cosh)
        return IntervalScalar(1.0, top.hi)

    def sin(self) -> "IntervalScalar":
        return _trig(self, mpmath.iv.sin)

    def cos(self) -> "IntervalScalar":
        return _trig(self, mpmath.iv.cos)


def _sub_up(a: float, b: float) -> float:
    return _add_up(a, -b)


def _sqrt_dir(x: float, up: bool) -> float:
    if x == 0.0 or math.isinf(x):
        return math.sqrt(x)
    s = math.sqrt(x)
    tp = _two_prod(s, s)
    if tp is None:
        return _up(s) if up else _down(s)
    p, e = tp
    res = (x - p) - e
    if res == 0.0:
        return s
    if up:
        return _up(s) if res > 0 else s
    return s if res > 0 else _down(s)


def _monotone(x: IntervalScalar, f) -> IntervalScalar:
    with mpmath.workprec(_MP_PREC):
        lo = _mp_enclose(f(mpmath.mpf(x.lo)))[0]
        hi = _mp_enclose(f(mpmath.mpf(x.hi)))[1] if x.hi != x.lo else None
        if hi is None:
            hi = _mp_enclose(f(mpmath.mpf(x.hi)))[1]
    return IntervalScalar(lo, hi)


def _trig(x: IntervalScalar, f) -> IntervalScalar:
    with mpmath.workprec(_MP_PREC):
        old = mpmath.iv.prec
        mpmath.iv.prec = _MP_PREC
        try:
            v = f(mpmath.iv.mpf([x.lo, x.hi]))
        finally:
            mpmath.iv.prec = old
        lo = _mpf_down(mpmath.mpf(v.a))
        hi = _mpf_up(mpmath.mpf(v.b))
    return IntervalScalar(max(lo, -1.0), min(hi, 1.0))


def as_interval(x) -> IntervalScalar:
    if isinstance(x, IntervalScalar):
        return x
    if isinstance(x, float):
        return IntervalScalar(x, x)
    if isinstance(x, (int, Fraction, str)):
        return IntervalScalar.exact(x)
    if isinstance(x, np.floating):
        return IntervalScalar(float(x), float(x))
    if isinstance(x, np.integer):
        return IntervalScalar.exact(int(x))
    raise TypeError(f"cannot convert {type(x).__name__} to IntervalScalar")


def mp_constant(name: str) -> IntervalScalar:
    """Enclosure of an mpmath constant such as ``pi`` or ``euler``."""
    with mpmath.workprec(_MP_PREC):
        lo, hi = _mp_enclose(+getattr(mpmath.mp, name))
    return IntervalScalar(lo, hi)


PI = mp_constant("pi")
EULER = mp_constant("euler")
LN2 = mp_constant("ln2")


# ---------------------------------------------------------------------------
# IntervalArray (vectorised [lo, hi])
# ---------------------------------------------------------------------------

def _vdown(x):
    return np.nextafter(x, -np.inf)


def _vup(x):
    return np.nextafter(x, np.inf)


class IntervalArray:
    """Vectorised intervals with one-ulp outward nudging after each operation."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        hi = lo if hi is None else np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("invalid interval array")
        self.lo = np.array(lo)
        self.hi = np.array(hi)

    @classmethod
    def from_scalar(cls, s: IntervalScalar, shape=()) -> "IntervalArray":
        return cls(np.full(shape, s.lo), np.full(shape, s.hi))

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx) -> "IntervalArray":
        return IntervalArray(self.lo[idx], self.hi[idx])

    def scalar(self, idx=()) -> IntervalScalar:
        return IntervalScalar(float(self.lo[idx]), float(self.hi[idx]))

    @property
    def shape(self):
        return self.lo.shape

    @staticmethod
    def _wrap(x) -> "IntervalArray":
        if isinstance(x, IntervalArray):
            return x
        if isinstance(x, IntervalScalar):
            return IntervalArray(x.lo, x.hi)
        return IntervalArray(x)

    def __neg__(self):
        return IntervalArray(-self.hi, -self.lo)

    def __add__(self, other):
        o = self._wrap(other)
        return IntervalArray(_vdown(self.lo + o.lo), _vup(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._wrap(other)
        return IntervalArray(_vdown(self.lo - o.hi), _vup(self.hi - o.lo))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        o = self._wrap(other)
        with np.errstate(invalid="ignore"):
            p = np.stack(np.broadcast_arrays(self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi))
        p = np.nan_to_num(p, nan=0.0)  # 0 * inf
        return IntervalArray(_vdown(p.min(axis=0)), _vup(p.max(axis=0)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        if np.any((o.lo <= 0) & (o.hi >= 0)):
            raise DivisionByIntervalContainingZero("interval array divisor contains 0")
        inv = IntervalArray(_vdown(1.0 / o.hi), _vup(1.0 / o.lo))
        return self * inv

    def __rtruediv__(self, other):
        return self._wrap(other) / self

    def __abs__(self):
        mig = np.where((self.lo <= 0) & (self.hi >= 0), 0.0, np.minimum(np.abs(self.lo), np.abs(self.hi)))
        return IntervalArray(mig, np.maximum(np.abs(self.lo), np.abs(self.hi)))

    def sqr(self):
        a = abs(self)
        return IntervalArray(_vdown(a.lo * a.lo), _vup(a.hi * a.hi))

    @property
    def mag(self):
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def exp(self) -> "IntervalArray":
        return IntervalArray(_exp_bound(self.lo, up=False), _exp_bound(self.hi, up=True))

    def log(self) -> "IntervalArray":
        if np.any(self.lo <= 0):
            raise DomainViolation("ln of non-positive interval")
        return IntervalArray(_log_bound(self.lo, up=False), _log_bound(self.hi, up=True))


_EXP_TERMS = 20
_LN2_LO, _LN2_HI = LN2.lo, LN2.hi


def _exp_bound(x: np.ndarray, up: bool) -> np.ndarray:
    """Directed bound of exp at the points ``x`` by reduction ``x = k ln2 + t``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 700):
        raise DomainViolation("exp argument out of supported range")
    k = np.rint(x / 0.6931471805599453)
    # t = x - k ln2 enclosed
    kl_lo = np.minimum(k * _LN2_LO, k * _LN2_HI)
    kl_hi = np.maximum(k * _LN2_LO, k * _LN2_HI)
    t = IntervalArray(_vdown(x - _vup(_vup(kl_hi))), _vup(x - _vdown(_vdown(kl_lo))))
    # Taylor series with Lagrange remainder, |t| <= 0.35
    s = IntervalArray(np.ones_like(x))
    term = IntervalArray(np.ones_like(x))
    for j in range(1, _EXP_TERMS):
        term = term * t / float(j)
        s = s + term
    tm = t.mag
    rem = _vup(np.exp(0.36) * tm**_EXP_TERMS / math.factorial(_EXP_TERMS) * (1 + 1e-10))
    s = s + IntervalArray(-rem, rem)
    scale = np.ldexp(1.0, k.astype(int))  # exact power of two
    return _vup(s.hi * scale) if up else _vdown(s.lo * scale)


_LOG_TERMS = 16


def _log_bound(x: np.ndarray, up: bool) -> np.ndarray:
    """Directed bound of ln at points ``x`` via ``2 atanh((m-1)/(m+1)) + e ln2``."""
    x = np.asarray(x, dtype=float)
    m, e = np.frexp(x)  # x = m 2**e, m in [0.5, 1)
    low = m < 0.7071067811865476
    m = np.where(low, m * 2.0, m)  # exact
    e = np.where(low, e - 1, e)
    mi = IntervalArray(m)
    s = (mi - 1.0) / (mi + 1.0)
    s2 = s.sqr()
    acc = IntervalArray(np.zeros_like(x))
    pw = s
    for j in range(_LOG_TERMS):
        acc = acc + pw / float(2 * j + 1)
        pw = pw * s2
    sm = s.mag
    n = 2 * _LOG_TERMS + 1
    rem = _vup(sm**n / (n * (1 - sm * sm)) * (1 + 1e-10))
    acc = (acc + IntervalArray(-rem, rem)) * 2.0
    ef = e.astype(float)
    eln2 = IntervalArray(np.minimum(ef * _LN2_LO, ef * _LN2_HI), np.maximum(ef * _LN2_LO, ef * _LN2_HI))
    eln2 = IntervalArray(_vdown(eln2.lo), _vup(eln2.hi))
    total = acc + eln2
    return total.hi if up else total.lo


# ---------------------------------------------------------------------------
# IntervalMatrix (midpoint-radius)
# ---------------------------------------------------------------------------

def _inflate(x: np.ndarray | float, nops: int = 2):
    """Round a nonnegative float expression up to cover ``nops`` roundings."""
    f = 1.0 + (nops + 1) * 2.0**-52
    return np.nextafter(np.asarray(x) * f, np.inf) + _TINY


class IntervalMatrix:
    """Dense matrix of intervals ``[mid - rad, mid + rad]``."""

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=None):
        mid = np.asarray(mid, dtype=float)
        if mid.ndim != 2:
            raise ValueError("IntervalMatrix expects a 2-D array")
        self.mid = mid
        self.rad = None if rad is None else np.asarray(rad, dtype=float)
        if self.rad is not None:
            if self.rad.shape != mid.shape or np.any(self.rad < 0):
                raise ValueError("radius must be nonnegative with matching shape")
            if not np.any(self.rad):
                self.rad = None

    @classmethod
    def from_bounds(cls, lo, hi) -> "IntervalMatrix":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if np.any(lo > hi):
            raise ValueError("lo > hi")
        mid = lo + 0.5 * (hi - lo)
        rad = _inflate(np.maximum(mid - lo, hi - mid), 2)
        rad = np.where(lo == hi, 0.0, rad)
        return cls(np.where(lo == hi, lo, mid), rad)

    @classmethod
    def from_scalars(cls, grid) -> "IntervalMatrix":
        lo = np.array([[c.lo for c in row] for row in grid])
        hi = np.array([[c.hi for c in row] for row in grid])
        return cls.from_bounds(lo, hi)

    @classmethod
    def identity(cls, n: int) -> "IntervalMatrix":
        return cls(np.eye(n))

    @property
    def shape(self):
        return self.mid.shape

    @property
    def thin(self) -> bool:
        return self.rad is None

    def radius(self) -> np.ndarray:
        return np.zeros_like(self.mid) if self.rad is None else self.rad

    @property
    def lo(self):
        return np.nextafter(self.mid - self.radius(), -np.inf) if self.rad is not None else self.mid

    @property
    def hi(self):
        return np.nextafter(self.mid + self.radius(), np.inf) if self.rad is not None else self.mid

    def entry(self, i: int, j: int) -> IntervalScalar:
        if self.rad is None:
            return IntervalScalar.point(float(self.mid[i, j]))
        m, r = float(self.mid[i, j]), float(self.rad[i, j])
        return IntervalScalar(_down(m - r), _up(m + r))

    def abs_upper(self) -> np.ndarray:
        if self.rad is None:
            return np.abs(self.mid)
        return np.nextafter(np.abs(self.mid) + self.rad, np.inf)

    @property
    def T(self) -> "IntervalMatrix":
        return IntervalMatrix(self.mid.T, None if self.rad is None else self.rad.T)

    def __getitem__(self, idx) -> "IntervalMatrix":
        return IntervalMatrix(self.mid[idx], None if self.rad is None else self.rad[idx])

    def __neg__(self):
        return IntervalMatrix(-self.mid, self.rad)

    def _addsub(self, other, sign: float) -> "IntervalMatrix":
        o = other if isinstance(other, IntervalMatrix) else IntervalMatrix(np.asarray(other, dtype=float))
        mid = self.mid + sign * o.mid
        rad = self.radius() + o.radius() + UNIT_ROUNDOFF * np.abs(mid)
        return IntervalMatrix(mid, _inflate(rad, 2))

    def __add__(self, other):
        return self._addsub(other, 1.0)

    def __sub__(self, other):
        return self._addsub(other, -1.0)

    def scale(self, s: IntervalScalar | float) -> "IntervalMatrix":
        s = as_interval(s)
        sm = s.mid
        sr = max(sm - s.lo, s.hi - sm)
        mid = self.mid * sm
        rad = np.abs(self.mid) * sr + self.radius() * (abs(sm) + sr) + UNIT_ROUNDOFF * np.abs(mid)
        return IntervalMatrix(mid, _inflate(rad, 4))

    def scale_rows(self, lo: np.ndarray, hi: np.ndarray) -> "IntervalMatrix":
        return _scale_axis(self, lo, hi, axis=0)

    def scale_cols(self, lo: np.ndarray, hi: np.ndarray) -> "IntervalMatrix":
        return _scale_axis(self, lo, hi, axis=1)

    def mul_elementwise(self, lo, hi) -> "IntervalMatrix":
        """Entrywise product with the intervals ``[lo, hi]`` (broadcast)."""
        lo = np.broadcast_to(np.asarray(lo, dtype=float), self.shape)
        hi = np.broadcast_to(np.asarray(hi, dtype=float), self.shape)
        sm = lo + 0.5 * (hi - lo)
        sr = np.where(lo == hi, 0.0, _inflate(np.maximum(sm - lo, hi - sm), 1))
        sm = np.where(lo == hi, lo, sm)
        mid = self.mid * sm
        rad = np.abs(self.mid) * sr + self.radius() * (np.abs(sm) + sr) + UNIT_ROUNDOFF * np.abs(mid)
        return IntervalMatrix(mid, _inflate(rad, 4))

    def __matmul__(self, other) -> "IntervalMatrix":
        if not isinstance(other, IntervalMatrix):
            other = IntervalMatrix(np.asarray(other, dtype=float))
        return matmul(self, other)

    def norm_inf_upper(self) -> float:
        return _rowsum_upper(self.abs_upper(), axis=1)

    def norm_1_upper(self) -> float:
        return _rowsum_upper(self.abs_upper(), axis=0)

    def fro_sq_upper(self) -> float:
        a = self.abs_upper()
        n = a.size
        return float(_inflate(np.sum(a * a) / (1 - gamma(n + 1)), 2))


def _scale_axis(M: IntervalMatrix, lo, hi, axis: int) -> IntervalMatrix:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    sm = lo + 0.5 * (hi - lo)
    sr = _inflate(np.maximum(sm - lo, hi - sm), 1)
    sr = np.where(lo == hi, 0.0, sr)
    sm = np.where(lo == hi, lo, sm)
    if axis == 0:
        sm, sr = sm[:, None], sr[:, None]
    else:
        sm, sr = sm[None, :], sr[None, :]
    mid = M.mid * sm
    rad = np.abs(M.mid) * sr + M.radius() * (np.abs(sm) + sr) + UNIT_ROUNDOFF * np.abs(mid)
    return IntervalMatrix(mid, _inflate(rad, 4))


def _rowsum_upper(a: np.ndarray, axis: int) -> float:
    if a.size == 0:
        return 0.0
    n = a.shape[axis]
    s = np.sum(a, axis=axis)
    return float(np.max(_inflate(s / (1 - gamma(n + 1)), 2)))


def matmul(A: IntervalMatrix, B: IntervalMatrix) -> IntervalMatrix:
    """Rigorous product of midpoint-radius matrices."""
    n = A.shape[1]
    if n != B.shape[0]:
        raise ValueError("inner dimensions differ")
    g = gamma(n + 2)
    mid = A.mid @ B.mid
    aA = np.abs(A.mid)
    aB = np.abs(B.mid)
    if A.rad is None and B.rad is None:
        rad = g * (aA @ aB)
    elif B.rad is None:
        rad = (_inflate(A.rad + g * aA, 2)) @ aB
    elif A.rad is None:
        rad = aA @ _inflate(B.rad + g * aB, 2)
    else:
        rad = _inflate(A.rad + g * aA, 2) @ _inflate(aB + B.rad, 1) + aA @ B.rad
    rad = _inflate(rad / (1 - g), 3) + n * _TINY
    return IntervalMatrix(mid, rad)


# ---------------------------------------------------------------------------
# spectral bounds
# ---------------------------------------------------------------------------

def lambda_max_upper(G: np.ndarray, err: float = 0.0) -> float:
    """Upper bound on the largest eigenvalue of any symmetric matrix within
    spectral-norm distance ``err`` of the symmetric float matrix ``G``.

    Approximate diagonalisation ``G ~ Q diag Q^T`` followed by Gershgorin discs
    on ``H = Q^T G Q`` (in interval arithmetic) and the correction
    ``1/sigma_min(Q)^2 <= 1/(1 - ||I - Q^T Q||)``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    if n == 0:
        return max(err, 0.0)
    Gs = 0.5 * (G + G.T)
    asym = float(np.max(np.abs(G - Gs))) if n > 1 else 0.0
    # symmetric part is exact up to one rounding per entry
    sym_err = _inflate(asym * n + UNIT_ROUNDOFF * float(np.max(np.abs(Gs))) * n, 2)
    _, Q = np.linalg.eigh(Gs)
    Qm = IntervalMatrix(Q)
    H = matmul(Qm.T, matmul(IntervalMatrix(Gs), Qm))
    E = IntervalMatrix(np.eye(n)) - matmul(Qm.T, Qm)
    e = E.norm_inf_upper()
    if e >= 1.0:
        raise ArithmeticError("orthogonality defect too large for Gershgorin bound")
    Habs = H.abs_upper()
    diag_hi = np.nextafter(np.diag(H.mid) + np.diag(H.radius()), np.inf)
    off = np.sum(Habs, axis=1) - np.diag(Habs)
    off = _inflate(off / (1 - gamma(n + 1)), 2)
    gersh = float(np.max(np.nextafter(diag_hi + off, np.inf)))
    gersh = max(gersh, 0.0)
    lam = float(_inflate(gersh / (1.0 - e), 2))
    return float(_inflate(lam + float(sym_err) + err, 2))


def opnorm2_upper(M: IntervalMatrix | np.ndarray) -> IntervalScalar:
    """Certified upper bound on the spectral norm of every matrix in ``M``.

    Returns ``[0, u]``; only the upper end carries information.
    """
    if not isinstance(M, IntervalMatrix):
        M = IntervalMatrix(np.asarray(M, dtype=float))
    if M.mid.size == 0:
        return IntervalScalar(0.0, 0.0)
    b1 = float(np.sqrt(_inflate(M.norm_1_upper() * M.norm_inf_upper(), 1)))
    b1 = float(_inflate(b1, 1))
    b2 = _gram_bound(M)
    return IntervalScalar(0.0, min(b1, b2))


def _gram_bound(M: IntervalMatrix) -> float:
    m, n = M.shape
    A = M.mid
    if m < n:
        G = A @ A.T
        k = n
    else:
        G = A.T @ A
        k = m
    fro = IntervalMatrix(A).fro_sq_upper()
    err = float(_inflate(gamma(k + 2) * fro, 2))
    lam = lambda_max_upper(G, err)
    mid_norm = float(_inflate(math.sqrt(lam), 1))
    if M.rad is None:
        return mid_norm
    R = IntervalMatrix(M.rad)
    rad_norm = float(_inflate(math.sqrt(float(_inflate(R.norm_1_upper() * R.norm_inf_upper(), 1))), 1))
    return float(_inflate(mid_norm + rad_norm, 1))


def certify_invertible(K: IntervalMatrix) -> tuple[IntervalScalar, np.ndarray]:
    """Approximate-inverse contraction test ``||I - C K||_inf < 1``."""
    if not isinstance(K, IntervalMatrix):
        K = IntervalMatrix(np.asarray(K, dtype=float))
    n, m = K.shape
    if n != m:
        raise ValueError("certify_invertible needs a square matrix")
    try:
        C = np.linalg.inv(K.mid)
    except np.linalg.LinAlgError:
        raise NotCertifiablyInvertible(math.inf, "midpoint matrix is numerically singular") from None
    if not np.all(np.isfinite(C)):
        raise NotCertifiablyInvertible(math.inf, "approximate inverse is not finite")
    R = IntervalMatrix(np.eye(n)) - matmul(IntervalMatrix(C), K)
    bound = R.norm_inf_upper()
    if not bound < 1.0:
        raise NotCertifiablyInvertible(bound)
    return IntervalScalar(0.0, bound), C


def interval_sum(lo: np.ndarray, hi: np.ndarray) -> IntervalScalar:
    """Enclosure of the sum of intervals ``[lo_i, hi_i]`` (any summation order)."""
    lo = np.ravel(np.asarray(lo, dtype=float))
    hi = np.ravel(np.asarray(hi, dtype=float))
    if lo.size == 0:
        return IntervalScalar(0.0, 0.0)
    g = gamma(lo.size + 1)
    slo, shi = float(np.sum(lo)), float(np.sum(hi))
    elo = float(_inflate(g * float(np.sum(np.abs(lo))), 2))
    ehi = float(_inflate(g * float(np.sum(np.abs(hi))), 2))
    return IntervalScalar(_down(slo - elo), _up(shi + ehi))
