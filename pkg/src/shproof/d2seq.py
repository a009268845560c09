"""D2-symmetric cosine sequences on N0^2.

A :class:`D2Sequence` with coefficients ``u[n1, n2]`` for ``0 <= n1, n2 <= M``
represents, on the square ``(-d, d)^2``,

    sum_n alpha_n u_n cos(pi n1 x1 / d) cos(pi n2 x2 / d)

with orbit weights ``alpha_n`` in {1, 2, 4}.  The l^p norms and the inner
product carry the same weights.  Entries are one of

* ``float``    -- plain numpy float64 (construction stage, non-rigorous),
* ``exact``    -- numpy object array of ``Fraction`` (projected U0, tests),
* ``interval`` -- midpoint-radius float arrays (rigorous bounds).

The reduced convolution ``(U*V)_k = sum_m v_m sum_{s in orbit(m)} u(|k-s|)``
is evaluated directly (compiled kernel if available) for rigorous work and by
DCT-I for the non-rigorous construction stage.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction

import numpy as np
from scipy.fft import dct

from . import _convref
from .errors import DomainMismatch
from .interval import (
    IntervalMatrix,
    IntervalScalar,
    as_interval,
    gamma,
    interval_sum,
)

try:
    if os.environ.get("SHPROOF_PURE_PYTHON"):
        raise ImportError
    from . import _kernels as _kern

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - exercised when the extension is absent
    _kern = _convref
    HAVE_COMPILED = False

__all__ = [
    "DomainMismatch",
    "D2Sequence",
    "alpha",
    "norm",
    "convolve",
    "convolve_fast",
    "project",
    "evaluate",
    "young_bound",
    "HAVE_COMPILED",
]


def alpha(size: int) -> np.ndarray:
    """Orbit weights on {0..size}^2 as an integer array."""
    a1 = np.full(size + 1, 2, dtype=np.int64)
    a1[0] = 1
    return np.outer(a1, a1)


def _same_d(d1, d2) -> bool:
    return Fraction(d1) == Fraction(d2)


def _ulp_rad(mid: np.ndarray, exact: np.ndarray) -> np.ndarray:
    """Radius covering the float rendering of each exact rational."""
    rad = np.zeros(mid.shape)
    flat_m, flat_e, flat_r = mid.ravel(), exact.ravel(), rad.ravel()
    for i in range(flat_m.size):
        if Fraction(flat_m[i]) != flat_e[i]:
            flat_r[i] = math.ulp(flat_m[i])
    return rad


class D2Sequence:
    """Finite D2-symmetric cosine sequence on a square of half-width ``d``."""

    __slots__ = ("coeffs", "rad", "d")

    def __init__(self, coeffs, d, rad=None):
        c = np.asarray(coeffs)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("coefficients must form a square (M+1)x(M+1) array")
        if c.dtype != object:
            c = c.astype(float)
        if rad is not None:
            rad = np.asarray(rad, dtype=float)
            if rad.shape != c.shape or np.any(rad < 0):
                raise ValueError("radius must be nonnegative with matching shape")
            if c.dtype == object:
                raise ValueError("exact sequences carry no radius")
        if not d > 0:
            raise ValueError("half-width d must be positive")
        self.coeffs = c
        self.rad = rad
        self.d = d

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, size: int, d, kind: str = "float") -> "D2Sequence":
        if kind == "exact":
            c = np.empty((size + 1, size + 1), dtype=object)
            c.fill(Fraction(0))
            return cls(c, d)
        c = np.zeros((size + 1, size + 1))
        return cls(c, d, np.zeros_like(c) if kind == "interval" else None)

    @classmethod
    def delta(cls, d, size: int = 0, kind: str = "float") -> "D2Sequence":
        s = cls.zeros(size, d, kind)
        s.coeffs[0, 0] = Fraction(1) if kind == "exact" else 1.0
        return s

    @classmethod
    def from_dict(cls, entries: dict, d, size: int | None = None, kind: str = "float") -> "D2Sequence":
        size = max(max(k) for k in entries) if size is None else size
        s = cls.zeros(size, d, kind)
        for (n1, n2), v in entries.items():
            s.coeffs[n1, n2] = Fraction(v) if kind == "exact" else float(v)
        return s

    # basic properties -----------------------------------------------------
    @property
    def size(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def kind(self) -> str:
        if self.coeffs.dtype == object:
            return "exact"
        return "interval" if self.rad is not None else "float"

    @property
    def mid(self) -> np.ndarray:
        if self.kind == "exact":
            return np.vectorize(float, otypes=[float])(self.coeffs)
        return self.coeffs

    def radius(self) -> np.ndarray:
        return np.zeros(self.coeffs.shape) if self.rad is None else self.rad

    def __repr__(self) -> str:
        return f"D2Sequence(size={self.size}, d={self.d}, kind={self.kind})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, D2Sequence):
            return NotImplemented
        if not _same_d(self.d, other.d) or self.kind != other.kind or self.size != other.size:
            return False
        if not np.array_equal(self.coeffs, other.coeffs):
            return False
        return self.rad is None or np.array_equal(self.rad, other.rad)

    __hash__ = None

    # conversions ----------------------------------------------------------
    def to_float(self) -> "D2Sequence":
        return D2Sequence(self.mid.copy(), self.d)

    def to_interval(self) -> "D2Sequence":
        if self.kind == "interval":
            return self
        if self.kind == "float":
            return D2Sequence(self.coeffs.copy(), self.d, np.zeros(self.coeffs.shape))
        mid = self.mid
        return D2Sequence(mid, self.d, _ulp_rad(mid, self.coeffs))

    def to_exact(self) -> "D2Sequence":
        if self.kind == "exact":
            return self
        if self.kind == "interval" and np.any(self.rad):
            raise ValueError("interval sequence with nonzero radius has no exact value")
        c = np.empty(self.coeffs.shape, dtype=object)
        flat, src = c.ravel(), self.coeffs.ravel()
        for i in range(src.size):
            flat[i] = Fraction(float(src[i]))
        return D2Sequence(c, self.d)

    def as_matrix(self) -> IntervalMatrix:
        s = self.to_interval()
        return IntervalMatrix(s.coeffs, s.rad)

    def entry(self, n1: int, n2: int) -> IntervalScalar:
        if n1 > self.size or n2 > self.size:
            return IntervalScalar(0.0, 0.0)
        if self.kind == "exact":
            return IntervalScalar.exact(self.coeffs[n1, n2])
        if self.kind == "float":
            return IntervalScalar.point(float(self.coeffs[n1, n2]))
        return self.as_matrix().entry(n1, n2)

    # resizing / projection ------------------------------------------------
    def resize(self, size: int) -> "D2Sequence":
        """Zero-pad or truncate to {0..size}^2."""
        out = D2Sequence.zeros(size, self.d, self.kind)
        k = min(size, self.size) + 1
        out.coeffs[:k, :k] = self.coeffs[:k, :k]
        if out.rad is not None:
            out.rad[:k, :k] = self.radius()[:k, :k]
        return out

    def project(self, N: int, part: str = "head") -> "D2Sequence":
        if N < 0:
            raise ValueError("N must be nonnegative")
        if part == "head":
            return self.resize(N)
        if part != "tail":
            raise ValueError("part must be 'head' or 'tail'")
        out = self.resize(self.size)
        k = min(N, self.size) + 1
        zero = Fraction(0) if self.kind == "exact" else 0.0
        out.coeffs[:k, :k] = zero
        if out.rad is not None:
            out.rad[:k, :k] = 0.0
        return out

    def support_size(self) -> int:
        """Smallest M with all nonzero entries in {0..M}^2."""
        nz = np.argwhere((self.coeffs != 0) | (self.radius() != 0))
        return int(nz.max()) if nz.size else 0

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "D2Sequence"):
        if not _same_d(self.d, other.d):
            raise DomainMismatch(f"half-widths differ: {self.d} vs {other.d}")

    def _binary(self, other: "D2Sequence", sign: int) -> "D2Sequence":
        self._check(other)
        size = max(self.size, other.size)
        a, b = self.resize(size), other.resize(size)
        kinds = {a.kind, b.kind}
        if kinds == {"exact"}:
            return D2Sequence(a.coeffs + sign * b.coeffs, self.d)
        if kinds == {"float"}:
            return D2Sequence(a.coeffs + sign * b.coeffs, self.d)
        m = a.as_matrix()._addsub(b.as_matrix(), float(sign))
        return D2Sequence(m.mid, self.d, m.radius())

    def __add__(self, other):
        return self._binary(other, 1)

    def __sub__(self, other):
        return self._binary(other, -1)

    def __neg__(self):
        return D2Sequence(-self.coeffs, self.d, self.rad)

    def scale(self, s) -> "D2Sequence":
        """Multiply every entry by the scalar ``s``."""
        if self.kind == "exact" and isinstance(s, (int, Fraction)):
            return D2Sequence(self.coeffs * Fraction(s), self.d)
        if self.kind == "float" and not isinstance(s, IntervalScalar):
            return D2Sequence(self.coeffs * float(s), self.d)
        m = self.as_matrix().scale(as_interval(s))
        return D2Sequence(m.mid, self.d, m.radius())

    def __mul__(self, other):
        if isinstance(other, D2Sequence):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    # norms ----------------------------------------------------------------
    def norm(self, p: int = 2):
        return norm(self, p)

    def inner(self, other: "D2Sequence"):
        """Weighted inner product ``sum alpha u v``."""
        self._check(other)
        size = min(self.size, other.size)
        a, b = self.resize(size), other.resize(size)
        w = alpha(size)
        if a.kind == "float" and b.kind == "float":
            return float(np.sum(w * a.coeffs * b.coeffs))
        if a.kind == "exact" and b.kind == "exact":
            return IntervalScalar.exact(sum((w * a.coeffs * b.coeffs).ravel(), Fraction(0)))
        A, B = a.as_matrix(), b.as_matrix()
        prod_mid = A.mid * B.mid
        prod_rad = (np.abs(A.mid) * B.radius() + A.radius() * (np.abs(B.mid) + B.radius())
                    + 2.0**-53 * np.abs(prod_mid))
        prod_rad = np.nextafter(prod_rad * (1 + 2.0**-50), np.inf)
        lo = np.nextafter(w * (prod_mid - prod_rad), -np.inf)
        hi = np.nextafter(w * (prod_mid + prod_rad), np.inf)
        return interval_sum(lo, hi)

    def evaluate(self, x) -> float:
        return evaluate(self, x)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def norm(U: D2Sequence, p: int = 2):
    """Weighted l^p norm; float for float entries, IntervalScalar otherwise."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    w = alpha(U.size)
    if U.kind == "float":
        a = np.abs(U.coeffs)
        return float(np.sum(w * a)) if p == 1 else float(np.sqrt(np.sum(w * a * a)))
    if U.kind == "exact":
        c = U.coeffs
        if p == 1:
            return IntervalScalar.exact(sum((w * np.abs(c)).ravel(), Fraction(0)))
        return IntervalScalar.exact(sum((w * c * c).ravel(), Fraction(0))).sqrt()
    m = U.as_matrix()
    mig = np.maximum(np.abs(m.mid) - m.radius(), 0.0)
    mig = np.nextafter(mig, -np.inf).clip(min=0.0)
    mag = m.abs_upper()
    if p == 1:
        return interval_sum(np.nextafter(w * mig, -np.inf), np.nextafter(w * mag, np.inf))
    lo = np.nextafter(w * np.nextafter(mig * mig, -np.inf), -np.inf).clip(min=0.0)
    hi = np.nextafter(w * np.nextafter(mag * mag, np.inf), np.inf)
    s = interval_sum(lo, hi)
    return IntervalScalar(max(s.lo, 0.0), s.hi).sqrt()


def convolve(U: D2Sequence, V: D2Sequence) -> D2Sequence:
    """Reduced-index convolution; result size ``size(U) + size(V)``.

    Float entries give float results, exact entries exact results; if either
    operand is an interval sequence the result is a rigorous enclosure.
    """
    U._check(V)
    kinds = {U.kind, V.kind}
    if kinds == {"exact"}:
        return D2Sequence(_convref.conv_plain(U.coeffs, V.coeffs), U.d)
    if kinds == {"float"}:
        return D2Sequence(_kern.conv_plain(np.ascontiguousarray(U.coeffs), np.ascontiguousarray(V.coeffs)), U.d)
    a, b = U.to_interval(), V.to_interval()
    c, absacc, radacc = _kern.conv_midrad(
        np.ascontiguousarray(a.coeffs), np.ascontiguousarray(a.rad),
        np.ascontiguousarray(b.coeffs), np.ascontiguousarray(b.rad))
    nterms = 4 * (b.size + 1) ** 2 + 4
    g = gamma(nterms)
    rad = (radacc + g * absacc) / (1.0 - g)
    rad = np.nextafter(rad * (1 + 2.0**-50), np.inf) + nterms * 2.0**-1000
    return D2Sequence(c, U.d, rad)


def _dct_grid(size: int) -> int:
    m = 16
    while m < size:
        m *= 2
    return m


def to_grid(U: D2Sequence, points: int) -> np.ndarray:
    """Values at ``x_j = d j / points``, j = 0..points (non-rigorous)."""
    if points < U.size:
        raise ValueError("grid too coarse for the sequence")
    c = np.zeros((points + 1, points + 1))
    c[: U.size + 1, : U.size + 1] = U.mid
    return dct(dct(c, type=1, axis=0), type=1, axis=1)


def from_grid(f: np.ndarray, d, size: int) -> D2Sequence:
    """Inverse of :func:`to_grid`, truncated to ``size`` (non-rigorous)."""
    points = f.shape[0] - 1
    c = dct(dct(f, type=1, axis=0), type=1, axis=1) / (2.0 * points) ** 2
    return D2Sequence(c[: size + 1, : size + 1].copy(), d)


def convolve_fast(*seqs: D2Sequence, size: int | None = None) -> D2Sequence:
    """Product of several sequences via DCT-I, alias-free (non-rigorous)."""
    d = seqs[0].d
    for s in seqs[1:]:
        seqs[0]._check(s)
    total = sum(s.size for s in seqs)
    size = total if size is None else size
    points = _dct_grid(max(total, size))
    f = to_grid(seqs[0], points)
    for s in seqs[1:]:
        f = f * to_grid(s, points)
    return from_grid(f, d, size)


def project(U: D2Sequence, N: int, part: str = "head") -> D2Sequence:
    return U.project(N, part)


def evaluate(U: D2Sequence, x) -> float:
    """Value of the represented function at ``x``; zero outside the square."""
    x1, x2 = float(x[0]), float(x[1])
    d = float(U.d)
    if abs(x1) > d or abs(x2) > d:
        return 0.0
    n = np.arange(U.size + 1)
    c1 = np.cos(np.pi * n * x1 / d)
    c2 = np.cos(np.pi * n * x2 / d)
    return float(c1 @ (alpha(U.size) * U.mid) @ c2)


def evaluate_grid(U: D2Sequence, xs, ys) -> np.ndarray:
    """Values on the tensor grid ``xs x ys`` (rows follow ``xs``)."""
    d = float(U.d)
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    n = np.arange(U.size + 1)
    c1 = np.cos(np.pi * np.outer(xs, n) / d)
    c2 = np.cos(np.pi * np.outer(ys, n) / d)
    out = c1 @ (alpha(U.size) * U.mid) @ c2.T
    out[np.abs(xs) > d, :] = 0.0
    out[:, np.abs(ys) > d] = 0.0
    return out


def young_bound(U: D2Sequence, V: D2Sequence):
    """``||U||_2 ||V||_1``, an upper bound for ``||U*V||_2``."""
    a, b = norm(U, 2), norm(V, 1)
    if isinstance(a, IntervalScalar) or isinstance(b, IntervalScalar):
        return as_interval(a) * as_interval(b)
    return a * b
