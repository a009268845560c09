"""Certified Newton-Kantorovich bounds for a localized pattern.

All operators on l^2_{D2} are stored in the basis scaled by ``sqrt(alpha_n)``:
a coefficient vector ``u`` becomes ``S u`` with ``S = diag(sqrt(alpha))`` so the
weighted norm is the Euclidean norm and operator norms are matrix 2-norms.
In that basis the convolution operator of a real sequence is symmetric.
Vectors over an index box ``{0..M}^2`` are flattened row-major.

``B`` (the approximate inverse of ``pi^N (I + V0 L^{-1}) pi^N``) is a float
matrix in the scaled basis over ``{0..N}^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from . import _convref
from .d2seq import D2Sequence, alpha, convolve, norm
from .errors import NegativeInnerProduct
from .interval import (
    PI,
    UNIT_ROUNDOFF,
    IntervalArray,
    IntervalMatrix,
    IntervalScalar,
    as_interval,
    gamma,
    lambda_max_upper,
    matmul,
    opnorm2_upper,
)
from .shmodel import (
    ModelParams,
    apply_L,
    kappa_localized,
    kappa_periodic,
    l_diagonal_interval,
    nonlinearity_G,
    v0_of,
)

__all__ = [
    "BoundSet",
    "e_sequences",
    "appendix_constants",
    "appendix_sequences",
    "exp_overlap_integrals",
    "conv_matrix",
    "conv_matrix_columnwise",
    "scaled_vector",
    "l_tail_min",
    "compute_Y0",
    "compute_Z2",
    "compute_Z1_periodic",
    "compute_Zu",
    "assemble_Z1",
    "compute_bounds",
]

_TINY = 2.0**-1000


def _up(x: float, nops: int = 2) -> float:
    return float(np.nextafter(x * (1.0 + (nops + 1) * 2.0**-52), np.inf)) + _TINY


def _iv(x) -> IntervalScalar:
    if isinstance(x, IntervalScalar):
        return x
    if isinstance(x, float):
        return as_interval(Fraction(repr(x)))
    return as_interval(x)


def _nonneg(x: IntervalScalar) -> IntervalScalar:
    return IntervalScalar(max(x.lo, 0.0), max(x.hi, 0.0))


def _max1(x: IntervalScalar) -> IntervalScalar:
    return IntervalScalar(max(x.lo, 1.0), max(x.hi, 1.0))


def _seq_from_bounds(lo: np.ndarray, hi: np.ndarray, d) -> D2Sequence:
    m = IntervalMatrix.from_bounds(lo, hi)
    return D2Sequence(m.mid, d, m.radius())


# ---------------------------------------------------------------------------
# E-sequences and appendix constants
# ---------------------------------------------------------------------------

def _e_factor(a: IntervalScalar, d: IntervalScalar, size: int) -> IntervalArray:
    """Coefficients of ``cosh(2 a x)`` on ``(-d, d)``:
    ``c sinh(cd) (-1)^n / (d (c^2 + (pi n / d)^2))`` with ``c = 2a``."""
    c = 2 * a
    n = np.arange(size + 1, dtype=float)
    den = (IntervalArray(n) * (PI / d)).sqr() + c.sqr()
    vals = (1.0 / den) * (c * (c * d).sinh() / d)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return vals * sign


def e_sequences(a, d, size: int) -> tuple[D2Sequence, D2Sequence, D2Sequence]:
    """``(E1, E12, E2)``: coefficients of ``cosh(2a x1)``, ``cosh(2a x1) cosh(2a x2)``
    and ``cosh(2a x2)`` on the square, truncated to ``{0..size}^2``."""
    ai, di = _iv(a), _iv(d)
    e = _e_factor(ai, di, size)
    z = np.zeros((size + 1, size + 1))
    lo1, hi1 = z.copy(), z.copy()
    lo1[:, 0], hi1[:, 0] = e.lo, e.hi
    outer = IntervalArray(e.lo[:, None], e.hi[:, None]) * IntervalArray(e.lo[None, :], e.hi[None, :])
    dd = d if not isinstance(d, IntervalScalar) else d.mid
    E1 = _seq_from_bounds(lo1, hi1, dd)
    E2 = _seq_from_bounds(lo1.T, hi1.T, dd)
    E12 = _seq_from_bounds(outer.lo, outer.hi, dd)
    return E1, E12, E2


def appendix_constants(a, d) -> tuple[IntervalScalar, IntervalScalar, IntervalScalar]:
    """Enclosures of ``C1(d)``, ``C12(d)`` and ``C2(d)``."""
    a, d = _iv(a), _iv(d)
    E = (-2 * a * d).exp()
    q = 1 - (-a * d).exp()
    e1 = IntervalScalar.exact(-1).exp()
    w = 2 * e1 + 1
    inner = (1 + E) / a + 2 * d + E * (4 * d + E / a)
    C1 = (4 * ((2 * a * d + 1 + E) / a.sqr() + E * (4 * d + E / a) + ((1 + E) / a + 2 * d) * w / (a * q))
          + 4 * w.sqr() / (a.sqr() * q.sqr())
          + (2 / a) * (inner + w / (a * q)))
    C12 = 8 * (2 * d + 1 / (2 * a)) * (
        2 * d + (1 + E) / (2 * a) + (2 * d + (3 + E) / (2 * a)) / q
        + (4 * e1 + 1 + E) / (2 * a * q.sqr()))
    C2 = (2 / a) * (inner + (2 * e1 + E) / (a * q))
    return C1, C12, C2


def appendix_sequences(a: float, d: float, nmax: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Float arrays ``p_n, q_n, s_n`` on ``{0..nmax}^2`` (domination checks)."""
    a, d = float(a), float(d)
    n1 = np.arange(nmax + 1, dtype=float)[:, None] * np.ones((1, nmax + 1))
    n2 = n1.T
    E = math.exp(-2 * a * d)
    p = np.zeros_like(n1)
    q = np.zeros_like(n1)
    s = np.zeros_like(n1)
    both = (n1 > 0) & (n2 > 0)
    first = (n1 > 0) & (n2 == 0)
    second = (n1 == 0) & (n2 > 0)
    p[both] = (4 * np.exp(-2 * a * d * (n1 + n2 - 1)) * (2 * d * (n2 - 1) + 1 / a)
               * (2 * d * (n1 - 1) + E / a))[both]
    p[first] = (2 * np.exp(-2 * a * d * n1) / a * (2 * d * (n1 - 1) + E / a))[first]
    q[both] = (8 * np.exp(-2 * a * d * (n1 + n2)) * (2 * n2 * d + (1 + E) / (2 * a))
               * (2 * d + 1 / (2 * a)))[both]
    q[first] = (4 * np.exp(-2 * a * d * (n1 + 1)) / a * (2 * d + 1 / a))[first]
    q[second] = (4 * np.exp(-2 * a * d * (n2 + 1)) / a * (2 * d + 1 / a))[second]
    s[second] = (2 * np.exp(-2 * a * d * n2) / a * (2 * d * (n2 - 1) + E / a))[second]
    return p, q, s


def exp_overlap_integrals(n: int, x: float, z: float, a: float, d: float, which: str) -> float:
    """Closed forms of the 1D overlap integrals of ``e^{-a|y-x|} e^{-a|y-z-2dn|}``
    over R (``I1``), ``(-d, d)`` (``I2``) and ``(2dn-d, 2dn+d)`` (``I3``).

    ``J1..J3`` are the same integrals in the second coordinate.
    """
    which = which.upper()
    if which not in {"I1", "I2", "I3", "J1", "J2", "J3"}:
        raise ValueError("which must be one of I1, I2, I3, J1, J2, J3")
    kind = which[1]
    if n < 0:
        raise ValueError("n must be nonnegative")
    if kind == "1":
        t = abs(x - z - 2 * d * n)
        return (t + 1 / a) * math.exp(-a * t)
    if n == 0:
        t = abs(z - x)
        return ((t + 1 / a) * math.exp(-a * t)
                - math.exp(-2 * a * d) / (2 * a) * (math.exp(-a * (x + z)) + math.exp(a * (x + z))))
    if kind == "2":
        return ((d - x + 1 / (2 * a)) * math.exp(-a * (2 * d * n + z - x))
                - math.exp(-a * (2 * d * (n + 1) + z + x)) / (2 * a))
    return ((d + z + 1 / (2 * a)) * math.exp(-a * (2 * d * n + z - x))
            - math.exp(-a * (2 * d * (n + 1) - z - x)) / (2 * a))


# ---------------------------------------------------------------------------
# convolution operators in the scaled basis
# ---------------------------------------------------------------------------

def _sqrt_alpha_bounds(size: int) -> tuple[np.ndarray, np.ndarray]:
    s2 = IntervalScalar.exact(2).sqrt()
    w = alpha(size).ravel()
    lo = np.where(w == 2, s2.lo, np.sqrt(w))
    hi = np.where(w == 2, s2.hi, np.sqrt(w))
    return lo, hi


def scaled_vector(U: D2Sequence, size: int | None = None) -> IntervalMatrix:
    """Column ``S u`` over ``{0..size}^2`` as an interval matrix."""
    size = U.size if size is None else size
    m = U.resize(size).to_interval().as_matrix()
    lo, hi = _sqrt_alpha_bounds(size)
    col = IntervalMatrix(m.mid.reshape(-1, 1), m.radius().reshape(-1, 1))
    return col.scale_rows(lo, hi)


def conv_matrix(V: D2Sequence, rows: int, cols: int) -> IntervalMatrix:
    """Block ``{0..rows}^2 x {0..cols}^2`` of the scaled convolution operator of ``V``.

    Entry ``(k, m)`` encloses ``sqrt(alpha_k / alpha_m) sum_{s in orbit(m)} v(|k - s|)``.
    Each column is a slice sum of the reflected coefficient array.
    """
    Vi = V.to_interval()
    R = rows + cols
    vm = np.zeros((R + 1, R + 1))
    vr = np.zeros((R + 1, R + 1))
    k = min(Vi.size, R) + 1
    vm[:k, :k] = Vi.coeffs[:k, :k]
    vr[:k, :k] = Vi.radius()[:k, :k]
    fm, fr = _convref.reflect(vm), _convref.reflect(vr)
    n_out, n_in = (rows + 1) ** 2, (cols + 1) ** 2
    mid = np.empty((n_out, n_in))
    rad = np.empty((n_out, n_in))
    rlo, rhi = _sqrt_alpha_bounds(rows)
    inv2 = 1 / IntervalScalar.exact(2).sqrt()
    factors = {}
    for am, (clo, chi) in ((1, (1.0, 1.0)), (2, (inv2.lo, inv2.hi)), (4, (0.5, 0.5))):
        f = IntervalArray(rlo, rhi) * IntervalArray(clo, chi)
        fmid = f.lo + 0.5 * (f.hi - f.lo)
        frad = np.where(f.lo == f.hi, 0.0, np.nextafter(np.maximum(fmid - f.lo, f.hi - fmid), np.inf))
        factors[am] = (np.where(f.lo == f.hi, f.lo, fmid), frad, f.hi)
    g3 = gamma(3)
    for m1 in range(cols + 1):
        for m2 in range(cols + 1):
            s_mid = np.zeros((rows + 1, rows + 1))
            s_abs = np.zeros_like(s_mid)
            s_rad = np.zeros_like(s_mid)
            for s1, s2 in _convref.orbit(m1, m2):
                sl = (slice(R - s1, R - s1 + rows + 1), slice(R - s2, R - s2 + rows + 1))
                blk = fm[sl]
                s_mid += blk
                s_abs += np.abs(blk)
                s_rad += fr[sl]
            am = (1 if m1 == 0 else 2) * (1 if m2 == 0 else 2)
            fmid, frad, fhi = factors[am]
            sm = s_mid.ravel()
            sr = _up_arr(s_rad.ravel() + g3 * s_abs.ravel(), 3)
            col = m1 * (cols + 1) + m2
            cm = sm * fmid
            mid[:, col] = cm
            rad[:, col] = _up_arr(sr * fhi + np.abs(sm) * frad + UNIT_ROUNDOFF * np.abs(cm), 4)
    return IntervalMatrix(mid, rad)


def _up_arr(x: np.ndarray, nops: int) -> np.ndarray:
    return np.nextafter(x * (1.0 + (nops + 1) * 2.0**-52), np.inf) + _TINY


def conv_matrix_columnwise(V: D2Sequence, rows: int, cols: int) -> IntervalMatrix:
    """Same block as :func:`conv_matrix`, built by convolving ``V`` with every
    basis vector (reference construction for tests)."""
    Vi = V.to_interval()
    n_out, n_in = (rows + 1) ** 2, (cols + 1) ** 2
    lo = np.empty((n_out, n_in))
    hi = np.empty((n_out, n_in))
    rlo, rhi = _sqrt_alpha_bounds(rows)
    clo, chi = _sqrt_alpha_bounds(cols)
    for m1 in range(cols + 1):
        for m2 in range(cols + 1):
            e = D2Sequence.zeros(cols, V.d, "interval")
            e.coeffs[m1, m2] = 1.0
            c = convolve(Vi, e).resize(rows).as_matrix()
            col = IntervalArray(c.lo.ravel(), c.hi.ravel()) * IntervalArray(rlo, rhi)
            j = m1 * (cols + 1) + m2
            col = col / IntervalArray(clo[j], chi[j])
            lo[:, j], hi[:, j] = col.lo, col.hi
    return IntervalMatrix.from_bounds(lo, hi)


def _box_mask(outer: int, inner: int) -> np.ndarray:
    """Flat mask of ``{0..inner}^2`` inside ``{0..outer}^2``."""
    n = np.arange(outer + 1)
    return ((n[:, None] <= inner) & (n[None, :] <= inner)).ravel()


class _GramNorm:
    """Streaming spectral-norm bound for ``[X_1, X_2, ...]`` with interval blocks.

    ``||X|| <= ||mid X|| + ||rad X||_F`` and ``||mid X||^2 = lambda_max(sum X_j X_j^T)``;
    the float Gram carries an error of at most ``gamma_k ||mid X||_F^2``.
    """

    def __init__(self, n: int):
        self.G = np.zeros((n, n))
        self.k = 0
        self.fro = 0.0
        self.rfro = 0.0

    def add(self, X: IntervalMatrix):
        self.G += X.mid @ X.mid.T
        self.k += X.shape[1] + 1
        self.fro = _up(self.fro + IntervalMatrix(X.mid).fro_sq_upper(), 1)
        if X.rad is not None:
            self.rfro = _up(self.rfro + IntervalMatrix(X.rad).fro_sq_upper(), 1)

    def sq_upper(self) -> float:
        err = _up(gamma(self.k + 2) * self.fro, 2)
        lam = lambda_max_upper(self.G, err)
        nrm = _up(_up(math.sqrt(max(lam, 0.0)), 1) + _up(math.sqrt(self.rfro), 1), 1)
        return _up(nrm * nrm, 1)


def _opnorm_sq(M: IntervalMatrix) -> IntervalScalar:
    b = opnorm2_upper(M).hi
    return IntervalScalar(0.0, _up(b * b, 1))


def l_tail_min(N: int, mu, d) -> IntervalScalar:
    """Lower enclosure of ``min_{n not in I^N} l(n/(2d))``."""
    rho = PI * (N + 1) / _iv(d)
    m = _iv(mu)
    if rho.lo >= 1.0:
        return (rho.sqr() - 1).sqr() + m
    return IntervalScalar(m.lo, m.lo)


# ---------------------------------------------------------------------------
# the bounds
# ---------------------------------------------------------------------------

def _check_B(B: np.ndarray, N: int) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    n = (N + 1) ** 2
    if B.shape != (n, n):
        raise ValueError(f"B must be {n}x{n} for N={N}")
    return B


def compute_Y0(U0: D2Sequence, B: np.ndarray, params: ModelParams) -> IntervalScalar:
    """``2d (||B pi^N F(U0)||^2 + ||pi_N F(U0)||^2)^{1/2}`` with ``F`` enclosed
    on its full support ``{0..3 N0}^2``."""
    N = params.N
    B = _check_B(B, N)
    U = U0.to_interval()
    LU = apply_L(U, params.mu).resize(3 * U.size)
    F = LU + nonlinearity_G(U, params)
    f_head = scaled_vector(F, N)
    head = matmul(IntervalMatrix(B), f_head).fro_sq_upper()
    tail = norm(F.project(N, "tail"), 2)
    tot = IntervalScalar(0.0, _up(head, 1)) + tail.sqr()
    return 2 * _iv(params.d) * _nonneg(tot).sqrt()


def _z2_core(U0: D2Sequence, B: np.ndarray, params: ModelParams, block: int = 2048) -> IntervalScalar:
    """``max{2|nu1|, (||B pi^N V||^2 + ||V||_1^2)^{1/2}}`` with ``V = 2 nu1 delta + 6 nu2 U0``."""
    N = params.N
    U = U0.to_interval()
    V = U.scale(IntervalScalar.exact(6 * params.nu2))
    V = V + D2Sequence.delta(U.d, U.size, "interval").scale(IntervalScalar.exact(2 * params.nu1))
    cols = N + V.size
    # rows pi^N of the symmetric operator = transpose of its columns pi^N
    K = conv_matrix(V, cols, N).T
    gn = _GramNorm((N + 1) ** 2)
    Bm = IntervalMatrix(B)
    for j in range(0, K.shape[1], block):
        gn.add(matmul(Bm, K[:, j:j + block]))
    bv = IntervalScalar(0.0, gn.sq_upper())
    v1 = norm(V, 1)
    two_nu1 = IntervalScalar.exact(abs(2 * params.nu1))
    s = (bv + v1.sqr()).sqrt()
    return IntervalScalar(max(two_nu1.lo, s.lo), max(two_nu1.hi, s.hi))


def compute_Z2(U0: D2Sequence, B: np.ndarray, kappa, params: ModelParams,
               periodic: bool = False, normB: IntervalScalar | None = None,
               core: IntervalScalar | None = None) -> tuple[IntervalScalar, IntervalScalar]:
    """Affine ``Z2(r) = slope r + intercept``.

    Localized: ``3 |nu2| (kappa^2/mu) max{1,||B||} r + (kappa/mu) core``;
    periodic: ``3 |nu2| kappa^2 max{1,||B||} r + kappa core``.
    """
    B = _check_B(B, params.N)
    k = _iv(kappa)
    if normB is None:
        normB = opnorm2_upper(B)
    if core is None:
        core = _z2_core(U0, B, params)
    mb = _max1(normB)
    nu2 = IntervalScalar.exact(abs(params.nu2))
    if periodic:
        return 3 * nu2 * k.sqr() * mb, k * core
    mu = params.iv("mu")
    return 3 * nu2 * (k.sqr() / mu) * mb, (k / mu) * core


def compute_Z1_periodic(V0N: D2Sequence, B: np.ndarray, params: ModelParams,
                        block: int = 2048) -> tuple[IntervalScalar, IntervalScalar]:
    """``(Z1^N, Z1)`` with

    ``Z1^N^2 >= ||pi^N - B (I + V0N L^{-1}) pi^{3N}||^2 + ||(pi^{3N} - pi^N) V0N L^{-1} pi^N||^2``,
    ``Z1^2 >= Z1^N^2 + ||V0N||_1^2 max_{n not in I^N} l^{-2}``.
    """
    N = params.N
    B = _check_B(B, N)
    V = V0N.to_interval().resize(2 * N)
    M = 3 * N
    Kc = conv_matrix(V, M, N)  # rows {0..3N}^2, columns {0..N}^2
    invl = 1.0 / l_diagonal_interval(M, params.mu, params.d)
    il_lo, il_hi = invl.lo.ravel(), invl.hi.ravel()
    P = _box_mask(M, N)
    T = ~P
    KP, KT = Kc[P, :], Kc[T, :]
    del Kc
    A_PP = KP.scale_cols(il_lo[P], il_hi[P])
    A_TP = KT.scale_cols(il_lo[P], il_hi[P])
    n = (N + 1) ** 2
    Bm = IntervalMatrix(B)
    gn = _GramNorm(n)
    X_P = IntervalMatrix(np.eye(n)) - matmul(Bm, IntervalMatrix(np.eye(n)) + A_PP)
    gn.add(X_P)
    del X_P, A_PP
    ilT_lo, ilT_hi = il_lo[T], il_hi[T]
    for j in range(0, KT.shape[0], block):
        A_PT = KT[j:j + block, :].T.scale_cols(ilT_lo[j:j + block], ilT_hi[j:j + block])
        gn.add(-matmul(Bm, A_PT))
    head = IntervalScalar(0.0, gn.sq_upper())
    tail = _opnorm_sq(A_TP) if A_TP.shape[0] else IntervalScalar(0.0, 0.0)
    z1n_sq = head + tail
    Z1N = z1n_sq.sqrt()
    lmin = l_tail_min(N, params.mu, params.d)
    Z1 = (z1n_sq + norm(V, 1).sqr() / lmin.sqr()).sqrt()
    return Z1N, Z1


def _clamped(ip: IntervalScalar, label: str) -> IntervalScalar:
    if ip.lo < 0.0:
        warnings.warn(NegativeInnerProduct(f"{label} enclosure {ip!r} reaches below 0; clamped"),
                      stacklevel=3)
        return _nonneg(ip)
    return ip


def compute_Zu(V0N: D2Sequence, C0hat, a, params: ModelParams
               ) -> tuple[IntervalScalar, IntervalScalar, IntervalScalar]:
    """``(Zu1, Zu2, Zu)`` from the exponential decay ``|f0(x)| <= C0hat e^{-a|x|_1}``.

    ``pi^{4N} E12 = pi^{4N} E1 * pi^{4N} E2`` exactly (tensor structure), so
    ``V * E12`` is computed as ``(V * E1) * E2`` with sparse right factors.
    """
    N = params.N
    V = V0N.to_interval().resize(2 * N)
    ai, d = _iv(a), params.iv("d")
    C0 = _iv(C0hat)
    E1, _, E2 = e_sequences(ai, d, 4 * N)
    E1 = D2Sequence(E1.coeffs, V.d, E1.rad)
    E2 = D2Sequence(E2.coeffs, V.d, E2.rad)
    W1 = convolve(V, E1)
    W2 = convolve(V, E2)
    W12 = convolve(W1, E2)
    ip1, ip2, ip12 = V.inner(W1), V.inner(W2), V.inner(W12)
    area = params.area
    C1, C12, C2 = appendix_constants(ai, d)
    s1 = _clamped(ip1 + ip2, "(V, V*(E1+E2))")
    s2 = _clamped(C1 * ip1 + C12 * ip12 + C2 * ip2, "(V, V*(C1 E1 + C12 E12 + C2 E2))")
    zu1_sq = C0.sqr() * (-2 * ai * d).exp() * area / ai.sqr() * s1
    zu2_sq = zu1_sq + (-4 * ai * d).exp() * C0.sqr() * area * s2
    return zu1_sq.sqrt(), zu2_sq.sqrt(), (zu1_sq + zu2_sq).sqrt()


def assemble_Z1(Z1, Zu, normB, v_tail, mu) -> tuple[IntervalScalar, IntervalScalar]:
    """``calZ1 = Z1 + max{1,||B||}(Zu + ||V0 - V0N||_1/mu)``, ``Z1hat = calZ1 + max{1,||B||} Zu``."""
    mb = _max1(_iv(normB))
    zu = _iv(Zu)
    cal = _iv(Z1) + mb * (zu + _iv(v_tail) / _iv(mu))
    return cal, cal + mb * zu


# ---------------------------------------------------------------------------
# bound set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundSet:
    Y0: IntervalScalar
    Z1N: IntervalScalar
    Z1: IntervalScalar
    Zu1: IntervalScalar
    Zu2: IntervalScalar
    Zu: IntervalScalar
    calZ1: IntervalScalar
    Z1hat: IntervalScalar
    Z2_slope: IntervalScalar
    Z2_intercept: IntervalScalar
    Z2hat_slope: IntervalScalar
    Z2hat_intercept: IntervalScalar
    normB: IntervalScalar
    v_tail: IntervalScalar
    C0hat: IntervalScalar
    kappa: IntervalScalar
    kappa_hat: IntervalScalar

    def as_record(self) -> dict:
        return {f.name: getattr(self, f.name).hex() for f in fields(self)}

    @classmethod
    def from_record(cls, rec: dict) -> "BoundSet":
        return cls(**{f.name: IntervalScalar.fromhex(rec[f.name]) for f in fields(cls)})

    def summary(self) -> dict:
        return {f.name: getattr(self, f.name).hi for f in fields(self)}


def compute_bounds(U0: D2Sequence, B: np.ndarray, params: ModelParams, C0hat, a,
                   known: dict | None = None, on_bound=None) -> BoundSet:
    """All bounds for ``U0`` and ``B``.

    ``known`` maps bound names to previously computed enclosures (checkpoint
    resume); ``on_bound(name, value)`` is called after each new bound.
    """
    have = dict(known or {})

    def step(name, fn):
        if name not in have:
            val = fn()
            have[name] = val
            if on_bound is not None:
                on_bound(name, val)
        return have[name]

    U = U0.to_interval()
    V0 = v0_of(U, params)
    V0N = V0.resize(2 * params.N)
    normB = step("normB", lambda: opnorm2_upper(B))
    v_tail = step("v_tail", lambda: norm(V0.project(2 * params.N, "tail"), 1))
    kappa = step("kappa", lambda: kappa_localized(params.mu))
    kappa_hat = step("kappa_hat", lambda: kappa_periodic(params.mu, params.d))
    Y0 = step("Y0", lambda: compute_Y0(U, B, params))
    core = step("Z2_core", lambda: _z2_core(U, B, params))
    s, c = compute_Z2(U, B, kappa, params, False, normB, core)
    sh, ch = compute_Z2(U, B, kappa_hat, params, True, normB, core)
    z1 = step("Z1_pair", lambda: compute_Z1_periodic(V0N, B, params))
    zu = step("Zu_triple", lambda: compute_Zu(V0N, C0hat, a, params))
    cal, hat = assemble_Z1(z1[1], zu[2], normB, v_tail, params.mu)
    return BoundSet(Y0=Y0, Z1N=z1[0], Z1=z1[1], Zu1=zu[0], Zu2=zu[1], Zu=zu[2], calZ1=cal,
                    Z1hat=hat, Z2_slope=s, Z2_intercept=c, Z2hat_slope=sh, Z2hat_intercept=ch,
                    normB=normB, v_tail=v_tail, C0hat=_iv(C0hat), kappa=kappa, kappa_hat=kappa_hat)
