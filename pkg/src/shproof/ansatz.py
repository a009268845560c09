"""Numerical construction of the approximate pattern.

Three non-rigorous stages followed by one exact stage:

1. ``solve_radial``: finite differences in ``r`` for the angular modes of
   ``v(r, theta) = sum_n v_n(r) cos(s n theta)``, nonlinearity by collocation
   in ``theta``, damped Newton with a sparse Jacobian.
2. ``disk_to_square_fourier``: trapezoidal cosine coefficients on the square.
3. ``galerkin_newton``: Newton on the Galerkin projection ``F^{N0}``.
4. ``build_trace_and_project``: projection into the kernel of the order-4 trace,
   carried out in rational arithmetic so the trace vanishes exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _convref
from .d2seq import D2Sequence, alpha, convolve, convolve_fast, from_grid
from .errors import (
    NewtonDiverged,
    NoConvergence,
    RankCertificationFailed,
    SingularJacobian,
    TraceCheckFailed,
)
from .interval import IntervalMatrix, NotCertifiablyInvertible, certify_invertible, matmul
from .shmodel import ModelParams, l_diagonal, residual_F

__all__ = [
    "RadialConfig",
    "RadialAnsatz",
    "solve_radial",
    "disk_to_square_fourier",
    "galerkin_newton",
    "TraceSystem",
    "trace_matrix",
    "trace_rows",
    "default_weights",
    "build_trace_and_project",
    "trace_check",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# radial stage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialConfig:
    """Mesh, symmetry and seed of the radial solve.

    The seed is ``amplitude sech(r/width) sum_k cos(r cos(theta - 2 pi k/s))``
    over ``s/2`` wave directions (two for squares, three for hexagons).
    """

    R: float
    N1: int = 6
    s: int = 4
    points: int = 2000
    amplitude: float = 0.5
    width: float = 8.0
    tol: float = 1e-9
    max_iter: int = 60

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class RadialAnsatz:
    config: RadialConfig
    r: np.ndarray
    modes: np.ndarray  # (N1 + 1, points)
    residual: float
    iterations: int

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Values at Cartesian points (zero for ``r >= R``)."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        rr = np.hypot(x, y)
        th = np.arctan2(y, x)
        out = np.zeros(np.broadcast(rr, th).shape)
        for n, vn in enumerate(self.modes):
            prof = np.interp(rr, self.r, vn, right=0.0)
            out = out + prof * np.cos(self.config.s * n * th)
        return np.where(rr < self.config.R, out, 0.0)


def _radial_laplacian(points: int, h: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Cell-centred ``(1/r)(r v')'`` with zero flux at 0 and ``v(R) = 0``."""
    r = (np.arange(points) + 0.5) * h
    rp = r + 0.5 * h
    rm = r - 0.5 * h
    main = -(rp + rm)
    main[-1] -= rp[-1]  # ghost value -v at the outer wall
    A = sp.diags([rm[1:], main, rp[:-1]], [-1, 0, 1], format="csr")
    return sp.diags(1.0 / (r * h * h)) @ A, r


def _angular(N1: int) -> tuple[np.ndarray, np.ndarray]:
    nth = 2 * N1 + 2
    phi = (np.arange(nth) + 0.5) * np.pi / nth
    C = np.cos(np.outer(phi, np.arange(N1 + 1)))
    w = np.full(N1 + 1, 2.0)
    w[0] = 1.0
    return C, (w[:, None] * C.T) / nth


def _seed(cfg: RadialConfig, r: np.ndarray, C: np.ndarray, Pj: np.ndarray) -> np.ndarray:
    nth = C.shape[0]
    theta = (np.arange(nth) + 0.5) * np.pi / (nth * cfg.s)
    dirs = [2 * np.pi * k / cfg.s for k in range(max(cfg.s // 2, 1))]
    wave = sum(np.cos(np.outer(r, np.cos(theta - b))) for b in dirs)
    vals = cfg.amplitude / np.cosh(r / cfg.width)[:, None] * wave
    return (Pj @ vals.T)


def solve_radial(params: ModelParams | tuple, cfg: RadialConfig, seed: np.ndarray | None = None) -> RadialAnsatz:
    """Solve the Galerkin-in-angle, finite-difference-in-radius system.

    ``seed`` overrides the default seed; it has shape ``(N1 + 1, points)``.
    """
    mu, nu1, nu2 = (float(params.mu), float(params.nu1), float(params.nu2)) if isinstance(
        params, ModelParams) else tuple(float(p) for p in params)
    Nr, N1, s = cfg.points, cfg.N1, cfg.s
    h = cfg.R / Nr
    D, r = _radial_laplacian(Nr, h)
    I = sp.identity(Nr, format="csr")
    blocks = []
    for n in range(N1 + 1):
        Dn = D - sp.diags((s * n / r) ** 2)
        Q = I + Dn
        blocks.append((Q @ Q + mu * I).tocsr())
    Lin = sp.block_diag(blocks, format="csr")
    C, Pj = _angular(N1)
    v = _seed(cfg, r, C, Pj) if seed is None else np.array(seed, dtype=float)
    if v.shape != (N1 + 1, Nr):
        raise ValueError("seed must have shape (N1 + 1, points)")
    x = v.ravel()

    def residual(x):
        V = C @ x.reshape(N1 + 1, Nr)
        return Lin @ x + (Pj @ (nu1 * V**2 + nu2 * V**3)).ravel()

    res = residual(x)
    nrm = float(np.max(np.abs(res)))
    it = 0
    while nrm > cfg.tol:
        if it >= cfg.max_iter:
            raise NoConvergence("radial Newton did not converge", nrm)
        V = C @ x.reshape(N1 + 1, Nr)
        dG = 2 * nu1 * V + 3 * nu2 * V**2  # (nth, Nr)
        J = np.einsum("nj,ji,jm->nmi", Pj, dG, C)  # per-radius coupling blocks
        Jn = sp.bmat([[sp.diags(J[n, m]) for m in range(N1 + 1)] for n in range(N1 + 1)], format="csr")
        try:
            dx = spla.spsolve((Lin + Jn).tocsc(), -res)
        except RuntimeError as exc:  # pragma: no cover - singular factorisation
            raise NoConvergence(f"radial Jacobian solve failed: {exc}", nrm) from None
        if not np.all(np.isfinite(dx)):
            raise NoConvergence("radial Jacobian is singular", nrm)
        t = 1.0
        while True:
            cand = x + t * dx
            rc = residual(cand)
            nc = float(np.max(np.abs(rc)))
            if nc < nrm or t < 1e-4:
                break
            t *= 0.5
        x, res, nrm = cand, rc, nc
        it += 1
        log.debug("radial Newton %d: residual %.3e (step %.3g)", it, nrm, t)
    return RadialAnsatz(cfg, r, x.reshape(N1 + 1, Nr), nrm, it)


def disk_to_square_fourier(v, d, N0: int, points: int | None = None) -> D2Sequence:
    """Trapezoidal cosine coefficients on ``(-d, d)^2`` of a function given by
    ``v(x, y)`` (vectorised callable or :class:`RadialAnsatz`)."""
    f = v.evaluate if isinstance(v, RadialAnsatz) else v
    points = max(4 * N0, 64) if points is None else points
    xs = float(d) * np.arange(points + 1) / points
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return from_grid(np.asarray(f(X, Y), dtype=float), d, N0)


# ---------------------------------------------------------------------------
# Galerkin Newton
# ---------------------------------------------------------------------------

def _conv_matrix_float(W: np.ndarray, size: int) -> np.ndarray:
    """Unscaled ``K[k, m] = sum_{s in orbit(m)} w(|k - s|)`` on ``{0..size}^2``."""
    R = 2 * size
    w = np.zeros((R + 1, R + 1))
    k = min(W.shape[0] - 1, R) + 1
    w[:k, :k] = W[:k, :k]
    full = _convref.reflect(w)
    n = (size + 1) ** 2
    K = np.empty((n, n))
    for m1 in range(size + 1):
        for m2 in range(size + 1):
            col = np.zeros((size + 1, size + 1))
            for s1, s2 in _convref.orbit(m1, m2):
                col += full[R - s1:R - s1 + size + 1, R - s2:R - s2 + size + 1]
            K[:, m1 * (size + 1) + m2] = col.ravel()
    return K


def galerkin_newton(U: D2Sequence, params: ModelParams, tol: float = 5e-13, max_iter: int = 30,
                    dense_limit: int = 6000) -> tuple[D2Sequence, dict]:
    """Newton on ``F^{N0}(U) = pi^{N0} F(U)``; returns the refined sequence and a report.

    The residual is measured in the weighted l^2 norm.  Growth over three
    consecutive steps raises :class:`NewtonDiverged`.
    """
    N0 = U.size
    mu, nu1, nu2 = float(params.mu), float(params.nu1), float(params.nu2)
    d = U.d
    u = U.to_float().coeffs.copy()
    ld = l_diagonal(N0, mu, d)
    w = alpha(N0)

    def F(c):
        return residual_F(D2Sequence(c, d), params, fast=True).coeffs[:N0 + 1, :N0 + 1]

    def wnorm(c):
        return float(np.sqrt(np.sum(w * c * c)))

    r = F(u)
    hist = [wnorm(r)]
    it = 0
    grow = 0
    while hist[-1] > tol:
        if it >= max_iter:
            raise NoConvergence("Galerkin Newton did not reach tolerance", hist[-1])
        S = D2Sequence(u, d)
        dG = (convolve_fast(S, size=2 * N0).scale(2 * nu1)
              + convolve_fast(S, S, size=2 * N0).scale(3 * nu2)).coeffs
        n = (N0 + 1) ** 2
        if n <= dense_limit:
            J = _conv_matrix_float(dG, N0)
            J[np.diag_indices(n)] += ld.ravel()
            try:
                lu = scipy.linalg.lu_factor(J, check_finite=True)
            except (ValueError, np.linalg.LinAlgError):
                raise SingularJacobian("Galerkin Jacobian is singular") from None
            if np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.max(np.abs(np.diag(lu[0]))):
                raise SingularJacobian("Galerkin Jacobian is numerically singular")
            du = scipy.linalg.lu_solve(lu, -r.ravel()).reshape(N0 + 1, N0 + 1)
        else:
            dGs = D2Sequence(dG, d)

            def mv(x):
                X = D2Sequence(x.reshape(N0 + 1, N0 + 1), d)
                return (ld * X.coeffs + convolve_fast(dGs, X, size=N0).coeffs).ravel()

            A = spla.LinearOperator((n, n), matvec=mv)
            M = spla.LinearOperator((n, n), matvec=lambda x: x / ld.ravel())
            sol, info = spla.gmres(A, -r.ravel(), M=M, rtol=1e-14, restart=200, maxiter=50)
            if info != 0:
                raise SingularJacobian(f"GMRES failed to converge (info={info})")
            du = sol.reshape(N0 + 1, N0 + 1)
        u = u + du
        r = F(u)
        hist.append(wnorm(r))
        it += 1
        log.debug("Galerkin Newton %d: residual %.3e", it, hist[-1])
        grow = grow + 1 if hist[-1] > hist[-2] else 0
        if grow >= 3 or not math.isfinite(hist[-1]):
            raise NewtonDiverged("residual grew over three consecutive steps", hist[-1])
    return D2Sequence(u, d), {"iterations": it, "residuals": hist}


# ---------------------------------------------------------------------------
# trace kernel projection
# ---------------------------------------------------------------------------

def _alpha1(N0: int) -> np.ndarray:
    a = np.full(N0 + 1, 2)
    a[0] = 1
    return a


def _p_rows(N0: int) -> list[list[int]]:
    """Rows ``(-1)^n alpha1(n) n^j`` for ``j = 0, 2`` (exact integers)."""
    a = _alpha1(N0)
    return [[int((-1) ** n * a[n] * n**j) for n in range(N0 + 1)] for j in (0, 2)]


def trace_matrix(N0: int) -> np.ndarray:
    """Integer matrix of the trace with the factors ``(pi/d)^j`` removed.

    Row blocks ``T_{1,0}, T_{1,2}, T_{2,0}, T_{2,2}`` of ``N0 + 1`` rows each;
    columns follow the row-major flattening of ``{0..N0}^2``.
    """
    n = N0 + 1
    a = _alpha1(N0)
    sgn = np.array([(-1) ** k for k in range(n)])
    idx = np.arange(n)
    M = np.zeros((4 * n, n * n), dtype=np.int64)
    for b, (axis, j) in enumerate(((1, 0), (1, 2), (2, 0), (2, 2))):
        for r in range(n):
            row = np.zeros((n, n), dtype=np.int64)
            if axis == 1:  # sum over n1 at fixed n2 = r
                row[:, r] = sgn * a * a[r] * idx**j
            else:  # sum over n2 at fixed n1 = r
                row[r, :] = sgn * a[r] * a * idx**j
            M[b * n + r] = row.ravel()
    return M


def trace_rows(N0: int, drop: tuple[int, int, int, int] | None = None) -> np.ndarray:
    """Indices of the rows kept after dropping one row per block
    (default: the last row of each block)."""
    n = N0 + 1
    drop = (N0, N0, N0, N0) if drop is None else drop
    keep = [b * n + r for b in range(4) for r in range(n) if r != drop[b]]
    return np.array(keep)


def default_weights(N0: int, d) -> list[Fraction]:
    """Positive rational 1D weights ``~ 1/(1 + (pi n/d)^2)^2``; the 2D weight is
    their tensor product."""
    out = []
    for n in range(N0 + 1):
        val = 1.0 / (1.0 + (math.pi * n / float(d)) ** 2) ** 2
        out.append(Fraction(val).limit_denominator(1 << 40))
    return out


@dataclass
class TraceSystem:
    N0: int
    drop: tuple[int, int, int, int]
    weights: list[Fraction]
    residual_bound: float  # certified ||I - C M D M^T||_inf
    tries: int = 1
    attempts: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"N0": self.N0, "drop": list(self.drop), "residual_bound": self.residual_bound,
                "tries": self.tries, "weights": [str(w) for w in self.weights]}


def _certify_trim(M: np.ndarray, weights: list[Fraction], keep: np.ndarray) -> float:
    Mk = M[keep].astype(float)
    wd = np.array([float(w) for w in weights])
    W = np.kron(wd, wd)
    wlo = np.nextafter(W, -np.inf)
    whi = np.nextafter(W, np.inf)
    A = IntervalMatrix(Mk).scale_cols(wlo, whi)
    K = matmul(A, IntervalMatrix(Mk.T))
    bound, _ = certify_invertible(K)
    return bound.hi


def _candidate_drops(N0: int):
    base = [N0, N0, N0, N0]
    yield tuple(base)
    for b in range(4):
        for r in range(N0 - 1, -1, -1):
            c = list(base)
            c[b] = r
            yield tuple(c)


def _project_exact(U: np.ndarray, weights: list[Fraction]) -> np.ndarray:
    """``Pi U Pi^T`` with ``Pi = I - w P^T (P w P^T)^{-1} P`` in exact arithmetic."""
    n = U.shape[0]
    P = _p_rows(n - 1)
    w = weights
    G = [[sum(Fraction(P[i][k]) * w[k] * P[j][k] for k in range(n)) for j in range(2)] for i in range(2)]
    det = G[0][0] * G[1][1] - G[0][1] * G[1][0]
    if det == 0:
        raise RankCertificationFailed("trace Gram matrix is singular")
    Gi = [[G[1][1] / det, -G[0][1] / det], [-G[1][0] / det, G[0][0] / det]]
    WPt = [[w[k] * P[i][k] for i in range(2)] for k in range(n)]  # n x 2

    def left(X):
        # X - w P^T G^{-1} (P X)
        PX = [[sum(P[i][k] * X[k][c] for k in range(n) if P[i][k]) for c in range(n)] for i in range(2)]
        Y = [[Gi[i][0] * PX[0][c] + Gi[i][1] * PX[1][c] for c in range(n)] for i in range(2)]
        return [[X[k][c] - WPt[k][0] * Y[0][c] - WPt[k][1] * Y[1][c] for c in range(n)] for k in range(n)]

    X = [[Fraction(x) for x in row] for row in U.tolist()] if U.dtype != object else [list(r) for r in U]
    X = left(X)
    Xt = [list(c) for c in zip(*X)]
    Xt = left(Xt)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Xt[j][i]
    return out


def build_trace_and_project(U: D2Sequence, weights: list[Fraction] | None = None,
                            drop: tuple[int, int, int, int] | None = None,
                            search: bool = True) -> tuple[D2Sequence, TraceSystem]:
    """Project ``U`` into the kernel of the trace operator, exactly.

    The trimmed trace matrix ``M`` is certified full rank through
    ``certify_invertible(M D M^T)``.  With a separable weight ``D = w (x) w`` the
    weighted projection ``U - D M^T (M D M^T)^{-1} M U`` factorises as
    ``Pi U Pi^T`` with a rank-two one-dimensional correction, which is evaluated
    in rational arithmetic.
    """
    N0 = U.size
    weights = default_weights(N0, U.d) if weights is None else [Fraction(w) for w in weights]
    if len(weights) != N0 + 1 or any(w <= 0 for w in weights):
        raise ValueError("need N0 + 1 positive weights")
    M = trace_matrix(N0)
    candidates = [tuple(drop)] if drop is not None else list(_candidate_drops(N0))
    if not search:
        candidates = candidates[:1]
    attempts = []
    system = None
    for c in candidates:
        try:
            b = _certify_trim(M, weights, trace_rows(N0, c))
        except NotCertifiablyInvertible as exc:
            attempts.append((c, exc.bound))
            continue
        system = TraceSystem(N0, c, weights, b, len(attempts) + 1, attempts)
        break
    if system is None:
        raise RankCertificationFailed(f"no row trim gave a certified full-rank trace matrix "
                                      f"({len(attempts)} tried)")
    if U.kind == "exact":
        src = U.coeffs
    else:
        src = U.to_float().coeffs
    U0 = D2Sequence(_project_exact(src, weights), U.d)
    trace_check(U0)
    return U0, system


def trace_check(U: D2Sequence) -> None:
    """Raise :class:`TraceCheckFailed` unless ``M~ U = 0`` holds exactly."""
    if U.kind != "exact":
        raise TraceCheckFailed("exact (rational) coefficients required")
    P = _p_rows(U.size)
    c = U.coeffs
    n = U.size + 1
    for p in P:
        for r in range(n):
            if sum(p[k] * c[k, r] for k in range(n) if p[k]) != 0:
                raise TraceCheckFailed(f"trace row with fixed n2={r} is nonzero")
            if sum(p[k] * c[r, k] for k in range(n) if p[k]) != 0:
                raise TraceCheckFailed(f"trace row with fixed n1={r} is nonzero")
