"""Approximate inverse, radii-polynomial checks and proof certificates.

Conditions checked at a candidate radius ``r`` with ``Z2(r) = slope r + intercept``:

    p(r) = 1/2 Z2(r) r^2 - (1 - Z1) r + Y0 < 0,     Z1 + Z2(r) r < 1.

Both are evaluated in interval arithmetic at a float ``r``.  For ``r > 0`` the
cubic ``p`` is convex, so the verified set is an interval and bisection on its
left end finds the smallest verified radius.
"""

from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .ansatz import trace_check
from .bounds import BoundSet, compute_bounds, conv_matrix
from .d2seq import D2Sequence
from .errors import CertificateSchemaError, CertificationFailed, Infeasible, SingularTruncation
from .interval import IntervalMatrix, IntervalScalar
from .shmodel import ModelParams, l_diagonal, v0_of

__all__ = [
    "RadiiResult",
    "ProofCertificate",
    "build_BN",
    "bn_residual",
    "radii_check",
    "radii_expressions",
    "branch_check",
    "localized_check",
    "prove",
    "emit_certificate",
    "read_certificate",
    "verify_certificate",
]

log = logging.getLogger(__name__)

CERT_MAGIC = "SHCERT v1"
PRECISION = "binary64, round-to-nearest with outward error terms"


# ---------------------------------------------------------------------------
# approximate inverse
# ---------------------------------------------------------------------------

def _dfl_matrix(U0: D2Sequence, params: ModelParams) -> np.ndarray:
    """Float ``pi^N (I + V0 L^{-1}) pi^N`` in the scaled basis."""
    N = params.N
    V0 = v0_of(U0.to_float(), params)
    K = conv_matrix(V0.resize(2 * N), N, N).mid
    invl = 1.0 / l_diagonal(N, params.mu, params.d).ravel()
    A = K * invl[None, :]
    A[np.diag_indices_from(A)] += 1.0
    return A


def build_BN(U0: D2Sequence, params: ModelParams, cond_limit: float = 1e12) -> IntervalMatrix:
    """Thin interval wrap of the float inverse of ``pi^N DF(U0) L^{-1} pi^N``.

    Any inaccuracy of the inverse is absorbed by ``Z1^N``; nothing here is trusted.
    """
    A = _dfl_matrix(U0, params)
    try:
        cond = np.linalg.cond(A)
        B = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularTruncation(f"inverse of the truncated operator failed: {exc}") from None
    if not math.isfinite(cond) or cond > cond_limit or not np.all(np.isfinite(B)):
        raise SingularTruncation(f"truncated operator is ill conditioned (cond ~ {cond:.3e})")
    log.info("B^N built: n=%d, cond=%.3e", A.shape[0], cond)
    return IntervalMatrix(B)


def bn_residual(B, U0: D2Sequence, params: ModelParams) -> float:
    """Float ``||I - B pi^N DF(U0) L^{-1} pi^N||_2`` (diagnostic only)."""
    Bm = B.mid if isinstance(B, IntervalMatrix) else np.asarray(B)
    A = _dfl_matrix(U0, params)
    return float(np.linalg.norm(np.eye(A.shape[0]) - Bm @ A, 2))


# ---------------------------------------------------------------------------
# radii polynomial
# ---------------------------------------------------------------------------

def _iv(x) -> IntervalScalar:
    if isinstance(x, IntervalScalar):
        return x
    if isinstance(x, float):
        return IntervalScalar.exact(Fraction(repr(float(x))))
    return IntervalScalar.exact(Fraction(x))


@dataclass(frozen=True)
class RadiiResult:
    r0: float
    poly: IntervalScalar     # enclosure of p(r0)
    second: IntervalScalar   # enclosure of Z1 + Z2(r0) r0
    steps: int

    def as_record(self) -> dict:
        return {"r0": self.r0.hex(), "poly": self.poly.hex(), "second": self.second.hex()}


def radii_expressions(Y0, Z1, slope, intercept, r) -> tuple[IntervalScalar, IntervalScalar]:
    """Interval enclosures of ``p(r)`` and ``Z1 + Z2(r) r``."""
    Y0, Z1, slope, intercept = (_iv(x) for x in (Y0, Z1, slope, intercept))
    ri = _iv(r)
    z2 = slope * ri + intercept
    poly = 0.5 * z2 * ri.sqr() - (1 - Z1) * ri + Y0
    return poly, Z1 + z2 * ri


def _verified(Y0, Z1, slope, intercept, r) -> bool:
    p, s = radii_expressions(Y0, Z1, slope, intercept, r)
    return p.hi < 0.0 and s.hi < 1.0


def radii_check(Y0, Z1, slope, intercept, steps: int = 64) -> RadiiResult:
    """Smallest verified radius found by ``steps`` bisections.

    Raises :class:`Infeasible` with ``margin > 0`` measuring how far the best
    candidate is from satisfying the conditions.
    """
    Y0, Z1, slope, intercept = (_iv(x) for x in (Y0, Z1, slope, intercept))
    if min(Y0.lo, slope.lo, intercept.lo) < 0:
        raise ValueError("bounds must be nonnegative")
    if Z1.hi >= 1.0:
        raise Infeasible(f"Z1 = {Z1.hi!r} is not below 1", Z1.hi - 1.0)
    # midpoint surrogate 1/2 c r^2 - g r + y with c = Z2 at the vertex
    g, y = 1.0 - Z1.mid, Y0.mid
    c = intercept.mid
    for _ in range(3):
        rv = g / c if c > 0 else math.inf
        c = intercept.mid + slope.mid * min(rv, 2 * y / g if g > 0 else 0.0)
    disc = g * g - 2 * c * y
    candidates = []
    if disc > 0:
        r_minus = 2 * y / (g + math.sqrt(disc))
        r_plus = (g + math.sqrt(disc)) / c if c > 0 else math.inf
        candidates += [r_minus * (1 + 2.0**-k) for k in (40, 30, 20, 10, 5, 3, 2, 1)]
        if math.isfinite(r_plus):
            candidates.append(math.sqrt(r_minus * r_plus) if r_minus > 0 else r_plus / 2)
    if y == 0.0:
        candidates.append(g / c / 2 if c > 0 else 1.0)
    if c > 0:
        candidates.append(g / c)
    hi = next((r for r in candidates if r > 0 and math.isfinite(r)
               and _verified(Y0, Z1, slope, intercept, r)), None)
    if hi is None:
        r_best = max((r for r in candidates if r > 0 and math.isfinite(r)), default=g / c if c > 0 else 1.0)
        best = min((radii_expressions(Y0, Z1, slope, intercept, r) for r in
                    (r_best, g / c if c > 0 else r_best)), key=lambda e: e[0].hi)
        margin = max(best[0].hi, best[1].hi - 1.0)
        raise Infeasible(f"no radius satisfies both conditions (best p(r) <= {best[0].hi!r}, "
                         f"Z1 + Z2(r) r <= {best[1].hi!r})", margin)
    lo = 0.0
    for _ in range(steps):
        mid = lo + 0.5 * (hi - lo)
        if mid <= lo or mid >= hi:
            break
        if _verified(Y0, Z1, slope, intercept, mid):
            hi = mid
        else:
            lo = mid
    p, s = radii_expressions(Y0, Z1, slope, intercept, hi)
    if not (p.hi < 0.0 and s.hi < 1.0):
        raise CertificationFailed("bisection ended on an unverified radius", (hi, hi))
    return RadiiResult(hi, p, s, steps)


def branch_check(bounds: BoundSet, steps: int = 64) -> RadiiResult:
    """Radii check on the hatted (periodic branch) bounds."""
    return radii_check(bounds.Y0, bounds.Z1hat, bounds.Z2hat_slope, bounds.Z2hat_intercept, steps)


def localized_check(bounds: BoundSet, steps: int = 64) -> RadiiResult:
    return radii_check(bounds.Y0, bounds.calZ1, bounds.Z2_slope, bounds.Z2_intercept, steps)


# ---------------------------------------------------------------------------
# certificate
# ---------------------------------------------------------------------------

@dataclass
class ProofCertificate:
    pattern: str
    params: ModelParams
    u0_sha256: str
    bounds: BoundSet
    localized: str                 # "proved" or "failed: <reason>"
    branch: str                    # "proved", "failed: <reason>" or "skipped"
    r0: float | None = None
    r0_branch: float | None = None
    threads: int = 1
    config: dict = field(default_factory=dict)
    seconds: float = field(default=0.0, compare=False)

    @property
    def proved(self) -> bool:
        return self.localized == "proved" and self.branch in ("proved", "skipped")

    def lines(self) -> list[str]:
        p = self.params
        out = [CERT_MAGIC, f"pattern={self.pattern}"]
        out += [f"param.{k}={v}" for k, v in p.as_dict().items()]
        out.append(f"u0_sha256={self.u0_sha256}")
        out += [f"bound.{k}={v}" for k, v in self.bounds.as_record().items()]
        out.append(f"status.localized={self.localized}")
        out.append(f"status.branch={self.branch}")
        out.append(f"r0={'none' if self.r0 is None else self.r0.hex()}")
        out.append(f"r0_branch={'none' if self.r0_branch is None else self.r0_branch.hex()}")
        out.append(f"precision={PRECISION}")
        out.append(f"threads={self.threads}")
        out += [f"config.{k}={v}" for k, v in sorted(self.config.items())]
        return out

    def text(self) -> str:
        body = "\n".join(self.lines()) + "\n"
        return body + f"digest={hashlib.sha256(body.encode()).hexdigest()}\n"


def _status(fn, bounds: BoundSet) -> tuple[str, float | None]:
    try:
        res = fn(bounds)
    except Infeasible as exc:
        return f"failed: infeasible, margin {exc.margin:.6e}", None
    return "proved", res.r0


def prove(U0: D2Sequence, params: ModelParams, C0hat, a, *, pattern: str = "unlabelled",
          u0_sha256: str = "", branch: bool = True, threads: int = 1, config: dict | None = None,
          known: dict | None = None, on_bound=None) -> ProofCertificate:
    """Full certification of an exact, trace-free ``U0``."""
    t0 = time.perf_counter()
    trace_check(U0)
    if not any(U0.coeffs.ravel()):
        raise Infeasible("U0 = 0 is the trivial solution; nothing to certify")
    B = build_BN(U0, params)
    log.info("B^N float residual %.3e", bn_residual(B, U0, params))
    bounds = compute_bounds(U0, B.mid, params, C0hat, a, known=known, on_bound=on_bound)
    loc, r0 = _status(localized_check, bounds)
    if branch:
        br, rb = _status(branch_check, bounds)
    else:
        br, rb = "skipped", None
    config = {str(k): str(v) for k, v in (config or {}).items()}
    return ProofCertificate(pattern, params, u0_sha256, bounds, loc, br, r0, rb, threads,
                            config, time.perf_counter() - t0)


def emit_certificate(cert: ProofCertificate, path) -> None:
    Path(path).write_text(cert.text())


_REQUIRED = ("pattern", "u0_sha256", "status.localized", "status.branch", "r0", "r0_branch",
             "precision", "threads", "digest")


def read_certificate(path) -> ProofCertificate:
    """Parse a certificate, checking schema and digest."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != CERT_MAGIC:
        raise CertificateSchemaError(f"expected first line {CERT_MAGIC!r}")
    kv = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise CertificateSchemaError(f"malformed line {ln!r}")
        k, v = ln.split("=", 1)
        if k in kv:
            raise CertificateSchemaError(f"duplicate key {k}")
        kv[k] = v
    bound_names = [f.name for f in BoundSet.__dataclass_fields__.values()]
    missing = [k for k in _REQUIRED if k not in kv]
    missing += [f"bound.{n}" for n in bound_names if f"bound.{n}" not in kv]
    missing += [f"param.{n}" for n in ("mu", "nu1", "nu2", "d", "N", "N0") if f"param.{n}" not in kv]
    if missing:
        raise CertificateSchemaError(f"missing fields: {', '.join(missing)}")
    body = text[:text.rindex("digest=")]
    if hashlib.sha256(body.encode()).hexdigest() != kv["digest"]:
        raise CertificateSchemaError("digest does not match certificate body")
    try:
        params = ModelParams(*(Fraction(kv[f"param.{n}"]) for n in ("mu", "nu1", "nu2", "d")),
                             int(kv["param.N"]), int(kv["param.N0"]))
        bounds = BoundSet.from_record({n: kv[f"bound.{n}"] for n in bound_names})
        r0 = None if kv["r0"] == "none" else float.fromhex(kv["r0"])
        rb = None if kv["r0_branch"] == "none" else float.fromhex(kv["r0_branch"])
        threads = int(kv["threads"])
    except (ValueError, TypeError) as exc:
        raise CertificateSchemaError(f"bad field value: {exc}") from None
    config = {k[7:]: v for k, v in kv.items() if k.startswith("config.")}
    return ProofCertificate(kv["pattern"], params, kv["u0_sha256"], bounds, kv["status.localized"],
                            kv["status.branch"], r0, rb, threads, config)


def verify_certificate(path, u0_path=None) -> tuple[bool, list[str]]:
    """Re-check a certificate from its stored enclosures.

    The radii checks are re-run on the stored bounds; statuses and radii must
    match exactly, and every stored radius must satisfy both conditions.
    """
    problems = []
    cert = read_certificate(path)
    if u0_path is not None:
        from .seqio import file_sha256
        if file_sha256(u0_path) != cert.u0_sha256:
            problems.append("U0 file hash differs from the certified one")
    b = cert.bounds
    for label, fn, status, r, args in (
            ("localized", localized_check, cert.localized, cert.r0,
             (b.Y0, b.calZ1, b.Z2_slope, b.Z2_intercept)),
            ("branch", branch_check, cert.branch, cert.r0_branch,
             (b.Y0, b.Z1hat, b.Z2hat_slope, b.Z2hat_intercept))):
        if status == "skipped":
            continue
        new_status, new_r = _status(fn, b)
        if new_status != status:
            problems.append(f"{label}: stored status {status!r}, recomputed {new_status!r}")
        if new_r != r:
            problems.append(f"{label}: stored r0 {r!r}, recomputed {new_r!r}")
        if r is not None and not _verified(*args, r):
            problems.append(f"{label}: stored r0 does not satisfy the radii conditions")
    return not problems, problems
