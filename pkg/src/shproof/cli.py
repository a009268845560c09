"""Command line front end.

Subcommands: ``construct``, ``certify``, ``c0``, ``export-grid``, ``verify``.
Exit codes: 0 proved or success, 1 infeasible or failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .interval import IntervalScalar

log = logging.getLogger("shproof")

PATTERN_SYMMETRY = {"square": 4, "hexagon": 6, "hex": 6, "octagon": 8, "spot": 4}


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _default_threads() -> int:
    env = os.environ.get("SHPROOF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring SHPROOF_THREADS=%r", env)
    return os.cpu_count() or 1


def _config_echo(args) -> dict:
    # file locations are left out so records do not depend on where a run happens;
    # the input pattern is identified by its hash instead
    skip = {"func", "config", "verbose", "out", "u0", "checkpoint"}
    return {k: str(v) for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


def _load_config_file(args, parser, argv) -> None:
    """Apply a JSON config file; options given on the command line take precedence."""
    if not getattr(args, "config", None):
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file: {exc}")
    explicit = {a[2:].split("=", 1)[0].replace("-", "_") for a in argv if a.startswith("--")}
    for k, v in data.items():
        key = k.replace("-", "_")
        if not hasattr(args, key):
            parser.error(f"unknown config key {k!r}")
        if key not in explicit:
            setattr(args, key, v)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_construct(args) -> int:
    from .ansatz import (RadialConfig, build_trace_and_project, disk_to_square_fourier,
                         galerkin_newton, solve_radial)
    from .seqio import write_shd2, write_shd2x
    from .shmodel import ModelParams

    params = ModelParams(_frac(str(args.mu)), _frac(str(args.nu1)), _frac(str(args.nu2)),
                         _frac(str(args.d)), 0, int(args.N0))
    s = args.s if args.s is not None else PATTERN_SYMMETRY[args.pattern]
    R = float(args.R) if args.R is not None else float(params.d) + 10.0
    cfg = RadialConfig(R=R, N1=args.N1, s=s, points=args.points, amplitude=args.amplitude,
                       width=args.width)
    log.info("radial solve: %s", cfg.as_dict())
    ra = solve_radial(params, cfg)
    log.info("radial Newton: %d iterations, residual %.3e", ra.iterations, ra.residual)
    U = disk_to_square_fourier(ra, params.d, params.N0)
    Ug, report = galerkin_newton(U, params)
    log.info("Galerkin Newton: %d iterations, residual %.3e", report["iterations"], report["residuals"][-1])
    U0, system = build_trace_and_project(Ug)
    log.info("trace projection: rows dropped %s after %d tries", system.drop, system.tries)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_shd2(out.with_suffix(".shd2"), Ug, params)
    write_shd2x(out.with_suffix(".shd2x"), U0, params)
    run = {"config": _config_echo(args), "radial": {**cfg.as_dict(), "iterations": ra.iterations,
                                                    "residual": ra.residual},
           "galerkin": {"iterations": report["iterations"],
                        "residuals": [float(r) for r in report["residuals"]]},
           "trace": system.as_dict()}
    out.with_suffix(".run.json").write_text(json.dumps(run, indent=1, sort_keys=True, default=str) + "\n")
    print(f"wrote {out.with_suffix('.shd2')} and {out.with_suffix('.shd2x')}")
    return 0


def _ckpt_key(u0_hash: str, params, C0hat: float) -> str:
    text = json.dumps([u0_hash, params.as_dict(), C0hat.hex()], sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _ckpt_load(path: Path, key: str) -> dict:
    if not path.exists():
        return {}
    data = json.loads(path.read_text())
    if data.get("key") != key:
        log.warning("checkpoint %s belongs to a different run; ignoring it", path)
        return {}
    out = {}
    for name, v in data.get("bounds", {}).items():
        out[name] = (tuple(IntervalScalar.fromhex(x) for x in v) if isinstance(v, list)
                     else IntervalScalar.fromhex(v))
    log.info("resuming from checkpoint with %s", ", ".join(out) or "nothing")
    return out


def _ckpt_saver(path: Path, key: str, have: dict):
    def save(name, value):
        have[name] = ([x.hex() for x in value] if isinstance(value, tuple) else value.hex())
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps({"key": key, "bounds": have}, indent=1, sort_keys=True) + "\n")
        tmp.replace(path)
        log.info("bound %s done", name)
    return save


def cmd_certify(args) -> int:
    from .c0bound import certify_C0, decay_constants
    from .errors import TraceCheckFailed
    from .ansatz import trace_check
    from .prover import emit_certificate, prove
    from .seqio import file_sha256, read_shd2x
    from .shmodel import ModelParams

    U0, head = read_shd2x(args.u0)
    params = ModelParams(head["mu"], head["nu1"], head["nu2"], head["d"], int(args.N), head["size"])
    try:
        trace_check(U0)
    except TraceCheckFailed as exc:
        print(f"refused: U0 does not have a vanishing trace ({exc})", file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    c0 = certify_C0(params.mu, delta=_frac(str(args.delta)), grid=args.grid)
    a = decay_constants(params.mu).a
    u0_hash = file_sha256(args.u0)
    known, on_bound = {}, None
    if args.checkpoint:
        path = Path(args.checkpoint)
        key = _ckpt_key(u0_hash, params, c0.C0hat)
        known = _ckpt_load(path, key)
        on_bound = _ckpt_saver(path, key, {n: ([x.hex() for x in v] if isinstance(v, tuple) else v.hex())
                                           for n, v in known.items()})
    config = _config_echo(args)
    config.update({"C0_delta": str(c0.delta), "C0_grid": str(c0.grid), "C0_K": str(c0.K)})
    cert = prove(U0, params, c0.C0hat, a, pattern=args.pattern, u0_sha256=u0_hash,
                 branch=not args.no_branch, threads=args.threads, config=config, known=known,
                 on_bound=on_bound)
    emit_certificate(cert, args.out)
    b = cert.bounds.summary()
    print(f"Y0 <= {b['Y0']:.6e}  Z1 <= {b['Z1']:.6e}  Zu <= {b['Zu']:.6e}  ||B|| <= {b['normB']:.4f}")
    print(f"localized: {cert.localized}" + (f"  r0 = {cert.r0:.6e}" if cert.r0 is not None else ""))
    print(f"branch: {cert.branch}" + (f"  r0 = {cert.r0_branch:.6e}" if cert.r0_branch is not None else ""))
    print(f"certificate written to {args.out} ({time.perf_counter() - t0:.1f} s)")
    return 0 if cert.proved else 1


def cmd_c0(args) -> int:
    from .c0bound import certify_C0

    res = certify_C0(_frac(str(args.mu)), delta=_frac(str(args.delta)), grid=args.grid)
    print(f"C0hat = {res.C0hat!r}  (lower bound -theta/sqrt(mu) = {res.lower.lo!r}, "
          f"K = {res.K}, {res.intervals_checked} intervals, {res.seconds:.1f} s)")
    if args.out:
        rec = {"config": _config_echo(args), "result": res.as_record()}
        Path(args.out).write_text(json.dumps(rec, indent=1, sort_keys=True) + "\n")
    return 0


def _read_any(path):
    from .seqio import read_shd2, read_shd2x
    text = Path(path).read_text().split("\n", 1)[0].strip()
    return read_shd2x(path) if text == "SHD2X v1" else read_shd2(path)


def cmd_export_grid(args) -> int:
    from .d2seq import evaluate_grid

    U, head = _read_any(args.u0)
    d = float(head["d"])
    xs = np.linspace(-d, d, args.resolution)
    vals = evaluate_grid(U.to_float(), xs, xs)
    with open(args.out, "w", newline="") as fh:
        for k, v in _config_echo(args).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "u"])
        for i, x in enumerate(xs):
            for j, y in enumerate(xs):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(vals[i, j]))])
    print(f"wrote {args.resolution}x{args.resolution} grid to {args.out}")
    return 0


def cmd_verify(args) -> int:
    from .errors import CertificateSchemaError
    from .prover import read_certificate, verify_certificate

    try:
        ok, problems = verify_certificate(args.certificate, args.u0)
    except CertificateSchemaError as exc:
        print(f"invalid certificate: {exc}", file=sys.stderr)
        return 1
    for p in problems:
        print(f"FAIL {p}")
    cert = read_certificate(args.certificate)
    print(f"localized: {cert.localized}; branch: {cert.branch}; consistent: {'yes' if ok else 'no'}")
    return 0 if ok and cert.proved else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shproof", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS threads (default: SHPROOF_THREADS or all cores)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build U0~ (SHD2) and the trace-free U0 (SHD2X)")
    c.add_argument("--config", help="JSON file with option values")
    c.add_argument("--pattern", choices=sorted(PATTERN_SYMMETRY), default="square")
    c.add_argument("--mu", type=_frac)
    c.add_argument("--nu1", type=_frac, default=Fraction(-8, 5))
    c.add_argument("--nu2", type=_frac, default=Fraction(1))
    c.add_argument("--d", type=_frac)
    c.add_argument("--N0", type=int)
    c.add_argument("--N1", type=int, default=6, help="angular modes of the radial ansatz")
    c.add_argument("--s", type=int, default=None, help="angular symmetry (default from --pattern)")
    c.add_argument("--R", type=float, default=None, help="radial domain (default d + 10)")
    c.add_argument("--points", type=int, default=2000, help="radial mesh points")
    c.add_argument("--amplitude", type=float, default=0.5)
    c.add_argument("--width", type=float, default=8.0)
    c.add_argument("--out", default="u0", help="output prefix")
    c.set_defaults(func=cmd_construct, required=("mu", "d", "N0"))

    f = sub.add_parser("certify", help="compute all bounds and run the radii checks")
    f.add_argument("--config", help="JSON file with option values")
    f.add_argument("--u0", help="SHD2X file with the trace-free U0")
    f.add_argument("--N", type=int, help="size of the finite block of B")
    f.add_argument("--pattern", default="unlabelled")
    f.add_argument("--delta", type=_frac, default=Fraction(1, 100), help="C0 slack")
    f.add_argument("--grid", type=int, default=4096, help="C0 grid pieces")
    f.add_argument("--no-branch", action="store_true", help="skip the periodic branch check")
    f.add_argument("--checkpoint", help="JSON file used to resume after each bound")
    f.add_argument("--out", default="proof.shcert")
    f.set_defaults(func=cmd_certify, required=("u0", "N"))

    k = sub.add_parser("c0", help="certify the decay constant C0")
    k.add_argument("--config", help="JSON file with option values")
    k.add_argument("--mu", type=_frac)
    k.add_argument("--delta", type=_frac, default=Fraction(1, 100))
    k.add_argument("--grid", type=int, default=4096)
    k.add_argument("--out", help="optional JSON record")
    k.set_defaults(func=cmd_c0, required=("mu",))

    e = sub.add_parser("export-grid", help="CSV of U0 on a uniform grid of the square")
    e.add_argument("--config", help="JSON file with option values")
    e.add_argument("--u0", help="SHD2 or SHD2X file")
    e.add_argument("--resolution", type=int, default=201)
    e.add_argument("--out", default="grid.csv")
    e.set_defaults(func=cmd_export_grid, required=("u0",))

    v = sub.add_parser("verify", help="re-check a certificate from its stored bounds")
    v.add_argument("certificate")
    v.add_argument("--u0", help="U0 file whose hash must match")
    v.set_defaults(func=cmd_verify, required=())
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    _load_config_file(args, parser, argv)
    missing = [name for name in args.required if getattr(args, name) is None]
    if missing:
        parser.error("missing required option(s): " + ", ".join("--" + m for m in missing))
    del args.required
    if args.threads is None:
        args.threads = _default_threads()
    if args.threads < 1:
        parser.error("--threads must be positive")
    if args.threads > (os.cpu_count() or 1):
        log.warning("%d threads requested on %d cores; expect oversubscription", args.threads, os.cpu_count())
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    from .errors import Infeasible
    with threadpool_limits(limits=args.threads):
        try:
            return args.func(args)
        except Infeasible as exc:
            print(f"infeasible: {exc} (margin {exc.margin:.6e})", file=sys.stderr)
            return 1
        except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1


if __name__ == "__main__":
    sys.exit(main())
