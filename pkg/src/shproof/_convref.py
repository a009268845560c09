"""Pure numpy reduced-index convolution (fallback for the compiled kernel).

Summation order, shared with ``_kernels.pyx`` so both give bit-identical
results: for m1, m2 of V in row-major order, for sigma in the orbit of m in the
order (+,+), (-,+), (+,-), (-,-) with repeats dropped, add
``v[m] * u~(k - sigma)`` to every output entry k.  Here ``u~(j) = u(|j1|, |j2|)``.
Zero coefficients of V (with zero radius) are skipped.
"""

from __future__ import annotations

import numpy as np


def orbit(m1: int, m2: int) -> list[tuple[int, int]]:
    out = []
    for s in ((m1, m2), (-m1, m2), (m1, -m2), (-m1, -m2)):
        if s not in out:
            out.append(s)
    return out


def reflect(u: np.ndarray) -> np.ndarray:
    """Values ``u(|j1|, |j2|)`` for j in [-M, M]^2, stored at offset M."""
    top = np.concatenate([u[:0:-1, :], u], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def _slices(m1, m2, mu, mo):
    for s1, s2 in orbit(m1, m2):
        k1lo, k1hi = max(0, s1 - mu), min(mo, s1 + mu)
        k2lo, k2hi = max(0, s2 - mu), min(mo, s2 + mu)
        if k1lo > k1hi or k2lo > k2hi:
            continue
        yield (slice(k1lo, k1hi + 1), slice(k2lo, k2hi + 1),
               slice(k1lo - s1 + mu, k1hi - s1 + mu + 1), slice(k2lo - s2 + mu, k2hi - s2 + mu + 1))


def conv_plain(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Reduced convolution for float or object (Fraction) coefficient arrays."""
    mu, mv = u.shape[0] - 1, v.shape[0] - 1
    mo = mu + mv
    full = reflect(u)
    if u.dtype == object or v.dtype == object:
        c = np.empty((mo + 1, mo + 1), dtype=object)
        c.fill(0)
    else:
        c = np.zeros((mo + 1, mo + 1))
    for m1 in range(mv + 1):
        for m2 in range(mv + 1):
            vv = v[m1, m2]
            if vv == 0:
                continue
            for o1, o2, i1, i2 in _slices(m1, m2, mu, mo):
                c[o1, o2] += vv * full[i1, i2]
    return c


def conv_midrad(um: np.ndarray, ur: np.ndarray, vm: np.ndarray, vr: np.ndarray):
    """Midpoint sums plus the absolute-value and radius accumulators.

    Returns ``(c, a, r)`` with ``c = sum v u~``, ``a = sum |v||u~|`` and
    ``r = sum rv (|u~| + ru~) + |v| ru~``, all in float.
    """
    mu, mv = um.shape[0] - 1, vm.shape[0] - 1
    mo = mu + mv
    full = reflect(um)
    afull = np.abs(full)
    rfull = reflect(ur)
    arfull = afull + rfull
    shape = (mo + 1, mo + 1)
    c, a, r = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    for m1 in range(mv + 1):
        for m2 in range(mv + 1):
            vv = vm[m1, m2]
            rv = vr[m1, m2]
            if vv == 0.0 and rv == 0.0:
                continue
            av = abs(vv)
            for o1, o2, i1, i2 in _slices(m1, m2, mu, mo):
                c[o1, o2] += vv * full[i1, i2]
                a[o1, o2] += av * afull[i1, i2]
                r[o1, o2] += rv * arfull[i1, i2] + av * rfull[i1, i2]
    return c, a, r
