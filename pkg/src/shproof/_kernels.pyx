# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reduced-index convolution; same summation order as ``_convref``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _orbit(int m1, int m2, int* out, int* n):
    cdef int cand[8]
    cdef int i, j, dup
    cand[0] = m1; cand[1] = m2
    cand[2] = -m1; cand[3] = m2
    cand[4] = m1; cand[5] = -m2
    cand[6] = -m1; cand[7] = -m2
    n[0] = 0
    for i in range(4):
        dup = 0
        for j in range(n[0]):
            if out[2 * j] == cand[2 * i] and out[2 * j + 1] == cand[2 * i + 1]:
                dup = 1
        if not dup:
            out[2 * n[0]] = cand[2 * i]
            out[2 * n[0] + 1] = cand[2 * i + 1]
            n[0] += 1


def conv_plain(double[:, ::1] u, double[:, ::1] v):
    cdef int mu = u.shape[0] - 1
    cdef int mv = v.shape[0] - 1
    cdef int mo = mu + mv
    from shproof._convref import reflect
    cdef double[:, ::1] full = np.ascontiguousarray(reflect(np.asarray(u)))
    out_arr = np.zeros((mo + 1, mo + 1))
    cdef double[:, ::1] c = out_arr
    cdef int orb[8]
    cdef int norb, t, m1, m2, s1, s2, k1, k2, k1lo, k1hi, k2lo, k2hi
    cdef double vv
    for m1 in range(mv + 1):
        for m2 in range(mv + 1):
            vv = v[m1, m2]
            if vv == 0.0:
                continue
            _orbit(m1, m2, orb, &norb)
            for t in range(norb):
                s1 = orb[2 * t]; s2 = orb[2 * t + 1]
                k1lo = max(0, s1 - mu); k1hi = min(mo, s1 + mu)
                k2lo = max(0, s2 - mu); k2hi = min(mo, s2 + mu)
                for k1 in range(k1lo, k1hi + 1):
                    for k2 in range(k2lo, k2hi + 1):
                        c[k1, k2] += vv * full[k1 - s1 + mu, k2 - s2 + mu]
    return out_arr


def conv_midrad(double[:, ::1] um, double[:, ::1] ur, double[:, ::1] vm, double[:, ::1] vr):
    cdef int mu = um.shape[0] - 1
    cdef int mv = vm.shape[0] - 1
    cdef int mo = mu + mv
    from shproof._convref import reflect
    full_np = np.ascontiguousarray(reflect(np.asarray(um)))
    rfull_np = np.ascontiguousarray(reflect(np.asarray(ur)))
    afull_np = np.abs(full_np)
    arfull_np = afull_np + rfull_np
    cdef double[:, ::1] full = full_np
    cdef double[:, ::1] rfull = rfull_np
    cdef double[:, ::1] afull = afull_np
    cdef double[:, ::1] arfull = arfull_np
    c_arr = np.zeros((mo + 1, mo + 1))
    a_arr = np.zeros((mo + 1, mo + 1))
    r_arr = np.zeros((mo + 1, mo + 1))
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] r = r_arr
    cdef int orb[8]
    cdef int norb, t, m1, m2, s1, s2, k1, k2, k1lo, k1hi, k2lo, k2hi, i1, i2
    cdef double vv, rv, av
    for m1 in range(mv + 1):
        for m2 in range(mv + 1):
            vv = vm[m1, m2]
            rv = vr[m1, m2]
            if vv == 0.0 and rv == 0.0:
                continue
            av = abs(vv)
            _orbit(m1, m2, orb, &norb)
            for t in range(norb):
                s1 = orb[2 * t]; s2 = orb[2 * t + 1]
                k1lo = max(0, s1 - mu); k1hi = min(mo, s1 + mu)
                k2lo = max(0, s2 - mu); k2hi = min(mo, s2 + mu)
                for k1 in range(k1lo, k1hi + 1):
                    i1 = k1 - s1 + mu
                    for k2 in range(k2lo, k2hi + 1):
                        i2 = k2 - s2 + mu
                        c[k1, k2] += vv * full[i1, i2]
                        a[k1, k2] += av * afull[i1, i2]
                        r[k1, k2] += rv * arfull[i1, i2] + av * rfull[i1, i2]
    return c_arr, a_arr, r_arr
