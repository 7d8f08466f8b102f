# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulation kernel: sequential per-run loops over the recursion."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, log1p
from libc.stdint cimport uint64_t

from .pure import KernelResult

BACKEND_NAME = "compiled"


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15
    z ^= z >> 30
    z = z * <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z = z * <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


cdef inline double _laplace(uint64_t seed, uint64_t run, uint64_t agent,
                            uint64_t step, double b) nogil:
    cdef uint64_t h = _mix(seed + run)
    h = _mix(h ^ agent)
    h = _mix(h ^ step)
    cdef double u = ((<double>(h >> 11)) + 0.5) * (2.0 ** -53) - 0.5
    if u >= 0.0:
        return -b * log1p(-2.0 * u)
    return b * log1p(2.0 * u)


def simulate(weights, laplacian, gauge, x0, alpha, bscale, seed, run_ids,
             record_idx, collect_states=False, collect_y=False,
             tail_start=None, limit=1e12):
    cdef cnp.ndarray[double, ndim=2] a_mat = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] l_mat = np.ascontiguousarray(laplacian, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] s_vec = np.ascontiguousarray(gauge, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] x0_vec = np.ascontiguousarray(x0, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] al = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] bs = np.ascontiguousarray(bscale, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] runs = np.ascontiguousarray(run_ids, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] rec = np.ascontiguousarray(record_idx, dtype=np.int64)

    cdef Py_ssize_t n = a_mat.shape[0]
    cdef Py_ssize_t m = runs.shape[0]
    cdef Py_ssize_t t_total = al.shape[0]
    cdef Py_ssize_t n_rec = rec.shape[0]
    cdef long long tail_from = t_total if tail_start is None else <long long>tail_start
    cdef double lim = limit
    cdef uint64_t useed = <uint64_t>(<unsigned long long>(seed & 0xFFFFFFFFFFFFFFFF))

    cdef cnp.ndarray[double, ndim=2] v = np.full((m, n_rec), np.nan)
    cdef cnp.ndarray[double, ndim=2] gmean = np.full((m, n_rec), np.nan)
    cdef cnp.ndarray[double, ndim=2] x_final = np.full((m, n), np.nan)
    cdef cnp.ndarray[long long, ndim=1] diverged_at = np.full(m, -1, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] max_tail = np.zeros(m)
    cdef cnp.ndarray[double, ndim=3] x_rec = (
        np.full((m, n_rec, n), np.nan) if collect_states else None)
    cdef cnp.ndarray[double, ndim=3] y_rec = (
        np.full((m, n_rec, n), np.nan) if collect_y else None)
    cdef bint want_x = collect_states
    cdef bint want_y = collect_y

    cdef double[64] xbuf
    cdef double[64] wbuf
    cdef double[64] xnew
    if n > 64:
        raise ValueError("compiled kernel supports at most 64 agents")

    cdef Py_ssize_t r, i, j, k, pos
    cdef double b, a, acc_l, acc_a, mu, dev, vv, peak, d
    cdef uint64_t urun
    cdef bint alive, have_noise

    for r in range(m):
        urun = <uint64_t>runs[r]
        for i in range(n):
            xbuf[i] = x0_vec[i]
        alive = True
        pos = 0
        for k in range(t_total):
            if not alive:
                break
            b = bs[k]
            have_noise = b > 0.0
            if have_noise:
                for j in range(n):
                    wbuf[j] = _laplace(useed, urun, <uint64_t>j, <uint64_t>k, b)
            if pos < n_rec and rec[pos] == k:
                mu = 0.0
                for i in range(n):
                    mu += s_vec[i] * xbuf[i]
                mu /= n
                vv = 0.0
                for i in range(n):
                    dev = s_vec[i] * xbuf[i] - mu
                    vv += dev * dev
                v[r, pos] = vv
                gmean[r, pos] = mu
                if want_x:
                    for i in range(n):
                        x_rec[r, pos, i] = xbuf[i]
                if want_y and have_noise:
                    for i in range(n):
                        y_rec[r, pos, i] = xbuf[i] + wbuf[i]
                elif want_y:
                    for i in range(n):
                        y_rec[r, pos, i] = xbuf[i]
                pos += 1
            a = al[k]
            for i in range(n):
                acc_l = 0.0
                for j in range(n):
                    acc_l += l_mat[i, j] * xbuf[j]
                if have_noise:
                    acc_a = 0.0
                    for j in range(n):
                        acc_a += a_mat[i, j] * wbuf[j]
                    xnew[i] = xbuf[i] - a * acc_l + a * acc_a
                else:
                    xnew[i] = xbuf[i] - a * acc_l
            peak = 0.0
            if k >= tail_from:
                d = 0.0
                for i in range(n):
                    if fabs(xnew[i] - xbuf[i]) > d:
                        d = fabs(xnew[i] - xbuf[i])
                if d > max_tail[r]:
                    max_tail[r] = d
            for i in range(n):
                xbuf[i] = xnew[i]
                if fabs(xbuf[i]) > peak:
                    peak = fabs(xbuf[i])
                if not isfinite(xbuf[i]):
                    peak = lim * 2.0
            if peak > lim:
                diverged_at[r] = k + 1
                alive = False
        if alive:
            if pos < n_rec and rec[pos] == t_total:
                mu = 0.0
                for i in range(n):
                    mu += s_vec[i] * xbuf[i]
                mu /= n
                vv = 0.0
                for i in range(n):
                    dev = s_vec[i] * xbuf[i] - mu
                    vv += dev * dev
                v[r, pos] = vv
                gmean[r, pos] = mu
                if want_x:
                    for i in range(n):
                        x_rec[r, pos, i] = xbuf[i]
            for i in range(n):
                x_final[r, i] = xbuf[i]

    return KernelResult(
        v=v,
        gmean=gmean,
        x_final=x_final,
        diverged_at=diverged_at,
        max_tail_delta=max_tail,
        x_rec=x_rec,
        y_rec=y_rec,
    )
