# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Cyclic-Jacobi Hermitian eigensolver, Cholesky log-determinant, the capped-
simplex eigenvalue projection, and the two composite operations built on
them (PSD clipping and the joint covariance-pair feasibility projection),
all in C loops to avoid per-call numpy overhead on the tiny matrices the
solvers iterate over.

Same call surface as ``fallback.py``; selected at import by the package
``__init__``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()


cdef void _hermitize_inplace(double complex[:, ::1] a, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i, j
    cdef double complex v
    for i in range(n):
        a[i, i] = a[i, i].real
        for j in range(i + 1, n):
            v = 0.5 * (a[i, j] + a[j, i].conjugate())
            a[i, j] = v
            a[j, i] = v.conjugate()


cdef void _jacobi(double complex[:, ::1] a, double complex[:, ::1] v,
                  Py_ssize_t n) noexcept:
    """Diagonalize Hermitian a in place; v accumulates the unitary."""
    cdef Py_ssize_t i, p, q, sweep
    cdef double complex apq, aip, aiq, vip, viq, ephi
    cdef double app, aqq, beta_, tau, t, c, s, off2, tol2, anew_p, anew_q, normf

    for i in range(n):
        for p in range(n):
            v[i, p] = 1.0 if i == p else 0.0
    normf = 0.0
    for i in range(n):
        for p in range(n):
            normf += a[i, p].real * a[i, p].real + a[i, p].imag * a[i, p].imag
    normf = sqrt(normf)
    tol2 = 1e-12 * (normf if normf > 1.0 else 1.0)
    tol2 *= tol2

    for sweep in range(60):
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += 2.0 * (a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag)
        if off2 <= tol2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                beta_ = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if beta_ <= 1e-300:
                    continue
                ephi = apq / beta_            # a[p,q] = beta * ephi
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * beta_)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # unitary: U[p,p]=c, U[p,q]=s, U[q,p]=-s conj(ephi), U[q,q]=c conj(ephi)
                anew_p = c * c * app - 2.0 * s * c * beta_ + s * s * aqq
                anew_q = s * s * app + 2.0 * s * c * beta_ + c * c * aqq
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * ephi.conjugate() * aiq
                    a[i, q] = s * aip + c * ephi.conjugate() * aiq
                    a[p, i] = a[i, p].conjugate()
                    a[q, i] = a[i, q].conjugate()
                a[p, p] = anew_p
                a[q, q] = anew_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * ephi.conjugate() * viq
                    v[i, q] = s * vip + c * ephi.conjugate() * viq


cdef void _sort_ascending(double[::1] w, double complex[:, ::1] v,
                          Py_ssize_t n) noexcept:
    """Insertion sort of eigenvalues with matching eigenvector columns."""
    cdef Py_ssize_t i, j, k, c
    cdef double key
    cdef double complex tmp
    for i in range(1, n):
        key = w[i]
        j = i
        while j > 0 and w[j - 1] > key:
            j -= 1
        if j != i:
            for k in range(i, j, -1):
                w[k] = w[k - 1]
            w[j] = key
            for k in range(n):
                tmp = v[k, i]
                for c in range(i, j, -1):
                    v[k, c] = v[k, c - 1]
                v[k, j] = tmp


cdef double _waterlevel(double[::1] vals, double cap, Py_ssize_t m) noexcept:
    """Shift theta with sum(max(vals - theta, 0)) = cap (cap < clipped sum)."""
    cdef Py_ssize_t i, j, k
    cdef double csum, theta, best_theta, key
    cdef double[16] buf_static
    # sizes here are at most 2*8; sort a local copy descending
    for i in range(m):
        buf_static[i] = vals[i]
    for i in range(1, m):
        key = buf_static[i]
        j = i
        while j > 0 and buf_static[j - 1] < key:
            buf_static[j] = buf_static[j - 1]
            j -= 1
        buf_static[j] = key
    csum = 0.0
    best_theta = buf_static[0] - cap
    for k in range(m):
        csum += buf_static[k]
        theta = (csum - cap) / (k + 1)
        if buf_static[k] - theta > 0.0:
            best_theta = theta
        else:
            break
    return best_theta


cdef void _clip_and_cap(double[::1] vals, double cap, Py_ssize_t m) noexcept:
    cdef Py_ssize_t i
    cdef double total = 0.0, theta
    if cap <= 0.0:
        for i in range(m):
            vals[i] = 0.0
        return
    for i in range(m):
        if vals[i] > 0.0:
            total += vals[i]
    if total <= cap:
        for i in range(m):
            if vals[i] < 0.0:
                vals[i] = 0.0
        return
    theta = _waterlevel(vals, cap, m)
    for i in range(m):
        vals[i] = vals[i] - theta
        if vals[i] < 0.0:
            vals[i] = 0.0


cdef void _reconstruct(double complex[:, ::1] v, double[::1] w,
                       double complex[:, ::1] out, Py_ssize_t n) noexcept:
    """out = V diag(w) V^H (Hermitian by construction)."""
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    for i in range(n):
        for j in range(i, n):
            acc = 0.0
            for k in range(n):
                acc += w[k] * v[i, k] * v[j, k].conjugate()
            if i == j:
                out[i, i] = acc.real
            else:
                out[i, j] = acc
                out[j, i] = acc.conjugate()


def eigh(a):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (w ascending, V unitary), matching numpy.linalg.eigh.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] work = np.array(
        a, dtype=np.complex128, order="C", copy=True
    )
    cdef Py_ssize_t n = work.shape[0]
    if work.shape[1] != n:
        raise ValueError("eigh expects a square matrix")
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vout = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.empty(n)
    cdef Py_ssize_t i
    _jacobi(work, vout, n)
    for i in range(n):
        w[i] = work[i, i].real
    _sort_ascending(w, vout, n)
    return w, vout


def logdet_chol(a):
    """ln det of a Hermitian PD matrix via Cholesky; NaN signals non-PD."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] ell = np.array(
        a, dtype=np.complex128, order="C", copy=True
    )
    cdef Py_ssize_t n = ell.shape[0]
    if ell.shape[1] != n:
        raise ValueError("logdet expects a square matrix")
    cdef Py_ssize_t i, j, k
    cdef double acc = 0.0, pivot
    cdef double complex sij
    for j in range(n):
        pivot = ell[j, j].real
        for k in range(j):
            pivot -= ell[j, k].real * ell[j, k].real + ell[j, k].imag * ell[j, k].imag
        if pivot <= 0.0 or pivot != pivot:
            return float("nan")
        pivot = sqrt(pivot)
        ell[j, j] = pivot
        acc += log(pivot)
        for i in range(j + 1, n):
            sij = ell[i, j]
            for k in range(j):
                sij -= ell[i, k] * ell[j, k].conjugate()
            ell[i, j] = sij / pivot
    return 2.0 * acc


def simplex_cap_project(v, cap):
    """Project a real vector onto {x >= 0, sum(x) <= cap}."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(v, dtype=np.float64, copy=True)
    if x.shape[0] > 16:
        # static waterlevel buffer covers the solver sizes only
        from . import fallback

        return fallback.simplex_cap_project(x, cap)
    _clip_and_cap(x, cap, x.shape[0])
    return x


def psd_clip(a):
    """Frobenius-nearest PSD matrix (hermitize, clip eigenvalues at 0)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] work = np.array(
        a, dtype=np.complex128, order="C", copy=True
    )
    cdef Py_ssize_t n = work.shape[0]
    if work.shape[1] != n:
        raise ValueError("psd_clip expects a square matrix")
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] v = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.empty(n)
    cdef Py_ssize_t i
    _hermitize_inplace(work, n)
    _jacobi(work, v, n)
    for i in range(n):
        w[i] = work[i, i].real
        if w[i] < 0.0:
            w[i] = 0.0
    _reconstruct(v, w, out, n)
    return out


def project_pair(sigma, w_mat, power):
    """Joint projection of a covariance pair onto
    {S >= 0, W >= 0, tr(S + W) <= power}: per-matrix eigendecomposition,
    capped-simplex projection of the stacked eigenvalues, reassembly."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] s_work = np.array(
        sigma, dtype=np.complex128, order="C", copy=True
    )
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] w_work = np.array(
        w_mat, dtype=np.complex128, order="C", copy=True
    )
    cdef Py_ssize_t n = s_work.shape[0]
    cdef double cap = power
    if s_work.shape[1] != n or w_work.shape[0] != n or w_work.shape[1] != n:
        raise ValueError("project_pair expects same-size square matrices")
    if n > 8:
        from . import fallback

        return fallback.project_pair(sigma, w_mat, power)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vs = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vw = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] s_out = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] w_out = np.empty((n, n), dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(2 * n)
    cdef Py_ssize_t i
    _hermitize_inplace(s_work, n)
    _hermitize_inplace(w_work, n)
    _jacobi(s_work, vs, n)
    _jacobi(w_work, vw, n)
    for i in range(n):
        vals[i] = s_work[i, i].real
        vals[n + i] = w_work[i, i].real
    _clip_and_cap(vals, cap, 2 * n)
    _reconstruct(vs, vals[:n], s_out, n)
    _reconstruct(vw, vals[n:], w_out, n)
    return s_out, w_out
