# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""BLAS-backed RK4 stepping kernels; compiled twin of ``_rk4_py``.

Same contract as the pure-numpy module: complex coefficients pre-sampled on
the half-step grid, C-contiguous complex128 buffers, in-place updates. The
stepping loops run without the GIL so sweep workers can thread through here.
"""

from libc.complex cimport conj
from scipy.linalg.cython_blas cimport dznrm2, zaxpy, zcopy, zdscal, zgemm, zgemv

import numpy as np

BACKEND = "cython"

ctypedef double complex zc


cdef void _hv(int d, int m, zc* static, zc* mats, zc* dags,
              zc* coeffs, int ldc, int h, zc* v, zc* y, zc* tmp) nogil:
    """y = H(t_h) @ v for a length-d vector (row-major matrices via 'T')."""
    cdef zc one = 1.0, zero = 0.0, cj
    cdef int inc = 1, j
    cdef char trans = b'T'
    zgemv(&trans, &d, &d, &one, static, &d, v, &inc, &zero, y, &inc)
    for j in range(m):
        cj = coeffs[j * ldc + h]
        zgemv(&trans, &d, &d, &one, mats + j * d * d, &d, v, &inc, &zero, tmp, &inc)
        zaxpy(&d, &cj, tmp, &inc, y, &inc)
        cj = conj(cj)
        zgemv(&trans, &d, &d, &one, dags + j * d * d, &d, v, &inc, &zero, tmp, &inc)
        zaxpy(&d, &cj, tmp, &inc, y, &inc)


cdef void _hm(int d, int m, zc* static, zc* mats, zc* dags,
              zc* coeffs, int ldc, int h, zc* v, zc* y, zc* tmp) nogil:
    """y = H(t_h) @ v for a d x d right-hand side (both row-major)."""
    cdef zc one = 1.0, zero = 0.0, cj
    cdef int inc = 1, j, dd = d * d
    cdef char nt = b'N'
    # row-major C = A @ B maps to column-major gemm with swapped operands
    zgemm(&nt, &nt, &d, &d, &d, &one, v, &d, static, &d, &zero, y, &d)
    for j in range(m):
        cj = coeffs[j * ldc + h]
        zgemm(&nt, &nt, &d, &d, &d, &one, v, &d, mats + j * dd, &d, &zero, tmp, &d)
        zaxpy(&dd, &cj, tmp, &inc, y, &inc)
        cj = conj(cj)
        zgemm(&nt, &nt, &d, &d, &d, &one, v, &d, dags + j * dd, &d, &zero, tmp, &d)
        zaxpy(&dd, &cj, tmp, &inc, y, &inc)


def rk4_state(zc[:, ::1] static, zc[:, :, ::1] mats, zc[:, :, ::1] dags,
              zc[:, ::1] coeffs, zc[::1] psi, double dt, int n_steps,
              int store_stride, zc[:, ::1] out_states, bint renormalize,
              double abort_drift):
    cdef int d = static.shape[0]
    cdef int m = mats.shape[0]
    cdef int ldc = coeffs.shape[1]
    cdef int inc = 1, i, h0, k_store = 0, status = 0
    cdef double max_drift = 0.0, prev_norm = 1.0, norm, drift, inv
    cdef zc a_half = -0.5j * dt, a_full = -1.0j * dt
    cdef zc b_edge = -1.0j * dt / 6.0, b_mid = -1.0j * dt / 3.0

    work = np.empty((6, d), dtype=np.complex128)
    cdef zc[:, ::1] wv = work
    cdef zc* y1 = &wv[0, 0]
    cdef zc* y2 = &wv[1, 0]
    cdef zc* y3 = &wv[2, 0]
    cdef zc* y4 = &wv[3, 0]
    cdef zc* vs = &wv[4, 0]
    cdef zc* tmp = &wv[5, 0]
    cdef zc* s = &static[0, 0]
    cdef zc* mp = &mats[0, 0, 0] if m > 0 else NULL
    cdef zc* dp = &dags[0, 0, 0] if m > 0 else NULL
    cdef zc* cp = &coeffs[0, 0] if m > 0 else NULL
    cdef zc* p = &psi[0]
    cdef zc* outp = &out_states[0, 0] if out_states.shape[0] > 0 else NULL

    with nogil:
        for i in range(n_steps):
            h0 = 2 * i
            _hv(d, m, s, mp, dp, cp, ldc, h0, p, y1, tmp)
            zcopy(&d, p, &inc, vs, &inc)
            zaxpy(&d, &a_half, y1, &inc, vs, &inc)
            _hv(d, m, s, mp, dp, cp, ldc, h0 + 1, vs, y2, tmp)
            zcopy(&d, p, &inc, vs, &inc)
            zaxpy(&d, &a_half, y2, &inc, vs, &inc)
            _hv(d, m, s, mp, dp, cp, ldc, h0 + 1, vs, y3, tmp)
            zcopy(&d, p, &inc, vs, &inc)
            zaxpy(&d, &a_full, y3, &inc, vs, &inc)
            _hv(d, m, s, mp, dp, cp, ldc, h0 + 2, vs, y4, tmp)
            zaxpy(&d, &b_edge, y1, &inc, p, &inc)
            zaxpy(&d, &b_mid, y2, &inc, p, &inc)
            zaxpy(&d, &b_mid, y3, &inc, p, &inc)
            zaxpy(&d, &b_edge, y4, &inc, p, &inc)
            norm = dznrm2(&d, p, &inc)
            drift = norm / prev_norm - 1.0
            if drift < 0.0:
                drift = -drift
            if drift > max_drift:
                max_drift = drift
            if drift > abort_drift:
                status = 1
                break
            if renormalize:
                inv = 1.0 / norm
                zdscal(&d, &inv, p, &inc)
            else:
                prev_norm = norm
            if (i + 1) % store_stride == 0:
                zcopy(&d, p, &inc, outp + k_store * d, &inc)
                k_store += 1
    return max_drift, status


def rk4_propagator(zc[:, ::1] static, zc[:, :, ::1] mats, zc[:, :, ::1] dags,
                   zc[:, ::1] coeffs, zc[:, ::1] u, double dt, int n_steps):
    cdef int d = static.shape[0]
    cdef int m = mats.shape[0]
    cdef int ldc = coeffs.shape[1]
    cdef int dd = d * d
    cdef int inc = 1, i, h0
    cdef zc a_half = -0.5j * dt, a_full = -1.0j * dt
    cdef zc b_edge = -1.0j * dt / 6.0, b_mid = -1.0j * dt / 3.0

    work = np.empty((6, d, d), dtype=np.complex128)
    cdef zc[:, :, ::1] wv = work
    cdef zc* y1 = &wv[0, 0, 0]
    cdef zc* y2 = &wv[1, 0, 0]
    cdef zc* y3 = &wv[2, 0, 0]
    cdef zc* y4 = &wv[3, 0, 0]
    cdef zc* vs = &wv[4, 0, 0]
    cdef zc* tmp = &wv[5, 0, 0]
    cdef zc* s = &static[0, 0]
    cdef zc* mp = &mats[0, 0, 0] if m > 0 else NULL
    cdef zc* dp = &dags[0, 0, 0] if m > 0 else NULL
    cdef zc* cp = &coeffs[0, 0] if m > 0 else NULL
    cdef zc* up = &u[0, 0]

    with nogil:
        for i in range(n_steps):
            h0 = 2 * i
            _hm(d, m, s, mp, dp, cp, ldc, h0, up, y1, tmp)
            zcopy(&dd, up, &inc, vs, &inc)
            zaxpy(&dd, &a_half, y1, &inc, vs, &inc)
            _hm(d, m, s, mp, dp, cp, ldc, h0 + 1, vs, y2, tmp)
            zcopy(&dd, up, &inc, vs, &inc)
            zaxpy(&dd, &a_half, y2, &inc, vs, &inc)
            _hm(d, m, s, mp, dp, cp, ldc, h0 + 1, vs, y3, tmp)
            zcopy(&dd, up, &inc, vs, &inc)
            zaxpy(&dd, &a_full, y3, &inc, vs, &inc)
            _hm(d, m, s, mp, dp, cp, ldc, h0 + 2, vs, y4, tmp)
            zaxpy(&dd, &b_edge, y1, &inc, up, &inc)
            zaxpy(&dd, &b_mid, y2, &inc, up, &inc)
            zaxpy(&dd, &b_mid, y3, &inc, up, &inc)
            zaxpy(&dd, &b_edge, y4, &inc, up, &inc)
    return 0


def rk4_scalar(double omega, zc[::1] drive, zc xi0, double dt, int n_steps,
               int store_stride, zc[::1] out):
    cdef int i, h0, k_store = 0
    cdef zc xi = xi0, k1, k2, k3, k4
    with nogil:
        for i in range(n_steps):
            h0 = 2 * i
            k1 = -1.0j * (omega * xi - drive[h0])
            k2 = -1.0j * (omega * (xi + 0.5 * dt * k1) - drive[h0 + 1])
            k3 = -1.0j * (omega * (xi + 0.5 * dt * k2) - drive[h0 + 1])
            k4 = -1.0j * (omega * (xi + dt * k3) - drive[h0 + 2])
            xi = xi + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            if (i + 1) % store_stride == 0:
                out[k_store] = xi
                k_store += 1
    return xi
