# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) stepping for y' = -i H(t) y with CSR H."""
import numpy as np
cimport numpy as cnp

from libc.math cimport fabs, sqrt

ctypedef double complex cplx

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline void _rhs(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                      const cplx[::1] vals, const cnp.int64_t[::1] slots,
                      const cplx[:, ::1] C, Py_ssize_t row,
                      const cplx* y, cplx* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, p
    cdef cplx acc
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + C[row, slots[p]] * vals[p] * y[indices[p]]
        # -i * acc
        out[i] = acc.imag - 1j * acc.real


def rhs(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
        const cplx[::1] vals, const cnp.int64_t[::1] slots,
        const cplx[::1] coef, const cplx[::1] y):
    cdef Py_ssize_t n = y.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] o = out
    cdef const cplx[:, ::1] C = np.asarray(coef).reshape(1, -1)
    _rhs(indptr, indices, vals, slots, C, 0, &y[0], &o[0], n)
    return out


def run_block(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
              const cplx[::1] vals, const cnp.int64_t[::1] slots,
              const cplx[:, ::1] C, cplx[::1] y, cplx[::1] k1,
              double h, double tol, cplx[:, ::1] work):
    """Take up to C.shape[0] // 5 fixed-size steps, stopping at the first rejection.

    Row 5*j + m of C holds the coefficients at stage time t_j + c_{m+2} h.
    ``y`` and ``k1`` are updated in place for accepted steps (FSAL).
    Returns (accepted, max_err_accepted, err_of_rejected_or_-1).
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t nsteps = C.shape[0] // 5
    cdef Py_ssize_t j, i, base
    cdef double err, e, max_err = 0.0, rejected = -1.0
    cdef Py_ssize_t accepted = 0
    cdef cplx* k2 = &work[0, 0]
    cdef cplx* k3 = &work[1, 0]
    cdef cplx* k4 = &work[2, 0]
    cdef cplx* k5 = &work[3, 0]
    cdef cplx* k6 = &work[4, 0]
    cdef cplx* k7 = &work[5, 0]
    cdef cplx* ys = &work[6, 0]
    cdef cplx* yn = &work[7, 0]
    cdef cplx d
    with nogil:
        for j in range(nsteps):
            base = 5 * j
            for i in range(n):
                ys[i] = y[i] + h * A21 * k1[i]
            _rhs(indptr, indices, vals, slots, C, base, ys, k2, n)
            for i in range(n):
                ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _rhs(indptr, indices, vals, slots, C, base + 1, ys, k3, n)
            for i in range(n):
                ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _rhs(indptr, indices, vals, slots, C, base + 2, ys, k4, n)
            for i in range(n):
                ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _rhs(indptr, indices, vals, slots, C, base + 3, ys, k5, n)
            for i in range(n):
                ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            _rhs(indptr, indices, vals, slots, C, base + 4, ys, k6, n)
            for i in range(n):
                yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            _rhs(indptr, indices, vals, slots, C, base + 4, yn, k7, n)
            err = 0.0
            for i in range(n):
                d = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                e = sqrt(d.real * d.real + d.imag * d.imag)
                if e > err:
                    err = e
            if err > tol:
                rejected = err
                break
            for i in range(n):
                y[i] = yn[i]
                k1[i] = k7[i]
            accepted += 1
            if err > max_err:
                max_err = err
    return accepted, max_err, rejected
