# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 propagation kernel for annealing dynamics.

States are held column-major: a (dim, nb) block evolves nb independent
state vectors that share the schedule coefficient tables but carry their
own diagonal energies.  Amplitudes are processed as interleaved
real/imag doubles so the inner batch loops stay plain real arithmetic
the compiler can vectorize; the step loop releases the GIL so a thread
pool can drive several blocks in parallel.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

NAME = "cython"
SUPPORTS_THREADS = True


cdef void _apply_h(double* out, const double* p, const double* dg,
                   double a, double b, Py_ssize_t dim, int nq, Py_ssize_t nb) noexcept nogil:
    """out = -i * (a * sum_l flip_l(p) + b * dg * p), interleaved re/im."""
    cdef Py_ssize_t i, c, base, dbase, flip, w = 2 * nb
    cdef int l
    cdef double bd, tr, ti
    for i in range(dim):
        base = i * w
        dbase = i * nb
        flip = (i ^ 1) * w
        for c in range(w):
            out[base + c] = p[flip + c]
        for l in range(1, nq):
            flip = (i ^ (<Py_ssize_t>1 << l)) * w
            for c in range(w):
                out[base + c] = out[base + c] + p[flip + c]
        for c in range(nb):
            bd = b * dg[dbase + c]
            tr = a * out[base + 2 * c] + bd * p[base + 2 * c]
            ti = a * out[base + 2 * c + 1] + bd * p[base + 2 * c + 1]
            out[base + 2 * c] = ti
            out[base + 2 * c + 1] = -tr


def rk4_evolve_batch(double complex[:, ::1] psi, double[:, ::1] diag,
                     double[::1] ax, double[::1] bz, double dt,
                     double[::1] norms_out):
    """Integrate i dpsi/dt = H(t) psi in place over len(ax)//2 RK4 steps.

    psi, diag: (dim, nb) column batches.  ax, bz: transverse and diagonal
    Hamiltonian coefficients sampled on the half-step grid (2*n_steps + 1
    points).  Writes the final squared norm of each column into norms_out
    and returns the first step index at which amplitudes became
    non-finite, or -1 if the integration stayed finite.
    """
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t nb = psi.shape[1]
    cdef Py_ssize_t n_steps = (ax.shape[0] - 1) // 2
    cdef Py_ssize_t total = 2 * dim * nb
    cdef int nq = 0
    while (<Py_ssize_t>1 << nq) < dim:
        nq += 1

    k1_arr = np.empty((dim, nb), dtype=np.complex128)
    k2_arr = np.empty((dim, nb), dtype=np.complex128)
    k3_arr = np.empty((dim, nb), dtype=np.complex128)
    k4_arr = np.empty((dim, nb), dtype=np.complex128)
    tmp_arr = np.empty((dim, nb), dtype=np.complex128)
    cdef double complex[:, ::1] k1 = k1_arr, k2 = k2_arr, k3 = k3_arr, k4 = k4_arr, tmp = tmp_arr

    cdef double* pp = <double*>&psi[0, 0]
    cdef double* dp = &diag[0, 0]
    cdef double* p1 = <double*>&k1[0, 0]
    cdef double* p2 = <double*>&k2[0, 0]
    cdef double* p3 = <double*>&k3[0, 0]
    cdef double* p4 = <double*>&k4[0, 0]
    cdef double* pt = <double*>&tmp[0, 0]

    cdef Py_ssize_t step, j, idx, c
    cdef double half_dt = 0.5 * dt
    cdef double sixth_dt = dt / 6.0
    cdef double checksum, acc
    cdef Py_ssize_t bad_step = -1

    with nogil:
        for step in range(n_steps):
            j = 2 * step
            _apply_h(p1, pp, dp, ax[j], bz[j], dim, nq, nb)
            for idx in range(total):
                pt[idx] = pp[idx] + half_dt * p1[idx]
            _apply_h(p2, pt, dp, ax[j + 1], bz[j + 1], dim, nq, nb)
            for idx in range(total):
                pt[idx] = pp[idx] + half_dt * p2[idx]
            _apply_h(p3, pt, dp, ax[j + 1], bz[j + 1], dim, nq, nb)
            for idx in range(total):
                pt[idx] = pp[idx] + dt * p3[idx]
            _apply_h(p4, pt, dp, ax[j + 2], bz[j + 2], dim, nq, nb)
            checksum = 0.0
            for idx in range(total):
                acc = pp[idx] + sixth_dt * (p1[idx] + 2.0 * (p2[idx] + p3[idx]) + p4[idx])
                pp[idx] = acc
                checksum += acc
            if not isfinite(checksum):
                bad_step = step
                break
        if bad_step < 0:
            for c in range(nb):
                norms_out[c] = 0.0
            for idx in range(total):
                c = (idx >> 1) % nb
                norms_out[c] += pp[idx] * pp[idx]

    return bad_step
