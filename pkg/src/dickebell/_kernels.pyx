# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Bell polynomials, the simplex search driving them, and
the matrix-free readout-mitigation product.

Every function here has a behaviourally identical twin in ``_pykernels``.
Angle vectors are packed as consecutive ``(theta, phi)`` pairs:
CHSH order ``A, A', B, B'``; Dicke order ``A, A', B, B', C, C', D, D'``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs

cnp.import_array()

cdef enum:
    CHSH = 0
    DICKE = 1


cdef inline double _pair(double ta, double pa, double tb, double pb) noexcept nogil:
    return cos(ta) * cos(tb) + cos(pa + pb) * sin(ta) * sin(tb)


cdef double _chsh(const double* x) noexcept nogil:
    cdef double ta = x[0], pa = x[1], tap = x[2], pap = x[3]
    cdef double tb = x[4], pb = x[5], tbp = x[6], pbp = x[7]
    return (_pair(ta, pa, tb, pb) + _pair(ta, pa, tbp, pbp)
            - _pair(tap, pap, tb, pb) + _pair(tap, pap, tbp, pbp))


cdef double _dterm(double ta, double pa, double tb, double pb,
                   double tc, double pc, double td, double pd) noexcept nogil:
    cdef double sa = sin(ta), ca = cos(ta), sb = sin(tb), cb = cos(tb)
    cdef double sc = sin(tc), cc = cos(tc), sd = sin(td), cd = cos(td)
    cdef double first = sa * (
        -2.0 * cc * (cd * cos(pa - pb) * sb + cb * cos(pa - pd) * sd)
        + sc * (-2.0 * cb * cd * cos(pa - pc)
                + (cos(pa + pb - pc - pd) + 2.0 * cos(pa - pb) * cos(pc - pd)) * sb * sd))
    cdef double second = ca * (
        -2.0 * sb * (cd * cos(pb - pc) * sc + cc * cos(pb - pd) * sd)
        + cb * (3.0 * cc * cd - 2.0 * cos(pc - pd) * sc * sd))
    return (first + second) / 3.0


cdef double _dicke(const double* x) noexcept nogil:
    # slots: A=0, A'=2, B=4, B'=6, C=8, C'=10, D=12, D'=14
    return (_dterm(x[0], x[1], x[4], x[5], x[8], x[9], x[12], x[13])
            + _dterm(x[0], x[1], x[6], x[7], x[10], x[11], x[14], x[15])
            + _dterm(x[2], x[3], x[4], x[5], x[10], x[11], x[12], x[13])
            - _dterm(x[2], x[3], x[6], x[7], x[8], x[9], x[14], x[15]))


cdef inline double _objective(int which, const double* x) noexcept nogil:
    if which == CHSH:
        return -_chsh(x)
    return -_dicke(x)


def chsh_value(x):
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    if v.shape[0] != 8:
        raise ValueError("CHSH angle vector must have 8 entries")
    return _chsh(&v[0])


def dicke_term(double ta, double pa, double tb, double pb,
               double tc, double pc, double td, double pd):
    return _dterm(ta, pa, tb, pb, tc, pc, td, pd)


def dicke_value(x):
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    if v.shape[0] != 16:
        raise ValueError("Dicke angle vector must have 16 entries")
    return _dicke(&v[0])


def nelder_mead(str objective, x0, double xatol, double fatol,
                int maxiter, int maxfev):
    """Minimise the negated Bell polynomial with the adaptive simplex method.

    Returns ``(x, value, nit, nfev, converged)`` where ``value`` is the
    polynomial (not its negation) at ``x``.
    """
    cdef int which
    if objective == "chsh":
        which = CHSH
    elif objective == "dicke":
        which = DICKE
    else:
        raise ValueError(f"unknown objective {objective!r}")

    cdef double[::1] start = np.ascontiguousarray(x0, dtype=np.float64)
    cdef int n = start.shape[0]
    if (which == CHSH and n != 8) or (which == DICKE and n != 16):
        raise ValueError("angle vector has the wrong length")

    cdef double rho = 1.0
    cdef double chi = 1.0 + 2.0 / n
    cdef double psi = 0.75 - 1.0 / (2.0 * n)
    cdef double sigma = 1.0 - 1.0 / n

    sim_arr = np.empty((n + 1, n), dtype=np.float64)
    cdef double[:, ::1] sim = sim_arr
    cdef double[::1] fsim = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] xbar = np.empty(n, dtype=np.float64)
    cdef double[::1] xr = np.empty(n, dtype=np.float64)
    cdef double[::1] xe = np.empty(n, dtype=np.float64)
    cdef double[::1] xc = np.empty(n, dtype=np.float64)
    cdef double[::1] tmp = np.empty(n, dtype=np.float64)

    cdef int i, j, k, nfev = 0, nit = 1
    cdef bint converged = False, shrink
    cdef double fxr, fxe, fxc, ftmp, spread

    with nogil:
        for j in range(n):
            sim[0, j] = start[j]
        for k in range(n):
            for j in range(n):
                sim[k + 1, j] = start[j]
            if start[k] != 0.0:
                sim[k + 1, k] = 1.05 * start[k]
            else:
                sim[k + 1, k] = 0.00025
        for k in range(n + 1):
            fsim[k] = _objective(which, &sim[k, 0])
            nfev += 1
        _sort_simplex(sim, fsim, tmp, n)

        while nfev < maxfev and nit < maxiter:
            spread = 0.0
            for k in range(1, n + 1):
                for j in range(n):
                    if fabs(sim[k, j] - sim[0, j]) > spread:
                        spread = fabs(sim[k, j] - sim[0, j])
            if spread <= xatol:
                spread = 0.0
                for k in range(1, n + 1):
                    if fabs(fsim[0] - fsim[k]) > spread:
                        spread = fabs(fsim[0] - fsim[k])
                if spread <= fatol:
                    converged = True
                    break

            for j in range(n):
                xbar[j] = 0.0
                for k in range(n):
                    xbar[j] += sim[k, j]
                xbar[j] /= n
                xr[j] = (1.0 + rho) * xbar[j] - rho * sim[n, j]
            fxr = _objective(which, &xr[0])
            nfev += 1
            shrink = False

            if fxr < fsim[0]:
                for j in range(n):
                    xe[j] = (1.0 + rho * chi) * xbar[j] - rho * chi * sim[n, j]
                fxe = _objective(which, &xe[0])
                nfev += 1
                if fxe < fxr:
                    _replace_last(sim, fsim, xe, fxe, n)
                else:
                    _replace_last(sim, fsim, xr, fxr, n)
            elif fxr < fsim[n - 1]:
                _replace_last(sim, fsim, xr, fxr, n)
            elif fxr < fsim[n]:
                for j in range(n):
                    xc[j] = (1.0 + psi * rho) * xbar[j] - psi * rho * sim[n, j]
                fxc = _objective(which, &xc[0])
                nfev += 1
                if fxc <= fxr:
                    _replace_last(sim, fsim, xc, fxc, n)
                else:
                    shrink = True
            else:
                for j in range(n):
                    xc[j] = (1.0 - psi) * xbar[j] + psi * sim[n, j]
                fxc = _objective(which, &xc[0])
                nfev += 1
                if fxc < fsim[n]:
                    _replace_last(sim, fsim, xc, fxc, n)
                else:
                    shrink = True

            if shrink:
                for k in range(1, n + 1):
                    for j in range(n):
                        sim[k, j] = sim[0, j] + sigma * (sim[k, j] - sim[0, j])
                    fsim[k] = _objective(which, &sim[k, 0])
                    nfev += 1
            _sort_simplex(sim, fsim, tmp, n)
            nit += 1

    return sim_arr[0].copy(), -fsim[0], nit, nfev, bool(converged)


cdef inline void _replace_last(double[:, ::1] sim, double[::1] fsim,
                               double[::1] x, double fx, int n) noexcept nogil:
    cdef int j
    for j in range(n):
        sim[n, j] = x[j]
    fsim[n] = fx


cdef void _sort_simplex(double[:, ::1] sim, double[::1] fsim,
                        double[::1] tmp, int n) noexcept nogil:
    # stable insertion sort; the simplex is nearly sorted after one step
    cdef int i, j, k
    cdef double key
    for i in range(1, n + 1):
        key = fsim[i]
        for k in range(n):
            tmp[k] = sim[i, k]
        j = i - 1
        while j >= 0 and fsim[j] > key:
            fsim[j + 1] = fsim[j]
            for k in range(n):
                sim[j + 1, k] = sim[j, k]
            j -= 1
        fsim[j + 1] = key
        for k in range(n):
            sim[j + 1, k] = tmp[k]


def m3_matvec(const cnp.uint8_t[:, ::1] bits, const double[:, :, ::1] cals, x):
    """``y = A_SS @ x`` with ``A[obs, true] = prod_q cals[q, obs_q, true_q]``.

    The reduced matrix is never stored; each entry is rebuilt on the fly.
    """
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t k = bits.shape[0], n = bits.shape[1]
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t i, j, q
    cdef double acc, a
    with nogil:
        for i in range(k):
            acc = 0.0
            for j in range(k):
                a = xv[j]
                for q in range(n):
                    a *= cals[q, bits[i, q], bits[j, q]]
                    if a == 0.0:
                        break
                acc += a
            y[i] = acc
    return out


def m3_rmatvec(const cnp.uint8_t[:, ::1] bits, const double[:, :, ::1] cals, x):
    """Transpose product ``A_SS.T @ x``, for solvers that need it."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t k = bits.shape[0], n = bits.shape[1]
    out = np.zeros(k, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t i, j, q
    cdef double acc, a
    with nogil:
        for j in range(k):
            acc = 0.0
            for i in range(k):
                a = xv[i]
                for q in range(n):
                    a *= cals[q, bits[i, q], bits[j, q]]
                    if a == 0.0:
                        break
                acc += a
            y[j] = acc
    return out
