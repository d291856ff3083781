"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built or when ``DICKEBELL_PURE_PYTHON=1``.
The simplex search delegates to :func:`scipy.optimize.minimize`, which runs
the same adaptive Nelder-Mead coefficients as the compiled loop.
"""
from math import cos, sin

import numpy as np
from scipy.optimize import minimize


def _pair(ta, pa, tb, pb):
    return cos(ta) * cos(tb) + cos(pa + pb) * sin(ta) * sin(tb)


def chsh_value(x):
    ta, pa, tap, pap, tb, pb, tbp, pbp = _as_list(x, 8, "CHSH")
    return (_pair(ta, pa, tb, pb) + _pair(ta, pa, tbp, pbp)
            - _pair(tap, pap, tb, pb) + _pair(tap, pap, tbp, pbp))


def dicke_term(ta, pa, tb, pb, tc, pc, td, pd):
    sa, ca, sb, cb = sin(ta), cos(ta), sin(tb), cos(tb)
    sc, cc, sd, cd = sin(tc), cos(tc), sin(td), cos(td)
    first = sa * (
        -2.0 * cc * (cd * cos(pa - pb) * sb + cb * cos(pa - pd) * sd)
        + sc * (-2.0 * cb * cd * cos(pa - pc)
                + (cos(pa + pb - pc - pd) + 2.0 * cos(pa - pb) * cos(pc - pd)) * sb * sd))
    second = ca * (
        -2.0 * sb * (cd * cos(pb - pc) * sc + cc * cos(pb - pd) * sd)
        + cb * (3.0 * cc * cd - 2.0 * cos(pc - pd) * sc * sd))
    return (first + second) / 3.0


def _as_list(x, size, what):
    v = x.tolist() if isinstance(x, np.ndarray) else [float(t) for t in x]
    if len(v) != size or (isinstance(x, np.ndarray) and x.ndim != 1):
        raise ValueError(f"{what} angle vector must have {size} entries")
    return v


def dicke_value(x):
    v = _as_list(x, 16, "Dicke")
    return (dicke_term(v[0], v[1], v[4], v[5], v[8], v[9], v[12], v[13])
            + dicke_term(v[0], v[1], v[6], v[7], v[10], v[11], v[14], v[15])
            + dicke_term(v[2], v[3], v[4], v[5], v[10], v[11], v[12], v[13])
            - dicke_term(v[2], v[3], v[6], v[7], v[8], v[9], v[14], v[15]))


_OBJECTIVES = {"chsh": chsh_value, "dicke": dicke_value}


def nelder_mead(objective, x0, xatol, fatol, maxiter, maxfev):
    try:
        f = _OBJECTIVES[objective]
    except KeyError:
        raise ValueError(f"unknown objective {objective!r}") from None
    res = minimize(lambda x: -f(x), np.asarray(x0, dtype=float), method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter,
                            "maxfev": maxfev, "adaptive": True})
    # scipy counts iterations from zero, the compiled loop from one
    return np.asarray(res.x), -float(res.fun), int(res.nit) + 1, int(res.nfev), bool(res.success)


def _reduced_matrix(bits, cals, rows):
    n = bits.shape[1]
    q = np.arange(n)
    entries = cals[q[None, None, :], bits[rows][:, None, :], bits[None, :, :]]
    return entries.prod(axis=2)


def m3_matvec(bits, cals, x, _chunk=256):
    bits = np.asarray(bits, dtype=np.uint8)
    x = np.asarray(x, dtype=float)
    out = np.empty(bits.shape[0])
    for start in range(0, bits.shape[0], _chunk):
        rows = slice(start, start + _chunk)
        out[rows] = _reduced_matrix(bits, cals, rows) @ x
    return out


def m3_rmatvec(bits, cals, x, _chunk=256):
    bits = np.asarray(bits, dtype=np.uint8)
    x = np.asarray(x, dtype=float)
    out = np.zeros(bits.shape[0])
    for start in range(0, bits.shape[0], _chunk):
        rows = slice(start, start + _chunk)
        out += x[rows] @ _reduced_matrix(bits, cals, rows)
    return out
