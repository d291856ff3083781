import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickebell import _backend, _pykernels
from dickebell.bellpoly import DICKE_ANGLES_DEG, DickeAngles

angle = st.floats(-10.0, 10.0, allow_nan=False)


def test_backend_reports_name():
    assert _backend.NAME in ("compiled", "python")
    assert _backend.COMPILED == (_backend.NAME == "compiled")


def test_chsh_value_matches_reference(kern):
    # A = z, A' = -x, B and B' at +-45 degrees in the x-z plane
    x = np.array([0, 0, math.pi / 2, math.pi, math.pi / 4, 0, -math.pi / 4, 0])
    assert kern.chsh_value(x) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_dicke_value_matches_python(kern, rng):
    for _ in range(50):
        x = rng.uniform(-4, 4, 16)
        assert kern.dicke_value(x) == pytest.approx(_pykernels.dicke_value(x), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(angle, min_size=8, max_size=8))
def test_dicke_term_bounded_and_backend_agnostic(xs):
    ref = _pykernels.dicke_term(*xs)
    assert -1 - 1e-12 <= ref <= 1 + 1e-12
    from conftest import _kernels
    if _kernels is not None:
        assert _kernels.dicke_term(*xs) == pytest.approx(ref, abs=1e-12)


def test_nelder_mead_reaches_chsh_optimum(kern, rng):
    x0 = rng.uniform(0, math.pi, 8)
    x, value, nit, nfev, converged = kern.nelder_mead("chsh", x0, 1e-7, 1e-9, 5000, 10 ** 7)
    assert value == pytest.approx(kern.chsh_value(x), abs=1e-12)
    assert nfev >= nit
    assert value <= 2 * math.sqrt(2) + 1e-12


def test_nelder_mead_unknown_objective(kern):
    with pytest.raises(ValueError):
        kern.nelder_mead("nope", np.zeros(8), 1e-7, 1e-9, 10, 100)


def test_nelder_mead_backends_agree_from_table():
    from conftest import _kernels
    if _kernels is None:
        pytest.skip("extension not built")
    x0 = DickeAngles.from_degrees(DICKE_ANGLES_DEG).to_vector()
    a = _kernels.nelder_mead("dicke", x0, 1e-8, 1e-10, 5000, 10 ** 7)
    b = _pykernels.nelder_mead("dicke", x0, 1e-8, 1e-10, 5000, 10 ** 7)
    assert a[1] == pytest.approx(b[1], abs=1e-8)


def _dense_reduced(bits, cals):
    k, n = bits.shape
    a = np.ones((k, k))
    for q in range(n):
        a *= cals[q][bits[:, q][:, None], bits[:, q][None, :]]
    return a


def test_m3_matvec_against_dense(kern, rng):
    n = 5
    bits = np.ascontiguousarray(rng.integers(0, 2, size=(13, n)).astype(np.uint8))
    p = rng.uniform(0, 0.1, size=(n, 2))
    cals = np.empty((n, 2, 2))
    cals[:, 0, 0], cals[:, 1, 0] = 1 - p[:, 0], p[:, 0]
    cals[:, 0, 1], cals[:, 1, 1] = p[:, 1], 1 - p[:, 1]
    x = rng.normal(size=13)
    a = _dense_reduced(bits, cals)
    np.testing.assert_allclose(kern.m3_matvec(bits, cals, x), a @ x, atol=1e-14)
    np.testing.assert_allclose(kern.m3_rmatvec(bits, cals, x), a.T @ x, atol=1e-14)
