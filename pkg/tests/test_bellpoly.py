import math

import numpy as np
import pytest

from dickebell import bellpoly as bp
from dickebell.observables import MeasurementSetting, expectation_setting
from dickebell.prep import prepare_bell, prepare_dicke_direct

BELL = prepare_bell().state
DICKE = prepare_dicke_direct(4, 2).state


def random_settings(rng, k):
    return [MeasurementSetting(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            for _ in range(k)]


def test_tables_embedded_verbatim():
    assert bp.CHSH_ANGLES_DEG["A"] == (45.03, 0.014)
    assert bp.CHSH_ANGLES_DEG["B'"] == (0.027, 33.88)
    assert bp.DICKE_ANGLES_DEG["B'"] == (69.0948, 57.2234)
    assert bp.DICKE_ANGLES_DEG["D'"] == (69.0964, 57.2234)
    assert bp.dicke_reference_angles().settings()["C"].degrees == pytest.approx((30.3962, 57.2234))


def test_sign_structure():
    assert [s for *_, s in bp.CHSH_TERMS] == [1, 1, -1, 1]
    assert [s for *_, s in bp.DICKE_TERMS] == [1, 1, 1, -1]


def test_chsh_closed_form_examples(backend):
    assert bp.chsh_closed_form(bp.chsh_reference_angles()) == pytest.approx(2.828, abs=1e-3)
    z = bp.ChshAngles.from_degrees({k: (0, 0) for k in bp.CHSH_ANGLES_DEG})
    assert bp.chsh_closed_form(z) == pytest.approx(2)


def test_chsh_closed_form_equals_hand_expansion(backend, rng):
    for _ in range(20):
        ang = bp.ChshAngles.from_vector(rng.uniform(-3, 7, 8))
        c = bp.chsh_correlators(ang)
        assert bp.chsh_closed_form(ang) == pytest.approx(c["AB"] + c["AB'"] - c["A'B"] + c["A'B'"],
                                                         abs=1e-12)


def test_chsh_pair_matches_statevector(rng):
    for _ in range(200):
        a, b = random_settings(rng, 2)
        assert bp.chsh_pair(a, b) == pytest.approx(expectation_setting(BELL, [a, b]), abs=1e-10)


def test_dicke_term_matches_statevector(backend, rng):
    for _ in range(200):
        s = random_settings(rng, 4)
        assert bp.dicke_term_closed_form(*s) == pytest.approx(expectation_setting(DICKE, s),
                                                               abs=1e-10)


def test_dicke_examples(backend):
    c = bp.dicke_correlators(bp.dicke_reference_angles())
    assert c["ABCD"] == pytest.approx(0.800, abs=1e-3)
    assert bp.dicke_bell_value(bp.dicke_reference_angles()) == pytest.approx(3.055, abs=2e-3)
    z = bp.DickeAngles.from_degrees({k: (0, 0) for k in bp.DICKE_ANGLES_DEG})
    assert bp.dicke_correlators(z)["ABCD"] == pytest.approx(1)
    assert bp.dicke_bell_value(z) == pytest.approx(2)


def test_dicke_value_equals_hand_expansion(backend, rng):
    for _ in range(50):
        ang = bp.DickeAngles.from_vector(rng.uniform(-3, 7, 16))
        c = bp.dicke_correlators(ang)
        hand = c["ABCD"] + c["AB'C'D'"] + c["A'BC'D"] - c["A'B'CD'"]
        v = bp.dicke_bell_value(ang)
        assert v == pytest.approx(hand, abs=1e-12)
        assert abs(v) <= 4


def test_angle_packing_round_trip(rng):
    x = bp.DickeAngles.from_vector(rng.uniform(0, 3, 16)).to_vector()
    assert np.allclose(bp.DickeAngles.from_vector(x).to_vector(), x)
    with pytest.raises(ValueError, match="missing"):
        bp.ChshAngles.from_degrees({"A": (0, 0)})


def test_restart_streams_are_independent_of_count():
    a = bp.restart_rng(7, 3).uniform(size=4)
    b = bp.restart_rng(7, 3).uniform(size=4)
    c = bp.restart_rng(7, 4).uniform(size=4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_optimize_chsh(backend):
    r = bp.optimize_chsh(restarts=20, seed=3)
    assert r.value == pytest.approx(bp.TSIRELSON, abs=1e-6)
    assert r.value <= bp.TSIRELSON + 1e-9
    assert r.value == pytest.approx(bp.chsh_closed_form(r.angles), abs=1e-9)
    assert len(r.start_values) == 20 and r.optima


def test_optimize_chsh_from_table(backend):
    r = bp.optimize_chsh(restarts=1, start=bp.chsh_reference_angles())
    assert r.value >= 2.828427


def test_optimize_dicke_from_table(backend):
    r = bp.optimize_dicke(restarts=1, start=bp.dicke_reference_angles())
    assert r.value >= 3.0549
    assert r.value == pytest.approx(bp.dicke_bell_value(r.angles), abs=1e-9)


def test_optimize_deterministic_and_worker_independent():
    a = bp.optimize_dicke(restarts=12, seed=5)
    b = bp.optimize_dicke(restarts=12, seed=5, workers=4)
    assert a.value == b.value
    assert np.array_equal(a.angles.to_vector(), b.angles.to_vector())


def test_optimize_rejects_zero_restarts():
    with pytest.raises(ValueError):
        bp.optimize_chsh(restarts=0)
