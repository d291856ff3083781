import math
from itertools import combinations

import numpy as np
import pytest

from dickebell.prep import (Method, circuit_depth, dicke_amplitudes, dicke_circuit,
                            format_circuit, parse_circuit, prepare_bell, prepare_dicke_direct,
                            prepare_dicke_gate)
from dickebell.simcore import Gate, StateVector, fidelity, run_circuit


def dicke_oracle(n, k):
    v = np.zeros(2 ** n)
    for ones in combinations(range(n), k):
        v[sum(1 << (n - 1 - q) for q in ones)] = 1
    return StateVector(n, v / np.linalg.norm(v))


def test_bell():
    b = prepare_bell()
    assert b.state.amplitude("00") == pytest.approx(0.70710678, abs=1e-8)
    assert abs(b.state.amplitude("00") - 1 / math.sqrt(2)) < 1e-12
    assert b.state.amplitude("01") == 0
    assert b.depth == 2
    assert b.method is Method.GATE_BASED


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 8) for k in range(1, n + 1)])
def test_dicke_gate_all_small(n, k):
    s = prepare_dicke_gate(n, k)
    assert fidelity(s.state, dicke_oracle(n, k)) >= 1 - 1e-9
    np.testing.assert_allclose(run_circuit(s.circuit, n).amplitudes, s.state.amplitudes)


def test_dicke_small_cases():
    np.testing.assert_allclose(prepare_dicke_gate(2, 1).state.amplitudes,
                               [0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0], atol=1e-12)
    assert abs(prepare_dicke_gate(4, 4).state.amplitude("1111")) == pytest.approx(1)
    d31 = prepare_dicke_direct(3, 1).state
    for key in ("001", "010", "100"):
        assert d31.amplitude(key) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert prepare_dicke_direct(1, 1).state.amplitude("1") == 1


def test_dicke_direct_amplitudes():
    s = prepare_dicke_direct(4, 2)
    assert s.method is Method.DIRECT and s.circuit is None
    weight2 = [i for i in range(16) if bin(i).count("1") == 2]
    np.testing.assert_allclose(s.state.amplitudes[weight2], 0.40824829, atol=1e-8)
    np.testing.assert_allclose(s.state.amplitudes[weight2], 1 / math.sqrt(6), atol=1e-12)
    assert np.count_nonzero(s.state.amplitudes) == 6


@pytest.mark.parametrize("n,k", [(3, 4), (2, 0), (0, 0)])
def test_dicke_domain_errors(n, k):
    with pytest.raises(ValueError):
        prepare_dicke_gate(n, k)
    with pytest.raises(ValueError):
        dicke_amplitudes(n, k)


def test_dicke_4_2_resources():
    s = prepare_dicke_gate(4, 2)
    assert s.gate_counts == {"X": 2, "CNOT": 14, "CRY": 9}
    assert s.depth == circuit_depth(s.circuit)


def test_circuit_text_round_trip():
    circuit = dicke_circuit(4, 2) + [Gate("U", (1,), unitary=np.array([[0, 1j], [1j, 0]])),
                                     Gate("RZZ", (0, 3), -0.25), Gate("Sdg", (2,))]
    again = parse_circuit("# header\n\n" + format_circuit(circuit))
    assert [(g.kind, g.targets, g.angle) for g in again] == \
        [(g.kind, g.targets, g.angle) for g in circuit]
    np.testing.assert_array_equal(again[-3].unitary, circuit[-3].unitary)


def test_parse_circuit_error_reports_line():
    with pytest.raises(ValueError, match="line 2"):
        parse_circuit("H 0\nCNOT 0\n")
