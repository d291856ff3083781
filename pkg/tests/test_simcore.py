import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dickebell.simcore import (GATE_KINDS, Gate, ShapeError, SizeError, StateVector, apply_gate,
                               basis_state, circuit_unitary, expectation_pauli, fidelity,
                               new_zero_state, pauli_matrix, run_circuit)

BELL = StateVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2))


def random_state(rng, n):
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector.from_amplitudes(v, normalize=True)


def random_gate(rng, n):
    kind = rng.choice([k for k in GATE_KINDS if k != "U"])
    arity = 2 if kind in ("CNOT", "CRY", "RZZ") else 1
    targets = tuple(int(t) for t in rng.choice(n, size=arity, replace=False))
    angle = float(rng.uniform(-4, 4)) if kind in ("RY", "RZ", "CRY", "RZZ") else None
    return Gate(str(kind), targets, angle)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_zero_state(n):
    s = new_zero_state(n)
    assert s.amplitudes.shape == (2 ** n,)
    assert s.amplitude("0" * n) == 1
    assert s.norm() == pytest.approx(1.0)


@pytest.mark.parametrize("n", [0, 13, -1, 2.0])
def test_zero_state_size_error(n):
    with pytest.raises(SizeError):
        new_zero_state(n)


def test_hadamard_and_bell():
    plus = apply_gate(new_zero_state(1), Gate("H", (0,)))
    np.testing.assert_allclose(plus.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)
    bell = run_circuit([Gate("H", (0,)), Gate("CNOT", (0, 1))], 2)
    np.testing.assert_allclose(bell.amplitudes, BELL.amplitudes, atol=1e-15)


def test_bit_order_msb_is_qubit_zero():
    s = apply_gate(new_zero_state(3), Gate("X", (0,)))
    assert s.amplitude("100") == 1
    assert abs(s.amplitudes[4]) == 1


def test_cnot_control_target_order():
    s = run_circuit([Gate("CNOT", (1, 0))], basis_state("01"))
    assert s.amplitude("11") == 1


def test_bad_target_index():
    with pytest.raises(IndexError):
        apply_gate(new_zero_state(2), Gate("X", (2,)))
    with pytest.raises(IndexError):
        Gate("CNOT", (1, 1))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("RY", (0,))
    with pytest.raises(ValueError):
        Gate("FOO", (0,))
    with pytest.raises(ValueError):
        Gate("U", (0,), unitary=np.ones((2, 2)))


def test_amplitudes_read_only():
    s = new_zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


@pytest.mark.parametrize("kind", GATE_KINDS)
def test_gate_matrices_unitary(kind, rng):
    arity = 2 if kind in ("CNOT", "CRY", "RZZ") else 1
    angle = 0.37 if kind in ("RY", "RZ", "CRY", "RZZ") else None
    u = None
    if kind == "U":
        q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        u = q
    g = Gate(kind, tuple(range(arity)), angle, unitary=u)
    m = g.matrix
    np.testing.assert_allclose(m.conj().T @ m, np.eye(2 ** arity), atol=1e-12)
    np.testing.assert_allclose(g.inverse().matrix @ m, np.eye(2 ** arity), atol=1e-12)


def test_rzz_definition():
    t = 0.3
    expected = np.diag(np.exp(-0.5j * t * np.diag(pauli_matrix("ZZ"))))
    np.testing.assert_allclose(Gate("RZZ", (0, 1), t).matrix, expected, atol=1e-15)


def test_fidelity_examples():
    assert fidelity(BELL, BELL) == pytest.approx(1.0)
    assert fidelity(basis_state("00"), basis_state("11")) == 0
    assert fidelity(BELL, basis_state("00")) == pytest.approx(0.5)
    with pytest.raises(ShapeError):
        fidelity(BELL, new_zero_state(3))


def test_expectation_examples():
    assert expectation_pauli(BELL, "ZZ") == pytest.approx(1)
    assert expectation_pauli(BELL, "XY") == pytest.approx(0, abs=1e-15)
    d = np.zeros(16)
    d[[i for i in range(16) if bin(i).count("1") == 2]] = 1 / math.sqrt(6)
    assert expectation_pauli(StateVector(4, d), "XXXX") == pytest.approx(1, abs=1e-12)
    with pytest.raises(ShapeError):
        expectation_pauli(BELL, "XXX")
    with pytest.raises(ValueError):
        expectation_pauli(BELL, "XA")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_random_circuit_preserves_norm_and_inverts(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    circuit = [random_gate(rng, n) for _ in range(12)] if n > 1 else \
        [Gate(k, (0,), 0.4 if k in ("RY", "RZ") else None) for k in ("H", "S", "RY", "RZ", "Y")]
    out = run_circuit(circuit, psi)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    back = run_circuit([g.inverse() for g in reversed(circuit)], out)
    assert fidelity(back, psi) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.text("XYZ", min_size=3, max_size=3))
def test_expectation_matches_dense_oracle(seed, p):
    psi = random_state(np.random.default_rng(seed), 3)
    dense = np.vdot(psi.amplitudes, pauli_matrix(p) @ psi.amplitudes).real
    assert expectation_pauli(psi, p) == pytest.approx(dense, abs=1e-12)


def test_circuit_unitary_matches_simulation(rng):
    circuit = [random_gate(rng, 3) for _ in range(10)]
    psi = random_state(rng, 3)
    u = circuit_unitary(circuit, 3)
    np.testing.assert_allclose(u @ psi.amplitudes, run_circuit(circuit, psi).amplitudes, atol=1e-12)
