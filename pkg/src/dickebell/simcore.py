"""Dense statevector simulation.

Bit convention: qubit 0 is the leftmost character of a bitstring and the
most significant bit of a basis index, so ``|0011>`` is index 3 and
amplitude axis 0 of the reshaped ``(2,) * n`` tensor belongs to qubit 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class SizeError(ValueError):
    """Register size outside the supported range."""


class ShapeError(ValueError):
    """Operands act on registers of different sizes."""


def _ry(angle):
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(angle):
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def _controlled(u):
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = u
    return m


_FIXED_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "X": PAULI_MATRICES["X"],
    "Y": PAULI_MATRICES["Y"],
    "Z": PAULI_MATRICES["Z"],
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
}
_ROT_1Q = {"RY": _ry, "RZ": _rz}
_ARITY = {**{k: 1 for k in _FIXED_1Q}, "RY": 1, "RZ": 1, "U": 1,
          "CNOT": 2, "CRY": 2, "RZZ": 2}
GATE_KINDS = tuple(_ARITY)


@dataclass(frozen=True)
class Gate:
    """One gate of the circuit alphabet.

    Two-qubit gates list their targets in the order ``(control, target)`` for
    ``CNOT``/``CRY`` and ``(a, b)`` for the symmetric ``RZZ``. ``U`` carries an
    explicit 2x2 unitary in ``unitary``.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    unitary: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), "
                             f"got targets {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise IndexError(f"repeated target in {self.targets}")
        needs_angle = self.kind in ("RY", "RZ", "CRY", "RZZ")
        if needs_angle and self.angle is None:
            raise ValueError(f"{self.kind} needs an angle")
        if self.kind == "U":
            u = np.asarray(self.unitary, dtype=complex)
            if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12):
                raise ValueError("U gate needs a 2x2 unitary")
            object.__setattr__(self, "unitary", u)

    @property
    def matrix(self) -> np.ndarray:
        k = self.kind
        if k in _FIXED_1Q:
            return _FIXED_1Q[k]
        if k in _ROT_1Q:
            return _ROT_1Q[k](self.angle)
        if k == "U":
            return self.unitary
        if k == "CNOT":
            return _controlled(PAULI_MATRICES["X"])
        if k == "CRY":
            return _controlled(_ry(self.angle))
        # RZZ(t) = exp(-i t ZZ / 2)
        phase = np.exp(-0.5j * self.angle * np.array([1, -1, -1, 1]))
        return np.diag(phase)

    def inverse(self) -> "Gate":
        k = self.kind
        if k in ("H", "X", "Y", "Z", "CNOT"):
            return self
        if k == "S":
            return Gate("Sdg", self.targets)
        if k == "Sdg":
            return Gate("S", self.targets)
        if k == "U":
            return Gate("U", self.targets, unitary=self.unitary.conj().T)
        return Gate(k, self.targets, -self.angle)


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.n_qubits,):
            raise ShapeError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if 2 ** n != amps.size:
            raise ShapeError(f"length {amps.size} is not a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    def amplitude(self, bitstring: str) -> complex:
        if len(bitstring) != self.n_qubits:
            raise ShapeError(f"bitstring {bitstring!r} has the wrong length")
        return complex(self.amplitudes[int(bitstring, 2)])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_size(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"register size must be in 1..{MAX_QUBITS}, got {n!r}")


def new_zero_state(n: int) -> StateVector:
    _check_size(n)
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def basis_state(bitstring: str) -> StateVector:
    n = len(bitstring)
    _check_size(n)
    amps = np.zeros(2 ** n, dtype=complex)
    amps[int(bitstring, 2)] = 1.0
    return StateVector(n, amps)


def _apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` on ``targets``; a trailing column axis of ``amps`` is carried along."""
    k = len(targets)
    psi = amps.reshape((2,) * n + amps.shape[1:])
    op = matrix.reshape((2,) * (2 * k))
    # contract the operator's input legs with the target axes, then move the
    # output legs back into place
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(amps.shape)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    for t in gate.targets:
        if not 0 <= t < n:
            raise IndexError(f"target {t} outside register of {n} qubits")
    return StateVector(n, _apply_matrix(state.amplitudes, n, gate.matrix, gate.targets))


def run_circuit(circuit: Iterable[Gate], state: StateVector | int) -> StateVector:
    """Apply ``circuit`` to ``state`` (or to ``|0...0>`` when given a size)."""
    if not isinstance(state, StateVector):
        state = new_zero_state(state)
    for gate in circuit:
        state = apply_gate(state, gate)
    return state


def circuit_unitary(circuit: Iterable[Gate], n: int) -> np.ndarray:
    """Dense ``2^n x 2^n`` unitary of a gate list; meant for small registers."""
    _check_size(n)
    u = np.eye(2 ** n, dtype=complex)
    for gate in circuit:
        u = _apply_matrix(u, n, gate.matrix, gate.targets)
    return u


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.n_qubits != b.n_qubits:
        raise ShapeError(f"cannot compare {a.n_qubits}- and {b.n_qubits}-qubit states")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def check_pauli(p: str, n: int | None = None) -> str:
    if not p or any(c not in "XYZ" for c in p):
        raise ValueError(f"Pauli string must be over X, Y, Z: {p!r}")
    if n is not None and len(p) != n:
        raise ShapeError(f"Pauli string {p!r} does not match a {n}-qubit register")
    return p


def apply_pauli(amps: np.ndarray, n: int, p: str) -> np.ndarray:
    out = amps
    for q, axis in enumerate(p):
        if axis != "I":
            out = _apply_matrix(out, n, PAULI_MATRICES[axis], (q,))
    return out


def pauli_expectation_complex(state: StateVector, p: str) -> complex:
    check_pauli(p, state.n_qubits)
    return complex(np.vdot(state.amplitudes, apply_pauli(state.amplitudes, state.n_qubits, p)))


def expectation_pauli(state: StateVector, p: str) -> float:
    """Exact ``<psi|P|psi>`` for a Pauli string ``p`` such as ``"XYXY"``."""
    value = pauli_expectation_complex(state, p).real
    return float(np.clip(value, -1.0, 1.0))


def pauli_matrix(p: str) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of a Pauli string; for oracles and small n."""
    m = np.eye(1, dtype=complex)
    for axis in p:
        m = np.kron(m, PAULI_MATRICES[axis])
    return m
