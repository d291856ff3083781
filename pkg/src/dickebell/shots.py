"""Finite-shot measurement, counts -> expectation values, and noise injection.

Random streams: every draw comes from ``derive_rng(seed, *keys)``, a PCG64
generator seeded by ``SeedSequence([seed, *keys])``. The harness uses keys
``(repetition, circuit_index)``; calibration circuits use
``(repetition, CALIBRATION_KEY, circuit_index)``. Shots of one circuit are
drawn together from a multinomial, so no per-shot key is needed.

Counts file format (JSON)::

    {"format": "counts-v1", "n_qubits": 2, "shots": 10000,
     "counts": {"00": 4987, "11": 5013}}

Keys are bitstrings with qubit 0 leftmost; absent keys mean zero counts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .confusion import ConfusionModel
from .simcore import (PAULI_MATRICES, Gate, ShapeError, StateVector, _apply_matrix,
                      check_pauli, circuit_unitary, pauli_matrix, run_circuit)

CALIBRATION_KEY = 1_000_003


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass(frozen=True)
class CountsMap:
    counts: dict[str, int]
    shots: int
    n_qubits: int

    def __post_init__(self):
        counts = {k: int(v) for k, v in sorted(self.counts.items()) if int(v) != 0}
        for key, v in counts.items():
            if len(key) != self.n_qubits or set(key) - {"0", "1"}:
                raise ValueError(f"bad bitstring key {key!r} for {self.n_qubits} qubits")
            if v < 0:
                raise ValueError(f"negative count for {key!r}")
        if sum(counts.values()) != self.shots:
            raise ValueError(f"counts sum to {sum(counts.values())}, expected {self.shots} shots")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_dict(cls, counts: Mapping[str, int]) -> "CountsMap":
        if not counts:
            raise ValueError("empty counts")
        n = len(next(iter(counts)))
        return cls(dict(counts), int(sum(counts.values())), n)

    @classmethod
    def from_vector(cls, vec: np.ndarray, n: int) -> "CountsMap":
        vec = np.asarray(vec)
        counts = {format(i, f"0{n}b"): int(v) for i, v in enumerate(vec) if v}
        return cls(counts, int(vec.sum()), n)

    def vector(self) -> np.ndarray:
        v = np.zeros(2 ** self.n_qubits, dtype=np.int64)
        for key, c in self.counts.items():
            v[int(key, 2)] = c
        return v

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def to_json(self) -> str:
        return json.dumps({"format": "counts-v1", "n_qubits": self.n_qubits,
                           "shots": self.shots, "counts": self.counts}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CountsMap":
        doc = json.loads(text)
        if "counts" not in doc:
            # a bare bitstring -> count mapping is accepted too
            return cls.from_dict(doc)
        counts = doc["counts"]
        n = int(doc.get("n_qubits") or len(next(iter(counts))))
        return cls(counts, int(doc["shots"]), n)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise applied while sampling.

    ``coherent_overrotation_rad`` adds ``exp(-i eps G / 2)`` on the pair after
    every CNOT, with generator ``G = ZZ`` (default) or ``G = ZX`` (control Z,
    target X); ``two_qubit_pauli_error_prob`` then injects a uniformly random
    non-identity two-qubit Pauli on that pair. With ``twirl`` each CNOT (with
    its coherent error) is sandwiched in a random Pauli frame per shot.
    """

    readout: ConfusionModel | None = None
    two_qubit_pauli_error_prob: float = 0.0
    coherent_overrotation_rad: float = 0.0
    coherent_axis: str = "ZZ"
    twirl: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.two_qubit_pauli_error_prob <= 1.0:
            raise ValueError("two_qubit_pauli_error_prob must lie in [0, 1]")
        if self.coherent_axis not in ("ZZ", "ZX"):
            raise ValueError("coherent_axis must be 'ZZ' or 'ZX'")

    @property
    def has_gate_noise(self) -> bool:
        return (self.two_qubit_pauli_error_prob > 0 or self.coherent_overrotation_rad != 0
                or self.twirl)


NOISELESS = NoiseSpec()


def measurement_circuit(p: str) -> list[Gate]:
    """Basis change mapping each Pauli eigenbasis onto the computational basis.

    X: H. Y: S-dagger then H. Z: nothing.
    """
    check_pauli(p)
    gates = []
    for q, axis in enumerate(p):
        if axis == "X":
            gates.append(Gate("H", (q,)))
        elif axis == "Y":
            gates += [Gate("Sdg", (q,)), Gate("H", (q,))]
    return gates


def apply_readout_noise(ideal_distribution, confusion: ConfusionModel) -> np.ndarray:
    p = np.asarray(ideal_distribution, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {p.sum()}, not 1")
    return confusion.apply(p)


def _measured_probabilities(state: StateVector, basis: str, readout: ConfusionModel | None):
    probs = run_circuit(measurement_circuit(basis), state).probabilities()
    if readout is not None:
        if readout.n_qubits != state.n_qubits:
            raise ShapeError("readout model and state sizes differ")
        probs = readout.apply(probs)
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def _draw(rng, shots, probs, n):
    return CountsMap.from_vector(rng.multinomial(shots, probs), n)


def _check_shots(shots):
    if int(shots) < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")


def sample_counts(state: StateVector, basis: str, shots: int, noise: NoiseSpec | None = None,
                  seed: int | None = None, stream: Sequence[int] = ()) -> CountsMap:
    """Sample ``shots`` outcomes of measuring ``basis`` on ``state``.

    Only readout noise applies here (the state is given, not a circuit).
    The stream is ``derive_rng(seed, *stream)``; ``seed`` defaults to ``noise.seed``.
    """
    _check_shots(shots)
    check_pauli(basis, state.n_qubits)
    noise = noise or NOISELESS
    rng = derive_rng(noise.seed if seed is None else seed, *stream)
    return _draw(rng, shots, _measured_probabilities(state, basis, noise.readout), state.n_qubits)


def expectation_from_distribution(dist: Mapping[str, float], p: str) -> float:
    check_pauli(p)
    value = 0.0
    for key, prob in dist.items():
        if len(key) != len(p):
            raise ShapeError(f"outcome {key!r} does not match {p!r}")
        value += prob * (-1 if key.count("1") % 2 else 1)
    return value


def expectation_from_counts(c: CountsMap, p: str) -> tuple[float, float]:
    """Parity-weighted average of the counts, with its binomial standard error."""
    if c.shots < 1:
        raise ValueError("no shots")
    check_pauli(p, c.n_qubits)
    value = expectation_from_distribution(c.probabilities(), p)
    return value, float(np.sqrt(max(0.0, 1.0 - value * value) / c.shots))


# ---------------------------------------------------------------- gate noise

PAULI_LABELS_2Q = tuple(a + b for a in "IXYZ" for b in "IXYZ")


def _pauli_gates(label: str, targets) -> list[Gate]:
    return [Gate(axis, (q,)) for axis, q in zip(label, targets) if axis != "I"]


def _label_matrix(label):
    return np.kron(PAULI_MATRICES[label[0]], PAULI_MATRICES[label[1]])


def conjugated_frame(unitary: np.ndarray, pre: str) -> str:
    """Pauli ``post`` with ``post = U pre U^dagger`` up to phase, for Clifford ``U``."""
    target = unitary @ _label_matrix(pre) @ unitary.conj().T
    for label in PAULI_LABELS_2Q:
        overlap = np.trace(_label_matrix(label).conj().T @ target) / 4
        if abs(abs(overlap) - 1) < 1e-12:
            return label
    raise ValueError("gate is not Clifford; Pauli frames do not map to Pauli frames")


_CNOT_FRAMES = tuple(conjugated_frame(Gate("CNOT", (0, 1)).matrix, pre) for pre in PAULI_LABELS_2Q)


def coherent_error_gates(pair, eps: float, axis: str = "ZZ") -> list[Gate]:
    if not eps:
        return []
    if axis == "ZZ":
        return [Gate("RZZ", pair, eps)]
    # (I x H) ZZ (I x H) = ZX
    return [Gate("H", (pair[1],)), Gate("RZZ", pair, eps), Gate("H", (pair[1],))]


def _noisy_cnot(gate, error_idx, frame_idx, noise):
    pair = gate.targets
    ops = []
    if frame_idx is not None:
        ops += _pauli_gates(PAULI_LABELS_2Q[frame_idx], pair)
    ops.append(gate)
    ops += coherent_error_gates(pair, noise.coherent_overrotation_rad, noise.coherent_axis)
    if frame_idx is not None:
        ops += _pauli_gates(_CNOT_FRAMES[frame_idx], pair)
    if error_idx:
        ops += _pauli_gates(PAULI_LABELS_2Q[error_idx], pair)
    return ops


def _instantiate(circuit, errors, frames, noise):
    out, j = [], 0
    for gate in circuit:
        if gate.kind == "CNOT":
            out += _noisy_cnot(gate, int(errors[j]), None if frames is None else int(frames[j]), noise)
            j += 1
        else:
            out.append(gate)
    return out


def sample_with_gate_noise(circuit: Sequence[Gate], shots: int, noise: NoiseSpec, basis: str,
                           seed: int | None = None, stream: Sequence[int] = ()) -> CountsMap:
    """Shot-by-shot Monte-Carlo of ``circuit`` (from ``|0...0>``) under ``noise``.

    Each shot draws its own Pauli errors (and twirl frames) per CNOT. Shots
    sharing a draw are simulated once and sampled together, which is
    equivalent to simulating every shot separately.
    """
    _check_shots(shots)
    basis = check_pauli(basis)
    n = len(basis)
    circuit = list(circuit)
    rng = derive_rng(noise.seed if seed is None else seed, *stream)
    m = sum(g.kind == "CNOT" for g in circuit)
    p = noise.two_qubit_pauli_error_prob

    if m == 0 or (p == 0 and not noise.twirl):
        state = run_circuit(_instantiate(circuit, [0] * m, None, noise), n)
        return _draw(rng, shots, _measured_probabilities(state, basis, noise.readout), n)

    hit = rng.random((shots, m)) < p
    errors = np.where(hit, rng.integers(1, 16, size=(shots, m)), 0)
    if noise.twirl:
        patterns = np.concatenate([errors, rng.integers(0, 16, size=(shots, m))], axis=1)
    else:
        patterns = errors
    unique, multiplicity = np.unique(patterns, axis=0, return_counts=True)
    propagate = _segmented(circuit, basis, noise) if n <= _DENSE_MAX_QUBITS else None
    total = np.zeros(2 ** n, dtype=np.int64)
    for row, count in zip(unique, multiplicity):
        frames = row[m:] if noise.twirl else None
        if propagate is None:
            state = run_circuit(_instantiate(circuit, row[:m], frames, noise), n)
            probs = _measured_probabilities(state, basis, noise.readout)
        else:
            probs = propagate(row[:m], frames)
        total += rng.multinomial(count, probs)
    return CountsMap.from_vector(total, n)


_DENSE_MAX_QUBITS = 8


def _segmented(circuit, basis, noise):
    """Dense propagator: fixed segments between CNOTs, noisy CNOT blocks cached
    per (position, error, frame)."""
    n = len(basis)
    segments, cnots, current = [], [], []
    for gate in circuit:
        if gate.kind == "CNOT":
            segments.append(circuit_unitary(current, n))
            cnots.append(gate)
            current = []
        else:
            current.append(gate)
    segments.append(circuit_unitary(current + measurement_circuit(basis), n))
    blocks = {}

    def block(j, err, frame):
        key = (j, err, frame)
        if key not in blocks:
            blocks[key] = circuit_unitary(_noisy_cnot(cnots[j], err, frame, noise), n)
        return blocks[key]

    start = segments[0][:, 0]

    def propagate(errors, frames):
        psi = start
        for j in range(len(cnots)):
            frame = None if frames is None else int(frames[j])
            psi = segments[j + 1] @ (block(j, int(errors[j]), frame) @ psi)
        probs = np.abs(psi) ** 2
        if noise.readout is not None:
            probs = noise.readout.apply(probs)
        probs = np.clip(probs, 0.0, None)
        return probs / probs.sum()

    return propagate


# ---------------------------------------------------------------- twirling

def _density(state) -> np.ndarray:
    if isinstance(state, StateVector):
        a = state.amplitudes
        return np.outer(a, a.conj())
    return np.asarray(state, dtype=complex)


def _embed(op4: np.ndarray, targets, n: int) -> np.ndarray:
    """Full-register matrix of a two-qubit operator."""
    dim = 2 ** n
    cols = np.eye(dim, dtype=complex)
    return np.stack([_apply_matrix(cols[:, j], n, op4, targets) for j in range(dim)], axis=1)


@dataclass
class TwirledGate:
    """Pauli-twirled version of a two-qubit Clifford gate with a coherent error.

    The noisy gate is ``error @ ideal``. Frame ``i`` applies
    ``post_i @ error @ ideal @ pre_i`` with ``post_i = ideal pre_i ideal^dagger``,
    which equals ``ideal`` when ``error`` is the identity.
    """

    ideal: Gate
    error: np.ndarray
    frames: np.ndarray = field(repr=False)

    @property
    def targets(self):
        return self.ideal.targets

    def frame_unitary(self, i: int) -> np.ndarray:
        pre = _label_matrix(PAULI_LABELS_2Q[i])
        post = _label_matrix(conjugated_frame(self.ideal.matrix, PAULI_LABELS_2Q[i]))
        return post @ self.error @ self.ideal.matrix @ pre

    def _average(self, rho, n, indices):
        out = np.zeros_like(rho)
        for i in indices:
            u = _embed(self.frame_unitary(i), self.targets, n)
            out += u @ rho @ u.conj().T
        return out / len(indices)

    def channel(self, state, n: int | None = None) -> np.ndarray:
        """Average over the sampled frames."""
        rho = _density(state)
        n = n or int(np.log2(rho.shape[0]))
        return self._average(rho, n, list(self.frames))

    def exact_channel(self, state, n: int | None = None) -> np.ndarray:
        """Average over all 16 frames."""
        rho = _density(state)
        n = n or int(np.log2(rho.shape[0]))
        return self._average(rho, n, list(range(16)))

    def pauli_error_rates(self) -> dict[str, float]:
        """Pauli-channel probabilities ``|tr(P E)/4|^2`` of the twirled error."""
        rates = {}
        for label in PAULI_LABELS_2Q:
            c = np.trace(_label_matrix(label).conj().T @ self.error) / 4
            rates[label] = float(abs(c) ** 2)
        return rates

    def pauli_channel(self, state, n: int | None = None) -> np.ndarray:
        """Analytic prediction: ideal gate followed by the stochastic Pauli channel."""
        rho = _density(state)
        n = n or int(np.log2(rho.shape[0]))
        u = _embed(self.ideal.matrix, self.targets, n)
        rho = u @ rho @ u.conj().T
        out = np.zeros_like(rho)
        for label, rate in self.pauli_error_rates().items():
            if rate:
                pm = _embed(_label_matrix(label), self.targets, n)
                out += rate * pm @ rho @ pm.conj().T
        return out

    def expectation(self, state, p: str, exact: bool = False) -> float:
        rho = self.exact_channel(state) if exact else self.channel(state)
        n = int(np.log2(rho.shape[0]))
        check_pauli(p, n)
        return float(np.trace(pauli_matrix(p) @ rho).real)


def pauli_twirl_gate(ideal: Gate, coherent_error: Gate | np.ndarray | None, samples: int,
                     seed: int = 0) -> TwirledGate:
    """Twirl ``ideal`` followed by ``coherent_error`` (on the same pair)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if len(ideal.targets) != 2:
        raise ValueError("twirling is defined here for two-qubit gates")
    if coherent_error is None:
        err = np.eye(4, dtype=complex)
    elif isinstance(coherent_error, Gate):
        if coherent_error.targets != ideal.targets:
            raise ValueError("coherent error must act on the gate's own qubits")
        err = coherent_error.matrix
    else:
        err = np.asarray(coherent_error, dtype=complex)
    # reject non-Clifford ideals early
    conjugated_frame(ideal.matrix, "XI")
    frames = derive_rng(seed).integers(0, 16, size=samples)
    return TwirledGate(ideal, err, frames)
