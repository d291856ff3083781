"""Bell and Dicke state preparation, by gate circuit and by direct amplitudes.

Circuit text format (one gate per line)::

    KIND q0 [q1] [angle_rad]

``KIND`` is one of the :data:`~dickebell.simcore.GATE_KINDS` names; targets
are integer qubit indices (control first for ``CNOT``/``CRY``); the angle is
present only for ``RY``, ``RZ``, ``CRY`` and ``RZZ``. ``U`` lines carry the
eight floats ``re00 im00 re01 im01 re10 im10 re11 im11`` instead of an angle.
Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb

import numpy as np

from .simcore import MAX_QUBITS, Gate, StateVector, fidelity, run_circuit


class Method(str, Enum):
    GATE_BASED = "GATE_BASED"
    DIRECT = "DIRECT"


@dataclass(frozen=True, eq=False)
class PreparedState:
    label: str
    method: Method
    state: StateVector
    circuit: tuple[Gate, ...] | None = None
    gate_counts: dict[str, int] = field(default_factory=dict)
    depth: int = 0


def circuit_depth(circuit) -> int:
    """Logical depth: greedy layering of gates on disjoint qubits."""
    frontier: dict[int, int] = {}
    depth = 0
    for gate in circuit:
        layer = 1 + max((frontier.get(q, 0) for q in gate.targets), default=0)
        for q in gate.targets:
            frontier[q] = layer
        depth = max(depth, layer)
    return depth


def _prepared(label, circuit, n):
    circuit = tuple(circuit)
    return PreparedState(
        label=label,
        method=Method.GATE_BASED,
        state=run_circuit(circuit, n),
        circuit=circuit,
        gate_counts=dict(Counter(g.kind for g in circuit)),
        depth=circuit_depth(circuit),
    )


def prepare_bell() -> PreparedState:
    return _prepared("BELL_PHI_PLUS", [Gate("H", (0,)), Gate("CNOT", (0, 1))], 2)


def _check_nk(n, k):
    if not (isinstance(n, (int, np.integer)) and isinstance(k, (int, np.integer))):
        raise TypeError("n and k must be integers")
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in 1..{MAX_QUBITS}, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"Dicke weight k must satisfy 1 <= k <= n, got k={k}, n={n}")


def _ccry(theta, c1, c2, t):
    # doubly-controlled RY from CRY(theta/2) halves; exact
    return [
        Gate("CRY", (c2, t), theta / 2),
        Gate("CNOT", (c1, c2)),
        Gate("CRY", (c2, t), -theta / 2),
        Gate("CNOT", (c1, c2)),
        Gate("CRY", (c1, t), theta / 2),
    ]


def _scs(m, k, qubits):
    """Split-and-cyclic-shift block on ``k + 1`` consecutive qubits."""
    gates = []
    a, b = qubits[k - 1], qubits[k]
    theta = 2 * np.arccos(np.sqrt(1 / m))
    gates += [Gate("CNOT", (a, b)), Gate("CRY", (b, a), theta), Gate("CNOT", (a, b))]
    for l in range(2, k + 1):
        a, b, c = qubits[k - l], qubits[k - l + 1], qubits[k]
        theta = 2 * np.arccos(np.sqrt(l / m))
        gates.append(Gate("CNOT", (a, c)))
        gates += _ccry(theta, c, b, a)
        gates.append(Gate("CNOT", (a, c)))
    return gates


def dicke_circuit(n: int, k: int) -> list[Gate]:
    """Deterministic circuit for D(n, k): X on the last ``k`` qubits, then a
    cascade of split-and-cyclic-shift blocks with CRY angles 2 arccos(sqrt(l/m))."""
    _check_nk(n, k)
    gates = [Gate("X", (q,)) for q in range(n - k, n)]
    for m in range(n, k, -1):
        gates += _scs(m, k, list(range(m - k - 1, m)))
    for m in range(k, 1, -1):
        gates += _scs(m, m - 1, list(range(m)))
    return gates


def dicke_amplitudes(n: int, k: int) -> np.ndarray:
    _check_nk(n, k)
    amps = np.zeros(2 ** n, dtype=complex)
    value = 1 / np.sqrt(comb(n, k))
    for ones in combinations(range(n), k):
        amps[sum(1 << (n - 1 - q) for q in ones)] = value
    return amps


def prepare_dicke_gate(n: int, k: int) -> PreparedState:
    prepared = _prepared(f"DICKE({n},{k})", dicke_circuit(n, k), n)
    # guard the construction itself; the tolerance is far looser than round-off
    target = StateVector(n, dicke_amplitudes(n, k))
    if fidelity(prepared.state, target) < 1 - 1e-9:
        raise RuntimeError(f"Dicke circuit for ({n},{k}) lost fidelity")
    return prepared


def prepare_dicke_direct(n: int, k: int) -> PreparedState:
    return PreparedState(label=f"DICKE({n},{k})", method=Method.DIRECT,
                         state=StateVector(n, dicke_amplitudes(n, k)))


def format_circuit(circuit) -> str:
    lines = []
    for g in circuit:
        parts = [g.kind, *map(str, g.targets)]
        if g.kind == "U":
            parts += [repr(float(v)) for z in g.unitary.ravel() for v in (z.real, z.imag)]
        elif g.angle is not None:
            parts.append(repr(float(g.angle)))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> list[Gate]:
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, *rest = line.split()
        try:
            arity = 1 if kind in ("H", "X", "Y", "Z", "S", "Sdg", "RY", "RZ", "U") else 2
            targets = tuple(int(v) for v in rest[:arity])
            tail = [float(v) for v in rest[arity:]]
            if kind == "U":
                u = np.array(tail[0::2]) + 1j * np.array(tail[1::2])
                gates.append(Gate(kind, targets, unitary=u.reshape(2, 2)))
            else:
                gates.append(Gate(kind, targets, tail[0] if tail else None))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}: {exc}") from exc
    return gates
