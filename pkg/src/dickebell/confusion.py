"""Readout confusion models.

Convention: ``A[observed, true]``, so every column (fixed true outcome) sums
to one. In per-qubit mode the full matrix is the Kronecker product of the
qubit matrices in qubit order (qubit 0 leftmost).

Text format::

    # confusion v1
    mode PER_QUBIT
    qubits 2
    qubit 0
    0.98 0.03
    0.02 0.97
    qubit 1
    ...

``mode FULL`` replaces the ``qubit`` blocks by a ``dim 2^n`` line followed
by ``2^n`` rows of ``2^n`` numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import reduce

import numpy as np

from .simcore import MAX_QUBITS, ShapeError, SizeError

STOCHASTIC_TOL = 1e-9


class ConfusionMode(str, Enum):
    PER_QUBIT = "PER_QUBIT"
    FULL = "FULL"


def _check_stochastic(m, what):
    if np.any(m < -STOCHASTIC_TOL) or np.any(m > 1 + STOCHASTIC_TOL):
        raise ValueError(f"{what}: entries must lie in [0, 1]")
    if not np.allclose(m.sum(axis=0), 1.0, atol=STOCHASTIC_TOL, rtol=0):
        raise ValueError(f"{what}: columns must sum to 1")


@dataclass(frozen=True, eq=False)
class ConfusionModel:
    mode: ConfusionMode
    n_qubits: int
    per_qubit: np.ndarray | None = None  # shape (n, 2, 2)
    full: np.ndarray | None = None       # shape (2^n, 2^n)

    def __post_init__(self):
        object.__setattr__(self, "mode", ConfusionMode(self.mode))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"confusion model size must be in 1..{MAX_QUBITS}")
        if self.mode is ConfusionMode.PER_QUBIT:
            cals = np.asarray(self.per_qubit, dtype=float)
            if cals.shape != (self.n_qubits, 2, 2):
                raise ShapeError(f"per-qubit matrices must have shape ({self.n_qubits}, 2, 2)")
            for q, m in enumerate(cals):
                _check_stochastic(m, f"qubit {q}")
            object.__setattr__(self, "per_qubit", np.ascontiguousarray(cals))
        else:
            dim = 2 ** self.n_qubits
            full = np.asarray(self.full, dtype=float)
            if full.shape != (dim, dim):
                raise ShapeError(f"full matrix must be {dim}x{dim}")
            _check_stochastic(full, "full matrix")
            object.__setattr__(self, "full", np.ascontiguousarray(full))

    @classmethod
    def identity(cls, n: int) -> "ConfusionModel":
        return cls(ConfusionMode.PER_QUBIT, n, per_qubit=np.tile(np.eye(2), (n, 1, 1)))

    @classmethod
    def symmetric(cls, n: int, flip: float) -> "ConfusionModel":
        """Every qubit flips 0->1 and 1->0 with probability ``flip``."""
        return cls.from_flips(n, flip, flip)

    @classmethod
    def from_flips(cls, n: int, p01, p10) -> "ConfusionModel":
        """``p01`` = P(read 1 | true 0), ``p10`` = P(read 0 | true 1); scalars or per-qubit lists."""
        p01 = np.broadcast_to(np.asarray(p01, dtype=float), (n,))
        p10 = np.broadcast_to(np.asarray(p10, dtype=float), (n,))
        cals = np.empty((n, 2, 2))
        cals[:, 0, 0] = 1 - p01
        cals[:, 1, 0] = p01
        cals[:, 0, 1] = p10
        cals[:, 1, 1] = 1 - p10
        return cls(ConfusionMode.PER_QUBIT, n, per_qubit=cals)

    def matrix(self) -> np.ndarray:
        if self.mode is ConfusionMode.FULL:
            return self.full
        return reduce(np.kron, self.per_qubit)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix(), np.eye(2 ** self.n_qubits)))

    def apply(self, distribution: np.ndarray) -> np.ndarray:
        p = np.asarray(distribution, dtype=float)
        if p.shape != (2 ** self.n_qubits,):
            raise ShapeError(f"distribution of length {p.size} for a {self.n_qubits}-qubit model")
        if self.mode is ConfusionMode.FULL:
            return self.full @ p
        # apply each 2x2 factor along its own axis instead of forming the kron
        t = p.reshape((2,) * self.n_qubits)
        for q, m in enumerate(self.per_qubit):
            t = np.moveaxis(np.tensordot(m, t, axes=(1, q)), 0, q)
        return t.reshape(-1)

    def to_text(self) -> str:
        lines = ["# confusion v1", f"mode {self.mode.value}", f"qubits {self.n_qubits}"]
        if self.mode is ConfusionMode.PER_QUBIT:
            for q, m in enumerate(self.per_qubit):
                lines.append(f"qubit {q}")
                lines += [" ".join(repr(float(v)) for v in row) for row in m]
        else:
            lines.append(f"dim {2 ** self.n_qubits}")
            lines += [" ".join(repr(float(v)) for v in row) for row in self.full]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ConfusionModel":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        header = {}
        while rows and rows[0][0] in ("mode", "qubits"):
            key, value = rows.pop(0)[:2]
            header[key] = value
        try:
            mode = ConfusionMode(header["mode"])
            n = int(header["qubits"])
        except KeyError as exc:
            raise ValueError(f"confusion file is missing the {exc.args[0]!r} header") from None
        if mode is ConfusionMode.PER_QUBIT:
            cals = np.empty((n, 2, 2))
            for q in range(n):
                tag = rows.pop(0)
                if tag != ["qubit", str(q)]:
                    raise ValueError(f"expected 'qubit {q}', got {' '.join(tag)!r}")
                cals[q] = [[float(v) for v in rows.pop(0)] for _ in range(2)]
            return cls(mode, n, per_qubit=cals)
        tag = rows.pop(0)
        if tag[0] != "dim" or int(tag[1]) != 2 ** n:
            raise ValueError(f"expected 'dim {2 ** n}'")
        full = np.array([[float(v) for v in r] for r in rows])
        return cls(mode, n, full=full)
