"""Readout calibration and matrix-free measurement-error mitigation.

The observed distribution ``p`` is modelled as ``A x`` with ``A`` the
confusion matrix. Mitigation solves ``A_SS x = p_S`` on a subspace ``S`` of
bitstrings: the observed keys plus every bitstring within Hamming distance
``distance`` of one (``distance=None`` means the whole register). Entries of
``A_SS`` are rebuilt on demand from the per-qubit matrices, so the iterative
path never forms ``A``. The solution is a quasi-probability vector: it sums
to one but may have negative entries, which are kept.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse.linalg as spla

from ._backend import kernels
from .confusion import ConfusionMode, ConfusionModel
from .shots import (CALIBRATION_KEY, CountsMap, NoiseSpec, derive_rng, expectation_from_distribution)
from .simcore import MAX_QUBITS, ShapeError, SizeError, check_pauli

__all__ = ["ConfusionMode", "ConfusionModel", "QuasiDistribution", "MitigationError",
           "calibrate_confusion", "mitigate_counts", "mitigate_distribution", "mitigated_expectation"]


class MitigationError(RuntimeError):
    """The restricted confusion system could not be solved."""


@dataclass(frozen=True)
class QuasiDistribution:
    entries: dict[str, float]
    shots_basis: int

    def total(self) -> float:
        return float(sum(self.entries.values()))

    def expectation(self, p: str) -> float:
        return expectation_from_distribution(self.entries, p)

    def vector(self, n: int) -> np.ndarray:
        v = np.zeros(2 ** n)
        for key, q in self.entries.items():
            v[int(key, 2)] = q
        return v


def calibrate_confusion(noise: NoiseSpec | None, n: int, shots: int, seed: int = 0,
                        mode: ConfusionMode | str = ConfusionMode.PER_QUBIT,
                        stream: tuple[int, ...] = ()) -> ConfusionModel:
    """Estimate a confusion model by sampling basis-state preparations.

    PER_QUBIT prepares ``|0...0>`` and ``|1...1>`` and reads each qubit's
    marginal; FULL prepares all ``2^n`` basis states. Readout errors come
    from ``noise.readout``.
    """
    mode = ConfusionMode(mode)
    if shots < 1:
        raise ValueError("calibration needs at least one shot")
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"register size must be in 1..{MAX_QUBITS}")
    readout = noise.readout if noise is not None else None
    if readout is not None and readout.n_qubits != n:
        raise ShapeError("noise model and calibration sizes differ")

    def measure(index, circuit_index):
        ideal = np.zeros(2 ** n)
        ideal[index] = 1.0
        probs = ideal if readout is None else np.clip(readout.apply(ideal), 0, None)
        rng = derive_rng(seed, *stream, CALIBRATION_KEY, circuit_index)
        return rng.multinomial(shots, probs / probs.sum())

    if mode is ConfusionMode.FULL:
        full = np.stack([measure(j, j) / shots for j in range(2 ** n)], axis=1)
        return ConfusionModel(mode, n, full=full)

    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(bool)
    cals = np.empty((n, 2, 2))
    for true_bit, index in ((0, 0), (1, 2 ** n - 1)):
        counts = measure(index, true_bit)
        ones = counts @ bits / shots  # P(read 1) per qubit
        cals[:, 1, true_bit] = ones
        cals[:, 0, true_bit] = 1 - ones
    return ConfusionModel(mode, n, per_qubit=cals)


def _subspace(observed: list[str], n: int, distance: int | None) -> list[str]:
    if distance is None:
        return [format(i, f"0{n}b") for i in range(2 ** n)]
    keys = set(observed)
    for key in observed:
        for d in range(1, min(distance, n) + 1):
            for flip in combinations(range(n), d):
                chars = list(key)
                for q in flip:
                    chars[q] = "1" if chars[q] == "0" else "0"
                keys.add("".join(chars))
    return sorted(keys)


def _bits(keys: list[str]) -> np.ndarray:
    return np.ascontiguousarray(np.array([[c == "1" for c in k] for k in keys], dtype=np.uint8))


def _reduced_dense(m: ConfusionModel, keys: list[str]) -> np.ndarray:
    if m.mode is ConfusionMode.FULL:
        idx = [int(k, 2) for k in keys]
        return m.full[np.ix_(idx, idx)]
    b = _bits(keys)
    q = np.arange(m.n_qubits)
    return m.per_qubit[q[None, None, :], b[:, None, :], b[None, :, :]].prod(axis=2)


def _solve_direct(m, keys, rhs):
    a = _reduced_dense(m, keys)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise MitigationError(f"restricted confusion matrix on {len(keys)} bitstrings is singular "
                              f"(condition number {cond:.3g})")
    return np.linalg.solve(a, rhs)


def _solve_iterative(m, keys, rhs, rtol):
    k = len(keys)
    if m.mode is ConfusionMode.FULL:
        idx = np.array([int(key, 2) for key in keys])
        full = m.full

        def matvec(x):
            return full[idx][:, idx] @ x
        diag = full[idx, idx]
    else:
        bits = _bits(keys)
        cals = m.per_qubit

        def matvec(x):
            return kernels.m3_matvec(bits, cals, np.ravel(x))
        diag = cals[np.arange(m.n_qubits)[None, :], bits, bits].prod(axis=1)
    if np.any(diag <= 0):
        raise MitigationError("confusion matrix has a zero diagonal entry on the subspace")
    op = spla.LinearOperator((k, k), matvec=matvec, dtype=float)
    precond = spla.LinearOperator((k, k), matvec=lambda x: np.ravel(x) / diag, dtype=float)
    x, info = spla.gmres(op, rhs, M=precond, rtol=rtol, atol=0.0, restart=min(k, 100),
                         maxiter=max(10, 10 * k))
    if info != 0:
        raise MitigationError(f"GMRES did not converge on {k} bitstrings (info={info})")
    return x


def mitigate_distribution(dist, m: ConfusionModel, distance: int | None = None,
                          method: str = "iterative", rtol: float = 1e-13,
                          shots: int = 0) -> QuasiDistribution:
    """Correct an observed probability distribution (mapping or length-``2^n`` vector).

    ``method`` is ``"iterative"`` (preconditioned GMRES on the matrix-free
    product, the scalable path) or ``"direct"`` (dense solve on the reduced
    matrix, the reference path for small subspaces).
    """
    n = m.n_qubits
    if isinstance(dist, dict):
        probs = dict(dist)
        if any(len(k) != n for k in probs):
            raise ShapeError(f"bitstrings do not match a {n}-qubit confusion model")
    else:
        vec = np.asarray(dist, dtype=float)
        if vec.shape != (2 ** n,):
            raise ShapeError(f"distribution of length {vec.size} for a {n}-qubit model")
        probs = {format(i, f"0{n}b"): float(v) for i, v in enumerate(vec) if v != 0}
    keys = _subspace(list(probs), n, distance)
    rhs = np.array([probs.get(k, 0.0) for k in keys])
    if method == "direct":
        x = _solve_direct(m, keys, rhs)
    elif method == "iterative":
        x = _solve_iterative(m, keys, rhs, rtol)
    else:
        raise ValueError(f"unknown method {method!r}")
    total = x.sum()
    if abs(total) < 1e-12:
        raise MitigationError("mitigated distribution has zero total mass")
    x = x / total
    return QuasiDistribution(dict(zip(keys, map(float, x))), shots)


def mitigate_counts(c: CountsMap, m: ConfusionModel, distance: int | None = None,
                    method: str = "iterative", rtol: float = 1e-13) -> QuasiDistribution:
    """Correct ``c`` for readout errors described by ``m`` (see :func:`mitigate_distribution`)."""
    if m.n_qubits != c.n_qubits:
        raise ShapeError(f"{c.n_qubits}-qubit counts with a {m.n_qubits}-qubit confusion model")
    probs = {k: v / c.shots for k, v in c.counts.items()}
    return mitigate_distribution(probs, m, distance, method, rtol, shots=c.shots)


def mitigated_expectation(c: CountsMap, m: ConfusionModel, p: str, **kwargs) -> tuple[float, float]:
    """Expectation of ``p`` on the mitigated quasi-distribution.

    The standard error is the binomial plug-in with the total quasi mass
    ``sum |q|`` in place of one; an approximation that ignores calibration
    uncertainty.
    """
    check_pauli(p, c.n_qubits)
    quasi = mitigate_counts(c, m, **kwargs)
    value = quasi.expectation(p)
    mass = sum(abs(v) for v in quasi.entries.values())
    return value, float(np.sqrt(max(0.0, mass * mass - value * value) / c.shots))
