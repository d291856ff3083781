"""Customized measurement operators from polar angles and their Pauli expansion.

A setting ``(theta, phi)`` defines the observable
``sin(theta)cos(phi) X + sin(theta)sin(phi) Y + cos(theta) Z``. A product of
``m`` such observables expands into ``3**m`` weighted Pauli strings; only the
ones with non-zero expectation on the target state need to be measured.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np

from .simcore import ShapeError, StateVector, expectation_pauli

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class MeasurementSetting:
    """Polar angles in radians, normalised to ``theta in [0, pi]``, ``phi in [0, 2pi)``.

    Out-of-range input is mapped to the same observable: ``theta`` is taken
    mod 2pi and, if it lands above pi, reflected to ``2pi - theta`` with
    ``phi`` shifted by pi; ``phi`` is then taken mod 2pi.
    """

    theta: float
    phi: float

    def __post_init__(self):
        theta = math.fmod(float(self.theta), TWO_PI)
        phi = float(self.phi)
        if theta < 0:
            theta += TWO_PI
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
        phi = math.fmod(phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "MeasurementSetting":
        return cls(math.radians(theta_deg), math.radians(phi_deg))

    @property
    def degrees(self) -> tuple[float, float]:
        return math.degrees(self.theta), math.degrees(self.phi)


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.z, self.x - 1j * self.y],
                         [self.x + 1j * self.y, -self.z]], dtype=complex)


def bloch_from_angles(s: MeasurementSetting) -> BlochVector:
    st = math.sin(s.theta)
    return BlochVector(st * math.cos(s.phi), st * math.sin(s.phi), math.cos(s.theta))


def _as_bloch(v) -> BlochVector:
    if isinstance(v, MeasurementSetting):
        return bloch_from_angles(v)
    return BlochVector(*v)


# (coefficient, Pauli string) pairs, in lexicographic X < Y < Z order
PauliTermExpansion = list[tuple[float, str]]


def expand_tensor(settings: Sequence[BlochVector | MeasurementSetting]) -> PauliTermExpansion:
    """Expand ``(a1 . sigma) x (a2 . sigma) x ...`` into all ``3**m`` Pauli strings.

    Coefficients are exact products of Bloch components; tiny ones are kept.
    """
    if not settings:
        raise ValueError("need at least one setting")
    if len(settings) > 12:
        raise ValueError("at most 12 settings are supported")
    vectors = [_as_bloch(s) for s in settings]
    terms = []
    for idx in product(range(3), repeat=len(vectors)):
        coeff = 1.0
        for v, i in zip(vectors, idx):
            coeff *= v[i]
        terms.append((coeff, "".join("XYZ"[i] for i in idx)))
    return terms


def filter_nonzero(exp: PauliTermExpansion, state: StateVector, tol: float = 1e-10) -> PauliTermExpansion:
    """Keep the terms whose Pauli string has ``|<P>| > tol`` on ``state``."""
    kept = []
    for coeff, p in exp:
        if len(p) != state.n_qubits:
            raise ShapeError(f"term {p!r} does not fit a {state.n_qubits}-qubit state")
        if abs(expectation_pauli(state, p)) > tol:
            kept.append((coeff, p))
    return kept


def expansion_matrix(exp: PauliTermExpansion) -> np.ndarray:
    """Dense operator reconstructed from an expansion (oracle use, small m)."""
    from .simcore import pauli_matrix

    return sum(c * pauli_matrix(p) for c, p in exp)


def combine(exp: PauliTermExpansion, values: dict[str, float]) -> float:
    """Weighted sum of per-string expectation values."""
    return float(sum(c * values[p] for c, p in exp))


def expectation_setting(state: StateVector, settings: Sequence[MeasurementSetting],
                        filtered: bool = False, tol: float = 1e-10) -> float:
    if len(settings) != state.n_qubits:
        raise ShapeError(f"{len(settings)} settings for a {state.n_qubits}-qubit state")
    exp = expand_tensor(settings)
    if filtered:
        exp = filter_nonzero(exp, state, tol)
    return float(sum(c * expectation_pauli(state, p) for c, p in exp))
