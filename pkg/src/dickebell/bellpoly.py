"""Closed-form Bell polynomials and their numerical maximisation.

CHSH on ``|Phi+>``::

    S = <AB> + <AB'> - <A'B> + <A'B'>,
    <AB> = cos(tA)cos(tB) + cos(pA + pB) sin(tA) sin(tB)

Four-party inequality on ``D(4,2)``::

    S = <ABCD> + <AB'C'D'> + <A'BC'D> - <A'B'CD'>

with each four-body correlator given by a closed trigonometric form (see
``_pykernels.dicke_term``). The classical bound is 2 for both.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

from ._backend import kernels
from .observables import MeasurementSetting

TSIRELSON = 2 * math.sqrt(2)

# reference optimum angles in degrees, (theta, phi), at their published precision
CHSH_ANGLES_DEG = {
    "A": (45.03, 0.014), "A'": (44.98, 180.0),
    "B": (90.03, 0.036), "B'": (0.027, 33.88),
}
DICKE_ANGLES_DEG = {
    "A": (107.792, 57.2234), "A'": (30.3962, 57.2234),
    "B": (107.793, 57.2234), "B'": (69.0948, 57.2234),
    "C": (30.3962, 57.2234), "C'": (107.792, 57.2234),
    "D": (107.793, 57.2234), "D'": (69.0964, 57.2234),
}

CHSH_TERMS = (("AB", ("A", "B"), +1), ("AB'", ("A", "B'"), +1),
              ("A'B", ("A'", "B"), -1), ("A'B'", ("A'", "B'"), +1))
DICKE_TERMS = (("ABCD", ("A", "B", "C", "D"), +1),
               ("AB'C'D'", ("A", "B'", "C'", "D'"), +1),
               ("A'BC'D", ("A'", "B", "C'", "D"), +1),
               ("A'B'CD'", ("A'", "B'", "C", "D'"), -1))


class _AngleSet:
    """Shared packing between named settings and the flat kernel vector."""

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.metadata["label"] for f in fields(cls))

    def settings(self) -> dict[str, MeasurementSetting]:
        return {f.metadata["label"]: getattr(self, f.name) for f in fields(self)}

    def to_vector(self) -> np.ndarray:
        return np.array([v for s in self.settings().values() for v in (s.theta, s.phi)])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(*(MeasurementSetting(x[2 * i], x[2 * i + 1]) for i in range(len(fields(cls)))))

    @classmethod
    def from_mapping(cls, settings: Mapping[str, MeasurementSetting]):
        missing = [n for n in cls.names() if n not in settings]
        if missing:
            raise ValueError(f"missing settings: {', '.join(missing)}")
        return cls(*(settings[n] for n in cls.names()))

    @classmethod
    def from_degrees(cls, table: Mapping[str, tuple[float, float]]):
        return cls.from_mapping({k: MeasurementSetting.from_degrees(*v) for k, v in table.items()})


def _slot(label):
    return field(metadata={"label": label})


@dataclass(frozen=True)
class ChshAngles(_AngleSet):
    a: MeasurementSetting = _slot("A")
    a_p: MeasurementSetting = _slot("A'")
    b: MeasurementSetting = _slot("B")
    b_p: MeasurementSetting = _slot("B'")


@dataclass(frozen=True)
class DickeAngles(_AngleSet):
    a: MeasurementSetting = _slot("A")
    a_p: MeasurementSetting = _slot("A'")
    b: MeasurementSetting = _slot("B")
    b_p: MeasurementSetting = _slot("B'")
    c: MeasurementSetting = _slot("C")
    c_p: MeasurementSetting = _slot("C'")
    d: MeasurementSetting = _slot("D")
    d_p: MeasurementSetting = _slot("D'")


def chsh_reference_angles() -> ChshAngles:
    return ChshAngles.from_degrees(CHSH_ANGLES_DEG)


def dicke_reference_angles() -> DickeAngles:
    return DickeAngles.from_degrees(DICKE_ANGLES_DEG)


def chsh_pair(a: MeasurementSetting, b: MeasurementSetting) -> float:
    """Two-party correlator ``<AB>`` on ``|Phi+>``."""
    return (math.cos(a.theta) * math.cos(b.theta)
            + math.cos(a.phi + b.phi) * math.sin(a.theta) * math.sin(b.theta))


def chsh_closed_form(a: ChshAngles) -> float:
    return float(kernels.chsh_value(a.to_vector()))


def dicke_term_closed_form(a: MeasurementSetting, b: MeasurementSetting,
                           c: MeasurementSetting, d: MeasurementSetting) -> float:
    """Four-body correlator ``<ABCD>`` on ``D(4,2)``."""
    return float(kernels.dicke_term(a.theta, a.phi, b.theta, b.phi,
                                    c.theta, c.phi, d.theta, d.phi))


def chsh_correlators(a: ChshAngles) -> dict[str, float]:
    s = a.settings()
    return {label: chsh_pair(*(s[n] for n in names)) for label, names, _ in CHSH_TERMS}


def dicke_correlators(a: DickeAngles) -> dict[str, float]:
    s = a.settings()
    return {label: dicke_term_closed_form(*(s[n] for n in names))
            for label, names, _ in DICKE_TERMS}


def dicke_bell_value(a: DickeAngles) -> float:
    return float(kernels.dicke_value(a.to_vector()))


@dataclass
class OptimizationResult:
    angles: ChshAngles | DickeAngles
    value: float
    restarts_used: int
    seed: int
    converged: bool
    # every distinct optimum whose value ties the best within 1e-6
    optima: list = field(default_factory=list, repr=False)
    start_values: np.ndarray | None = field(default=None, repr=False)


# per simplex run; each start runs one simplex, then re-seeds it once at its best point
MAX_ITER = 5000
XATOL = 1e-7
FATOL = 1e-9
TIE_TOL = 1e-6


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for restart ``index``, derived from ``SeedSequence([seed, index])``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def _random_start(rng, n_settings):
    x = np.empty(2 * n_settings)
    x[0::2] = rng.uniform(0.0, math.pi, n_settings)
    x[1::2] = rng.uniform(0.0, 2 * math.pi, n_settings)
    return x


def _local_search(objective, x0):
    x, value, _, _, converged = kernels.nelder_mead(objective, x0, XATOL, FATOL, MAX_ITER, 10 ** 8)
    x2, value2, _, _, converged2 = kernels.nelder_mead(objective, x, XATOL, FATOL, MAX_ITER, 10 ** 8)
    if value2 >= value:
        return x2, value2, converged2
    return x, value, converged


def _same_point(u: np.ndarray, v: np.ndarray, tol=1e-4) -> bool:
    d = np.abs(u - v) % (2 * math.pi)
    return bool(np.all(np.minimum(d, 2 * math.pi - d) < tol))


def _optimize(objective, cls, evaluate, restarts, seed, start, workers):
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n_settings = len(fields(cls))

    def one(i):
        if i == 0 and start is not None:
            x0 = start.to_vector()
        else:
            x0 = _random_start(restart_rng(seed, i), n_settings)
        return _local_search(objective, x0)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, range(restarts)))
    else:
        results = [one(i) for i in range(restarts)]

    values = np.array([r[1] for r in results])
    best = int(np.argmax(values))
    best_value = values[best]
    optima = []
    for x, v, _ in sorted(results, key=lambda r: -r[1]):
        if best_value - v > TIE_TOL:
            break
        ang = cls.from_vector(x)
        vec = ang.to_vector()
        if not any(_same_point(vec, o.to_vector()) for o in optima):
            optima.append(ang)
    angles = cls.from_vector(results[best][0])
    return OptimizationResult(
        angles=angles,
        value=float(evaluate(angles)),
        restarts_used=restarts,
        seed=seed,
        converged=bool(results[best][2]),
        optima=optima,
        start_values=values,
    )


def optimize_chsh(restarts: int = 100, seed: int = 0, start: ChshAngles | None = None,
                  workers: int | None = None) -> OptimizationResult:
    """Multi-start simplex maximisation of the CHSH polynomial over 8 angles.

    Restart ``i`` draws its start from :func:`restart_rng` ``(seed, i)``; when
    ``start`` is given it replaces the first random start. The merged result
    is the best restart, so it does not depend on ``workers``.
    """
    return _optimize("chsh", ChshAngles, chsh_closed_form, restarts, seed, start, workers)


def optimize_dicke(restarts: int = 200, seed: int = 0, start: DickeAngles | None = None,
                   workers: int | None = None) -> OptimizationResult:
    return _optimize("dicke", DickeAngles, dicke_bell_value, restarts, seed, start, workers)
