"""Experiment orchestration: configs, repeated runs, reports.

Config files are INI documents read with :mod:`configparser`::

    [experiment]
    name = bell_noisy
    state = BELL              ; BELL | DICKE_GATE | DICKE_DIRECT
    inequality = CHSH         ; CHSH | DICKE4
    mode = SAMPLED            ; EXACT | SAMPLED
    shots = 10000
    repetitions = 3
    term_set = FILTERED       ; FILTERED | FULL
    mitigation = M3           ; NONE | M3
    seed = 7
    calibration_shots = 10000 ; optional, defaults to shots

    [angles]                  ; optional; theta_deg, phi_deg per setting
    A = 45.03, 0.014
    A' = 44.98, 180

    [noise]                   ; optional
    readout_flip = 0.02       ; or readout_p01 / readout_p10
    two_qubit_pauli_error_prob = 0.01
    coherent_overrotation_rad = 0.0
    coherent_axis = ZZ
    twirl = false

Settings missing from ``[angles]`` take the built-in reference optimum angles.

Seeding: repetition ``r`` samples measurement basis ``b`` (index into the
sorted list of distinct Pauli strings) from stream ``(seed, r, b)`` and, with
M3, calibrates from ``(seed, r, CALIBRATION_KEY, ...)``.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy

from . import __version__
from ._backend import NAME as BACKEND_NAME
from .bellpoly import CHSH_ANGLES_DEG, CHSH_TERMS, DICKE_ANGLES_DEG, DICKE_TERMS
from .confusion import ConfusionModel
from .mitigate import calibrate_confusion, mitigated_expectation
from .observables import MeasurementSetting, expand_tensor, filter_nonzero
from .prep import prepare_bell, prepare_dicke_direct, prepare_dicke_gate
from .shots import (NOISELESS, NoiseSpec, expectation_from_counts, sample_counts,
                    sample_with_gate_noise)
from .simcore import expectation_pauli


class State(str, Enum):
    BELL = "BELL"
    DICKE_GATE = "DICKE_GATE"
    DICKE_DIRECT = "DICKE_DIRECT"


class Inequality(str, Enum):
    CHSH = "CHSH"
    DICKE4 = "DICKE4"


class Mode(str, Enum):
    EXACT = "EXACT"
    SAMPLED = "SAMPLED"


class TermSet(str, Enum):
    FILTERED = "FILTERED"
    FULL = "FULL"


class Mitigation(str, Enum):
    NONE = "NONE"
    M3 = "M3"


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


_TERMS = {Inequality.CHSH: CHSH_TERMS, Inequality.DICKE4: DICKE_TERMS}
_DEFAULT_ANGLES = {Inequality.CHSH: CHSH_ANGLES_DEG, Inequality.DICKE4: DICKE_ANGLES_DEG}
_QUBITS = {State.BELL: 2, State.DICKE_GATE: 4, State.DICKE_DIRECT: 4}


def _enum(cls, value, key, problems):
    try:
        return cls(value.upper() if isinstance(value, str) else value)
    except ValueError:
        problems.append(f"{key}: {value!r} is not one of {', '.join(m.value for m in cls)}")
        return None


@dataclass(frozen=True)
class ExperimentConfig:
    state: State = State.BELL
    inequality: Inequality = Inequality.CHSH
    angles: Mapping[str, tuple[float, float]] | None = None  # degrees; None -> reference optimum
    mode: Mode = Mode.EXACT
    shots: int = 10000
    repetitions: int = 3
    term_set: TermSet = TermSet.FILTERED
    noise: NoiseSpec = NOISELESS
    mitigation: Mitigation = Mitigation.NONE
    seed: int = 0
    name: str = "experiment"
    calibration_shots: int | None = None

    def __post_init__(self):
        problems: list[str] = []
        for key, cls in (("state", State), ("inequality", Inequality), ("mode", Mode),
                         ("term_set", TermSet), ("mitigation", Mitigation)):
            value = _enum(cls, getattr(self, key), key, problems)
            if value is not None:
                object.__setattr__(self, key, value)
        if not isinstance(self.shots, (int, np.integer)) or self.shots < 1:
            problems.append(f"shots: must be a positive integer, got {self.shots!r}")
        if not isinstance(self.repetitions, (int, np.integer)) or self.repetitions < 1:
            problems.append(f"repetitions: must be a positive integer, got {self.repetitions!r}")
        if self.calibration_shots is not None and self.calibration_shots < 1:
            problems.append("calibration_shots: must be positive")

        ineq = self.inequality if isinstance(self.inequality, Inequality) else None
        state = self.state if isinstance(self.state, State) else None
        if ineq is Inequality.DICKE4 and state is State.BELL:
            problems.append("state/inequality: DICKE4 needs a four-qubit Dicke state, not BELL")
        if ineq is Inequality.CHSH and state in (State.DICKE_GATE, State.DICKE_DIRECT):
            problems.append("state/inequality: CHSH runs on the two-qubit BELL state")
        if ineq is not None:
            merged = dict(_DEFAULT_ANGLES[ineq])
            if self.angles is not None:
                unknown = sorted(set(self.angles) - set(merged))
                if unknown:
                    problems.append(f"angles: unknown settings {unknown} for {ineq.value} "
                                    f"(expects {sorted(merged)})")
                merged.update({k: (float(v[0]), float(v[1])) for k, v in self.angles.items()})
            object.__setattr__(self, "angles", merged)
        if state is not None:
            n = _QUBITS[state]
            if self.noise.readout is not None and self.noise.readout.n_qubits != n:
                problems.append(f"noise.readout: model has {self.noise.readout.n_qubits} qubits, "
                                f"state has {n}")
            if state is State.DICKE_DIRECT and self.noise.has_gate_noise:
                problems.append("noise: gate noise needs a circuit; DICKE_DIRECT has none")
        if problems:
            raise ConfigError(problems)

    @property
    def n_qubits(self) -> int:
        return _QUBITS[self.state]

    def settings(self) -> dict[str, MeasurementSetting]:
        return {k: MeasurementSetting.from_degrees(*v) for k, v in self.angles.items()}

    def to_dict(self) -> dict:
        noise = self.noise
        return {
            "name": self.name, "state": self.state.value, "inequality": self.inequality.value,
            "angles": {k: list(v) for k, v in sorted(self.angles.items())},
            "mode": self.mode.value, "shots": int(self.shots), "repetitions": int(self.repetitions),
            "term_set": self.term_set.value, "mitigation": self.mitigation.value,
            "seed": int(self.seed), "calibration_shots": self.calibration_shots,
            "noise": {
                "readout": None if noise.readout is None else noise.readout.to_text(),
                "two_qubit_pauli_error_prob": noise.two_qubit_pauli_error_prob,
                "coherent_overrotation_rad": noise.coherent_overrotation_rad,
                "coherent_axis": noise.coherent_axis,
                "twirl": noise.twirl,
            },
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Build a config from INI text; every malformed field is reported at once."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    cp.read_string(text)
    problems = []
    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    kwargs: dict = {}
    for key in ("state", "inequality", "mode", "term_set", "mitigation", "name"):
        if key in exp:
            kwargs[key] = exp.pop(key)
    for key in ("shots", "repetitions", "seed", "calibration_shots"):
        if key in exp:
            try:
                kwargs[key] = int(exp.pop(key))
            except ValueError:
                problems.append(f"{key}: not an integer")
    problems += [f"experiment.{k}: unknown key" for k in exp]

    if cp.has_section("angles"):
        angles = {}
        for key, value in cp["angles"].items():
            try:
                theta, phi = (float(v) for v in value.replace(",", " ").split())
                angles[key] = (theta, phi)
            except ValueError:
                problems.append(f"angles.{key}: expected 'theta_deg, phi_deg'")
        kwargs["angles"] = angles

    if cp.has_section("noise"):
        sec = dict(cp["noise"])
        state = str(kwargs.get("state", "BELL")).upper()
        n = _QUBITS.get(state, 2)
        nk: dict = {}
        try:
            if "readout_flip" in sec:
                nk["readout"] = ConfusionModel.symmetric(n, float(sec.pop("readout_flip")))
            elif "readout_p01" in sec or "readout_p10" in sec:
                nk["readout"] = ConfusionModel.from_flips(
                    n, float(sec.pop("readout_p01", 0.0)), float(sec.pop("readout_p10", 0.0)))
            for key in ("two_qubit_pauli_error_prob", "coherent_overrotation_rad"):
                if key in sec:
                    nk[key] = float(sec.pop(key))
            if "coherent_axis" in sec:
                nk["coherent_axis"] = sec.pop("coherent_axis").strip().upper()
            if "twirl" in sec:
                nk["twirl"] = _parse_bool(sec.pop("twirl"))
            kwargs["noise"] = NoiseSpec(**nk)
        except ValueError as exc:
            problems.append(f"noise: {exc}")
        problems += [f"noise.{k}: unknown key" for k in sec]
    unknown_sections = set(cp.sections()) - {"experiment", "angles", "noise"}
    problems += [f"[{s}]: unknown section" for s in sorted(unknown_sections)]

    try:
        cfg = ExperimentConfig(**kwargs)
    except ConfigError as exc:
        problems += exc.problems
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@dataclass
class Report:
    """Per-correlator results of one experiment.

    ``runs`` and ``stderr`` have shape ``(repetitions, 4)``; ``bell_runs`` is
    the signed sum of each row, ``bell_stderr`` its propagated binomial error.
    """

    name: str
    inequality: Inequality
    labels: list[str]
    signs: list[int]
    ideal: np.ndarray
    runs: np.ndarray
    stderr: np.ndarray
    bell_runs: np.ndarray
    bell_stderr: np.ndarray
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def means(self) -> np.ndarray:
        return self.runs.mean(axis=0)

    @property
    def stddevs(self) -> np.ndarray:
        if len(self.runs) < 2:
            return np.zeros(self.runs.shape[1])
        return self.runs.std(axis=0, ddof=1)

    @property
    def bell_ideal(self) -> float:
        return signed_sum(self.ideal, self.signs)

    @property
    def bell_mean(self) -> float:
        return float(np.mean(self.bell_runs))

    @property
    def bell_stddev(self) -> float:
        return float(np.std(self.bell_runs, ddof=1)) if len(self.bell_runs) > 1 else 0.0

    @property
    def bell_stderr_of_mean(self) -> float:
        """Binomial error of ``bell_mean`` combining all runs."""
        return float(np.sqrt(np.sum(self.bell_stderr ** 2)) / len(self.bell_stderr))


def signed_sum(values, signs) -> float:
    total = 0.0
    for v, s in zip(values, signs):
        total += s * float(v)
    return total


def _prepare(state: State):
    if state is State.BELL:
        return prepare_bell()
    if state is State.DICKE_GATE:
        return prepare_dicke_gate(4, 2)
    return prepare_dicke_direct(4, 2)


def correlator_terms(cfg: ExperimentConfig, state=None) -> list[list[tuple[float, str]]]:
    """Pauli expansion of each correlator, filtered against the ideal state if asked."""
    settings = cfg.settings()
    out = []
    for _, names, _ in _TERMS[cfg.inequality]:
        exp = expand_tensor([settings[n] for n in names])
        if cfg.term_set is TermSet.FILTERED:
            exp = filter_nonzero(exp, state if state is not None else _prepare(cfg.state).state)
        out.append(exp)
    return out


def run_experiment(cfg: ExperimentConfig) -> Report:
    prepared = _prepare(cfg.state)
    terms = correlator_terms(cfg, prepared.state)
    labels = [t[0] for t in _TERMS[cfg.inequality]]
    signs = [t[2] for t in _TERMS[cfg.inequality]]
    n = cfg.n_qubits

    # the ideal column always uses every term
    full = [expand_tensor([cfg.settings()[x] for x in names])
            for _, names, _ in _TERMS[cfg.inequality]]
    ideal = np.array([sum(c * expectation_pauli(prepared.state, p) for c, p in exp)
                      for exp in full])

    reps = 1 if cfg.mode is Mode.EXACT else cfg.repetitions
    runs = np.empty((reps, len(labels)))
    errs = np.zeros((reps, len(labels)))
    bell = np.empty(reps)
    bell_err = np.zeros(reps)

    bases = sorted({p for exp in terms for _, p in exp})
    weights = {p: 0.0 for p in bases}
    for exp, sign in zip(terms, signs):
        for c, p in exp:
            weights[p] += sign * c

    for r in range(reps):
        values, sigma = _measure(cfg, prepared, bases, r, n)
        for j, exp in enumerate(terms):
            runs[r, j] = sum(c * values[p] for c, p in exp)
            errs[r, j] = math.sqrt(sum((c * sigma[p]) ** 2 for c, p in exp))
        bell[r] = signed_sum(runs[r], signs)
        bell_err[r] = math.sqrt(sum((weights[p] * sigma[p]) ** 2 for p in bases))

    provenance = {
        "name": cfg.name,
        "inequality": cfg.inequality.value,
        "state": cfg.state.value,
        "mode": cfg.mode.value,
        "term_set": cfg.term_set.value,
        "mitigation": cfg.mitigation.value,
        "shots": str(cfg.shots),
        "repetitions": str(reps),
        "seed": str(cfg.seed),
        "config_hash": cfg.digest(),
        "dickebell": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "backend": BACKEND_NAME,
    }
    return Report(cfg.name, cfg.inequality, labels, signs, ideal, runs, errs, bell, bell_err,
                  provenance)


def _measure(cfg, prepared, bases, rep, n):
    """Values and binomial stderrs of every basis for one repetition."""
    if cfg.mode is Mode.EXACT:
        return {p: expectation_pauli(prepared.state, p) for p in bases}, {p: 0.0 for p in bases}
    noise = cfg.noise
    model = None
    if cfg.mitigation is Mitigation.M3:
        model = calibrate_confusion(noise, n, cfg.calibration_shots or cfg.shots,
                                    seed=cfg.seed, stream=(rep,))
    values, sigma = {}, {}
    for b, p in enumerate(bases):
        if noise.has_gate_noise:
            counts = sample_with_gate_noise(prepared.circuit, cfg.shots, noise, p,
                                            seed=cfg.seed, stream=(rep, b))
        else:
            counts = sample_counts(prepared.state, p, cfg.shots, noise, seed=cfg.seed,
                                   stream=(rep, b))
        if model is None:
            values[p], sigma[p] = expectation_from_counts(counts, p)
        else:
            values[p], sigma[p] = mitigated_expectation(counts, model, p)
    return values, sigma


# ---------------------------------------------------------------- reports

def _columns(reps):
    return (["operator_label", "ideal", "mean", "stddev"]
            + [f"run_{i + 1}" for i in range(reps)]
            + [f"stderr_{i + 1}" for i in range(reps)])


def emit_report(r: Report, fmt: str = "CSV") -> str:
    fmt = fmt.upper()
    if fmt == "CSV":
        return _emit_csv(r)
    if fmt == "TEXT":
        return _emit_text(r)
    raise ValueError(f"unknown report format {fmt!r}")


def _emit_csv(r: Report) -> str:
    buf = io.StringIO()
    for key, value in r.provenance.items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    reps = len(r.runs)
    w.writerow(_columns(reps))
    for j, label in enumerate(r.labels):
        w.writerow([label] + [repr(float(v)) for v in
                              (r.ideal[j], r.means[j], r.stddevs[j], *r.runs[:, j], *r.stderr[:, j])])
    w.writerow([r.inequality.value] + [repr(float(v)) for v in
                                       (r.bell_ideal, r.bell_mean, r.bell_stddev,
                                        *r.bell_runs, *r.bell_stderr)])
    return buf.getvalue()


def _g4(v: float) -> str:
    return f"{v:.4g}"


def _emit_text(r: Report) -> str:
    reps = len(r.runs)
    head = ["operator", "ideal", "mean", "stddev"] + [f"run {i + 1}" for i in range(reps)] + ["stderr"]
    rows = []
    for j, label in enumerate(r.labels):
        stderr = float(np.sqrt(np.sum(r.stderr[:, j] ** 2)) / reps)
        rows.append([label, *map(_g4, (r.ideal[j], r.means[j], r.stddevs[j], *r.runs[:, j], stderr))])
    rows.append([r.inequality.value, *map(_g4, (r.bell_ideal, r.bell_mean, r.bell_stddev,
                                                  *r.bell_runs, r.bell_stderr_of_mean))])
    widths = [max(len(row[i]) for row in [head] + rows) for i in range(len(head))]
    fmt_row = lambda row: "  ".join(c.rjust(w) if i else c.ljust(w)
                                    for i, (c, w) in enumerate(zip(row, widths)))
    p = r.provenance
    title = (f"{r.name}: {p.get('state', '?')} / {r.inequality.value} / {p.get('mode', '?')}"
             f" / {p.get('term_set', '?')} / mitigation {p.get('mitigation', '?')}")
    lines = [title, fmt_row(head), "  ".join("-" * w for w in widths)]
    lines += [fmt_row(row) for row in rows]
    lines.append(f"config {p.get('config_hash', '?')}, seed {p.get('seed', '?')}, "
                 f"backend {p.get('backend', '?')}")
    return "\n".join(lines) + "\n"


def parse_report_csv(text: str) -> Report:
    provenance = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            provenance[key] = value
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    reps = sum(h.startswith("run_") for h in header)
    if header != _columns(reps):
        raise ValueError(f"unexpected CSV header {header}")
    inequality = Inequality(provenance.get("inequality", data[-1][0]))
    terms = _TERMS[inequality]
    labels = [row[0] for row in data[:-1]]
    if labels != [t[0] for t in terms]:
        raise ValueError(f"operator rows {labels} do not match {inequality.value}")
    nums = np.array([[float(v) for v in row[1:]] for row in data])
    runs = nums[:-1, 3:3 + reps].T.copy()
    stderr = nums[:-1, 3 + reps:].T.copy()
    return Report(provenance.get("name", ""), inequality, labels, [t[2] for t in terms],
                  nums[:-1, 0].copy(), runs, stderr, nums[-1, 3:3 + reps].copy(),
                  nums[-1, 3 + reps:].copy(), provenance)


# ---------------------------------------------------------------- suite

def suite_configs(shots: int = 10000, repetitions: int = 3, seed: int = 2025,
                  readout_flip: float = 0.02, pauli_prob: float = 0.01) -> list[ExperimentConfig]:
    bell_ro = NoiseSpec(readout=ConfusionModel.symmetric(2, readout_flip))
    dicke_ro = NoiseSpec(readout=ConfusionModel.symmetric(4, readout_flip))
    dicke_gate = NoiseSpec(readout=ConfusionModel.symmetric(4, readout_flip),
                           two_qubit_pauli_error_prob=pauli_prob)
    common = dict(shots=shots, repetitions=repetitions, seed=seed)
    bell = dict(state=State.BELL, inequality=Inequality.CHSH)
    dd = dict(state=State.DICKE_DIRECT, inequality=Inequality.DICKE4)
    dg = dict(state=State.DICKE_GATE, inequality=Inequality.DICKE4)
    C = ExperimentConfig
    return [
        C(name="bell_exact", **bell, **common),
        C(name="bell_exact_full", **bell, term_set=TermSet.FULL, **common),
        C(name="dicke_direct_exact", **dd, **common),
        C(name="dicke_gate_exact", **dg, **common),
        C(name="dicke_direct_exact_full", **dd, term_set=TermSet.FULL, **common),
        C(name="bell_sampled", **bell, mode=Mode.SAMPLED, **common),
        C(name="bell_sampled_full", **bell, mode=Mode.SAMPLED, term_set=TermSet.FULL, **common),
        C(name="dicke_direct_sampled", **dd, mode=Mode.SAMPLED, **common),
        C(name="dicke_gate_sampled", **dg, mode=Mode.SAMPLED, **common),
        C(name="bell_readout", **bell, mode=Mode.SAMPLED, noise=bell_ro, **common),
        C(name="bell_readout_m3", **bell, mode=Mode.SAMPLED, noise=bell_ro,
          mitigation=Mitigation.M3, **common),
        C(name="dicke_direct_readout", **dd, mode=Mode.SAMPLED, noise=dicke_ro, **common),
        C(name="dicke_direct_readout_m3", **dd, mode=Mode.SAMPLED, noise=dicke_ro,
          mitigation=Mitigation.M3, **common),
        C(name="dicke_gate_noisy", **dg, mode=Mode.SAMPLED, noise=dicke_gate, **common),
        C(name="dicke_gate_noisy_m3", **dg, mode=Mode.SAMPLED, noise=dicke_gate,
          mitigation=Mitigation.M3, **common),
    ]


def reproduce_reference_suite(out_dir=None, **kwargs) -> dict[str, Report]:
    """Run :func:`suite_configs` and, if ``out_dir`` is given, write ``<name>.csv``
    and ``<name>.txt`` per config plus a ``summary.txt``."""
    reports = {cfg.name: run_experiment(cfg) for cfg in suite_configs(**kwargs)}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, rep in reports.items():
            (out / f"{name}.csv").write_text(emit_report(rep, "CSV"))
            (out / f"{name}.txt").write_text(emit_report(rep, "TEXT"))
        (out / "summary.txt").write_text(summary(reports))
    return reports


def summary(reports: Mapping[str, Report]) -> str:
    width = max(len(n) for n in reports)
    lines = [f"{'config'.ljust(width)}  {'ideal':>8}  {'mean':>8}  {'stddev':>8}  {'stderr':>8}"]
    for name, r in reports.items():
        lines.append(f"{name.ljust(width)}  {_g4(r.bell_ideal):>8}  {_g4(r.bell_mean):>8}  "
                     f"{_g4(r.bell_stddev):>8}  {_g4(r.bell_stderr_of_mean):>8}")
    return "\n".join(lines) + "\n"
