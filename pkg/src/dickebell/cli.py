"""Command-line entry point (``dickebell`` or ``python -m dickebell``)."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .bellpoly import optimize_chsh, optimize_dicke
from .confusion import ConfusionModel
from .mitigate import mitigate_counts
from .observables import MeasurementSetting, expand_tensor, expectation_setting, filter_nonzero
from .prep import format_circuit, prepare_bell, prepare_dicke_direct, prepare_dicke_gate
from .shots import CountsMap, expectation_from_counts, sample_counts

STATES = ("bell", "dicke-gate", "dicke-direct")


def _state(name: str, n: int, k: int):
    if name == "bell":
        return prepare_bell()
    if name == "dicke-gate":
        return prepare_dicke_gate(n, k)
    return prepare_dicke_direct(n, k)


def read_settings(path) -> list[MeasurementSetting]:
    """One ``theta_deg phi_deg`` pair per line, qubit 0 first; ``#`` comments."""
    out = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if line:
            theta, phi = (float(v) for v in line.split())
            out.append(MeasurementSetting.from_degrees(theta, phi))
    return out


def cmd_prepare(args) -> int:
    prep = _state(args.state, args.n, args.k)
    if prep.circuit is not None:
        print(f"# circuit {prep.label}: {len(prep.circuit)} gates, depth {prep.depth}")
        sys.stdout.write(format_circuit(prep.circuit))
    print(f"# amplitudes {prep.label} (bitstring re im, |a| > 1e-12)")
    n = prep.state.n_qubits
    for i, a in enumerate(prep.state.amplitudes):
        if abs(a) > 1e-12:
            print(f"{i:0{n}b} {float(a.real)!r} {float(a.imag)!r}")
    return 0


def cmd_optimize(args) -> int:
    run = optimize_chsh if args.kind == "chsh" else optimize_dicke
    kw = {"seed": args.seed, "workers": args.workers}
    if args.restarts is not None:
        kw["restarts"] = args.restarts
    res = run(**kw)
    print(f"# {args.kind} optimum {res.value!r} ({res.restarts_used} restarts, seed {res.seed}, "
          f"converged {res.converged})")
    print("[angles]")
    for label, s in res.angles.settings().items():
        theta, phi = s.degrees
        print(f"{label} = {theta:.6f}, {phi:.6f}")
    return 0


def cmd_expect(args) -> int:
    prep = _state(args.state, args.n, args.k)
    settings = read_settings(args.settings)
    if len(settings) != prep.state.n_qubits:
        print(f"error: {len(settings)} settings for a {prep.state.n_qubits}-qubit state",
              file=sys.stderr)
        return 2
    if args.exact:
        print(repr(expectation_setting(prep.state, settings)))
        return 0
    terms = filter_nonzero(expand_tensor(settings), prep.state)
    value, var = 0.0, 0.0
    for b, (c, p) in enumerate(terms):
        counts = sample_counts(prep.state, p, args.shots, seed=args.seed, stream=(0, b))
        v, s = expectation_from_counts(counts, p)
        value += c * v
        var += (c * s) ** 2
    print(f"{value!r} {var ** 0.5!r}")
    return 0


def cmd_mitigate(args) -> int:
    counts = CountsMap.from_json(Path(args.counts).read_text())
    model = ConfusionModel.from_text(Path(args.confusion).read_text())
    quasi = mitigate_counts(counts, model, distance=args.distance, method=args.method)
    out = {"format": "quasi-v1", "n_qubits": counts.n_qubits, "shots": counts.shots,
           "quasi": quasi.entries}
    if args.pauli:
        out["expectation"] = {p: quasi.expectation(p) for p in args.pauli}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    try:
        cfg = harness.load_config(args.config)
    except harness.ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    text = harness.emit_report(harness.run_experiment(cfg), args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_suite(args) -> int:
    reports = harness.reproduce_reference_suite(args.out, shots=args.shots,
                                            repetitions=args.repetitions, seed=args.seed)
    sys.stdout.write(harness.summary(reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dickebell", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_state(p):
        p.add_argument("state", choices=STATES)
        p.add_argument("--n", type=int, default=4, help="Dicke qubits (default 4)")
        p.add_argument("--k", type=int, default=2, help="Dicke excitations (default 2)")

    p = sub.add_parser("prepare", help="print a preparation circuit and its amplitudes")
    add_state(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("optimize", help="maximise a Bell polynomial")
    p.add_argument("kind", choices=("chsh", "dicke"))
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("expect", help="expectation of a product of measurement settings")
    add_state(p)
    p.add_argument("settings", help="file with one 'theta_deg phi_deg' line per qubit")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--exact", action="store_true")
    g.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("mitigate", help="readout-mitigate a counts file")
    p.add_argument("counts")
    p.add_argument("confusion")
    p.add_argument("--pauli", nargs="*", default=[])
    p.add_argument("--distance", type=int)
    p.add_argument("--method", choices=("iterative", "direct"), default="iterative")
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--format", choices=("CSV", "TEXT", "csv", "text"), default="TEXT")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suite", help="run the fixed reproduction suite")
    p.add_argument("--out", default="suite_reports")
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--seed", type=int, default=2025)
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
