"""Command-line entry point.

Exit codes: 0 success, 1 a checked property failed, 2 bad input.
Every random stream derives from ``--seed``: trial ``t`` uses ``[seed, t]``.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from math import sqrt
from pathlib import Path

import numpy as np

from . import acceptance
from .builder import DomainError, build_coloring, build_gnd
from .compiler import CompileError, parse_circuit
from .engine import check_against_oracle, format_report, trial_rng
from .hypergraph import HypergraphError, ParseError, decode, encode
from .statevec import DEFAULT_WIDTH_CAP, SimulatorError, fidelity, oracle_run, product_state
from .vbqc import ProtocolViolation, run_vbqc
from .verifier import (
    FlipNoiseSource,
    ProtocolDomainError,
    cover_protocol,
    dense_source,
    exact_pass_probability,
    flip_all_pass_probability,
    honest_source,
    hypergraph_amplitudes,
    required_registers,
    tested_registers,
)

OK, BREACH, USAGE = 0, 1, 2
DENSE_LIMIT = 12


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_circuit(args):
    if args.circuit is None:
        raise UsageError("--circuit is required")
    return parse_circuit(_read(args.circuit), args.n)


def cmd_build(args) -> int:
    b = build_gnd(args.n, args.d)
    c = build_coloring(b)
    if args.out:
        Path(args.out).write_text(encode(b.h, c))
    print(f"vertices={b.n_vertices} chi={c.k} n={args.n} d={args.d}")
    return OK


def cmd_simulate(args) -> int:
    if args.suite:
        if (args.n, args.d) != (3, 1):
            raise UsageError("--suite runs on n=3, d=1")
        circuits = acceptance.one_depth_selections()
    else:
        circuits = [_load_circuit(args)]
    text = []
    worst = 0.0
    for k, c in enumerate(circuits):
        rep = check_against_oracle(c, args.n, args.d, args.trials, args.seed + k, args.width_cap, args.jobs, args.corrupt)
        if len(circuits) > 1:
            text.append(f"# circuit {k}: {c.to_text().strip().replace(chr(10), ' | ')}\n")
        text.append(format_report(rep))
        worst = max(worst, rep["max_infidelity"])
    _emit("".join(text), args.out)
    return OK if worst <= acceptance.FIDELITY_TOL else BREACH


def _parse_source(text: str):
    if text in ("honest", "zero"):
        return text, 0.0
    if text.startswith("flip:"):
        try:
            p = float(text[5:])
        except ValueError:
            raise UsageError(f"bad flip probability in {text!r}") from None
        if not 0 <= p <= 1:
            raise UsageError("flip probability must lie in [0, 1]")
        return "flip", p
    raise UsageError(f"unknown source {text!r}; use honest, zero or flip:<p>")


def _verify_graph(args):
    if args.graph:
        h, c = decode(_read(args.graph))
        if c is None:
            raise UsageError("graph file carries no coloring")
        return h, c
    b = build_gnd(args.n, args.d)
    return b.h, build_coloring(b)


def _verify_trial(job):
    h, c, kind, p, delta, eps, seed, t = job
    rng = trial_rng(seed, t)
    if kind == "zero":
        zero = np.zeros(2**h.n_vertices)
        zero[0] = 1
        src = dense_source(zero, h, rng)
    else:
        src = honest_source(h, rng, c)
        if kind == "flip":
            src = FlipNoiseSource(src, p, rng)
    return cover_protocol(src, h, c, delta, eps, rng).accepted


def _expected_accept(h, c, kind, p, ell):
    """Exact acceptance probability when it is cheap to enumerate, else None."""
    if kind == "honest":
        return 1.0
    if kind == "flip" and p == 1.0:
        per = [flip_all_pass_probability(h, c, i) for i in range(c.k)]
    elif h.n_vertices <= DENSE_LIMIT:
        if kind == "zero":
            amps = np.zeros(2**h.n_vertices)
            amps[0] = 1
        else:
            amps = hypergraph_amplitudes(h)
        per = [exact_pass_probability(amps, h, c, i, p) for i in range(c.k)]
    else:
        return None
    return float(np.mean(per)) ** ell


def cmd_verify(args) -> int:
    kind, p = _parse_source(args.source)
    h, c = _verify_graph(args)
    if kind == "zero" and h.n_vertices > DENSE_LIMIT:
        raise UsageError(f"dense sources need at most {DENSE_LIMIT} vertices")
    ell = tested_registers(c.k, args.delta, args.eps)
    jobs = [(h, c, kind, p, args.delta, args.eps, args.seed, t) for t in range(args.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            verdicts = list(pool.map(_verify_trial, jobs, chunksize=max(1, len(jobs) // (4 * args.jobs))))
    else:
        verdicts = [_verify_trial(j) for j in jobs]
    acc = sum(verdicts)
    lines = [
        f"registers={required_registers(c.k, args.delta, args.eps)} tested={ell} chi={c.k} vertices={h.n_vertices}",
        f"source={args.source} trials={args.trials} accept={acc} reject={args.trials - acc}",
    ]
    code = OK
    want = _expected_accept(h, c, kind, p, ell)
    if want is not None and args.trials:
        sigma = sqrt(want * (1 - want) / args.trials)
        rate = acc / args.trials
        consistent = abs(rate - want) <= 3 * sigma if sigma > 0 else rate == want
        lines.append(f"expected_reject={1 - want:.6f} observed_reject={1 - rate:.6f} consistent={consistent}")
        code = OK if consistent else BREACH
    _emit("\n".join(lines) + "\n", args.out)
    return code


def cmd_vbqc(args) -> int:
    circuit = _load_circuit(args)
    r = run_vbqc(circuit, args.n, args.d, args.delta, args.eps, args.server, args.seed, args.width_cap)
    text = "\n".join(r.client_log) + "\n"
    if r.accepted:
        text += f"output_bits={''.join(map(str, r.output_bits))} frame_x={r.frame.x} frame_z={r.frame.z}\n"
    _emit(text, args.out)
    if args.server_log:
        Path(args.server_log).write_text("\n".join(r.server_transcript) + "\n")
    if args.server != "honest":
        return OK
    if not r.accepted:
        return BREACH
    want = oracle_run(circuit, product_state(["plus"] * args.n)).vector()
    return OK if 1 - fidelity(r.output_state, want) <= acceptance.FIDELITY_TOL else BREACH


def cmd_selftest(args) -> int:
    results = acceptance.run_all(seed=args.seed)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return BREACH if failed else OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xzmbqc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, circuit=False, protocol=False):
        p.add_argument("--n", type=int, default=3)
        p.add_argument("--d", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if circuit:
            p.add_argument("--circuit", help="circuit file: one layer per line, gates split by ';'")
            p.add_argument("--width-cap", type=int, default=DEFAULT_WIDTH_CAP)
        if protocol:
            p.add_argument("--delta", type=float, default=0.5)
            p.add_argument("--eps", type=float, default=0.5)

    p = sub.add_parser("build", help="write G_n^d with its coloring")
    common(p)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("simulate", help="compare MBQC execution with the circuit oracle")
    common(p, circuit=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--suite", action="store_true", help="run the nine one-layer selections on n=3, d=1")
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run the cover protocol many times")
    common(p, protocol=True)
    p.add_argument("--graph", help="hypergraph file with a coloring, instead of --n/--d")
    p.add_argument("--source", default="honest", help="honest, zero or flip:<p>")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("vbqc", help="run one blind verifiable delegation")
    common(p, circuit=True, protocol=True)
    p.add_argument("--server", default="honest", help="honest, flip or flip:<p>")
    p.add_argument("--server-log", help="write the server-side transcript here")
    p.set_defaults(fn=cmd_vbqc)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("trials", "jobs"):
        if getattr(args, name, 1) < (0 if name == "trials" else 1):
            print(f"error: --{name} out of range", file=sys.stderr)
            return USAGE
    try:
        return args.fn(args)
    except (UsageError, DomainError, CompileError, HypergraphError, ParseError, ProtocolDomainError,
            ProtocolViolation, SimulatorError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
