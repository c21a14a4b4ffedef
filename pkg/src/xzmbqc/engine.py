"""Run measurement plans on the windowed simulator and compare with the circuit oracle."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .builder import Block, build_gnd
from .compiler import ByproductTracker, Circuit, CzLedger, MeasurementPlan, PauliFrame, compile_plan, resolve
from .statevec import (
    DEFAULT_WIDTH_CAP,
    Outcome,
    StateVector,
    WidthCapExceeded,
    fidelity,
    oracle_run,
    product_state,
    random_qubit,
)

ORACLE_TOL = 1e-10


@dataclass(frozen=True)
class InstructionTape:
    instructions: tuple  # ("A", vertex) | ("E", edge) | ("M", step index)
    peak_width: int


@dataclass
class RunResult:
    output_state: np.ndarray  # amplitudes over the output ports, wire 0 most significant
    frame: PauliFrame
    ledger: CzLedger
    outcome_log: list
    peak_width: int


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Stream for one trial: the master seed and trial index seed a PCG64 jointly."""
    return np.random.default_rng([seed, trial])


def schedule(b: Block, plan: MeasurementPlan, width_cap: int = DEFAULT_WIDTH_CAP, order=None) -> InstructionTape:
    """Lazy tape: a vertex is activated only when an edge of a vertex about to
    be measured needs it, and every edge is applied just before its first
    vertex is measured.

    ``order`` lists step indices in measurement order (default: plan order).
    Any order gives a valid state-preparation tape, but only plan order is
    guaranteed to be executable by the byproduct tracker.
    """
    incident = b.h.incident()
    active = set()
    applied = set()
    tape = []
    peak = 0

    def activate(v):
        nonlocal peak
        if v not in active:
            active.add(v)
            tape.append(("A", v))
            peak = max(peak, len(active))

    seen = set()
    if order is None:
        order = range(len(plan.steps))
    elif sorted(order) != list(range(len(plan.steps))):
        raise ValueError("order must be a permutation of the plan's step indices")
    for index in order:
        v = plan.steps[index].vertex
        for e in incident[v]:
            if e in applied:
                continue
            for x in e:
                if x in seen:
                    raise RuntimeError(f"edge {e} would be applied after {x} was measured")
                activate(x)
            tape.append(("E", e))
            applied.add(e)
        activate(v)
        tape.append(("M", index))
        active.discard(v)
        seen.add(v)
    for v in b.output_ports:
        activate(v)
    for e in sorted(b.h.edges):
        if e not in applied:
            for x in e:
                activate(x)
            tape.append(("E", e))
    if peak > width_cap:
        raise WidthCapExceeded(f"width-cap-exceeded: tape needs {peak} qubits, cap {width_cap}")
    return InstructionTape(tuple(tape), peak)


def validate_tape(tape: InstructionTape, b: Block, plan: MeasurementPlan) -> list[str]:
    """Problems with a tape; empty when it is valid for this block and plan."""
    problems = []
    active, activated, measured, applied = set(), set(), set(), set()
    outputs = set(b.output_ports)
    peak = 0
    for op, arg in tape.instructions:
        if op == "A":
            if arg in activated:
                problems.append(f"vertex {arg} activated twice")
            activated.add(arg)
            active.add(arg)
            peak = max(peak, len(active))
        elif op == "E":
            if arg not in b.h.edges:
                problems.append(f"edge {arg} is not in the block")
            if arg in applied:
                problems.append(f"edge {arg} applied twice")
            for v in arg:
                if v not in active:
                    problems.append(f"edge {arg} applied while {v} is {'measured' if v in measured else 'inactive'}")
            applied.add(arg)
        elif op == "M":
            v = plan.steps[arg].vertex
            if v in outputs:
                problems.append(f"output port {v} measured")
            if v in measured or v not in active:
                problems.append(f"vertex {v} measured while not live")
            active.discard(v)
            measured.add(v)
        else:
            problems.append(f"unknown instruction {op!r}")
    if applied != set(b.h.edges):
        problems.append(f"{len(set(b.h.edges) - applied)} edges never applied")
    if activated != set(range(b.n_vertices)):
        problems.append("some vertices never activated")
    if measured != set(range(b.n_vertices)) - outputs:
        problems.append("some non-output vertices never measured")
    if peak != tape.peak_width:
        problems.append(f"declared peak {tape.peak_width} but tape reaches {peak}")
    return problems


def execute(
    tape: InstructionTape,
    plan: MeasurementPlan,
    inputs=None,
    rng=None,
    forced=None,
    width_cap: int = DEFAULT_WIDTH_CAP,
) -> RunResult:
    """Run the tape.  ``inputs`` are per-wire amplitude pairs (default |+>);
    ``forced`` maps vertex -> bit for post-selected runs."""
    b = plan.block
    if inputs is not None and len(inputs) != b.n_wires:
        raise ValueError(f"expected {b.n_wires} inputs, got {len(inputs)}")
    port_wire = {v: w for w, v in enumerate(b.input_ports)}
    sv = StateVector(width_cap)
    handle = {}
    tracker = ByproductTracker(b)
    log = []
    for op, arg in tape.instructions:
        if op == "A":
            init = "plus"
            if inputs is not None and arg in port_wire:
                init = inputs[port_wire[arg]]
            handle[arg] = sv.activate(init)
        elif op == "E":
            sv.apply_gcz([handle[v] for v in arg])
        else:
            step = plan.steps[arg]
            basis = resolve(step, tracker)
            bit = None if forced is None else forced.get(step.vertex)
            out = sv.measure(handle[step.vertex], basis, rng=rng, forced=bit)
            tracker.record(step.vertex, basis, out.bit)
            log.append(Outcome(step.vertex, basis, out.bit, out.probability))
    frame = tracker.finish()
    state = sv.vector([handle[v] for v in b.output_ports])
    return RunResult(state, frame, tracker.ledger, log, sv.peak_width)


def unwind(state, frame: PauliFrame) -> np.ndarray:
    """Undo X^x Z^z on every wire (X first, then Z) of a flat state vector."""
    n = len(frame.x)
    psi = np.asarray(state, dtype=complex).reshape((2,) * n).copy()
    for w in range(n):
        if frame.x[w]:
            psi = np.flip(psi, axis=w)
        if frame.z[w]:
            index = [slice(None)] * n
            index[w] = 1
            psi[tuple(index)] *= -1
    return psi.reshape(-1)


_PREPARED = {}


def prepare(c: Circuit, n: int, d: int, width_cap: int = DEFAULT_WIDTH_CAP):
    key = (c, n, d, width_cap)
    if key not in _PREPARED:
        b = build_gnd(n, d)
        plan = compile_plan(c, b)
        _PREPARED[key] = (plan, schedule(b, plan, width_cap))
    return _PREPARED[key]


def run_trial(c: Circuit, n: int, d: int, seed: int, trial: int, width_cap=DEFAULT_WIDTH_CAP, corrupt=False):
    plan, tape = prepare(c, n, d, width_cap)
    rng = trial_rng(seed, trial)
    singles = [random_qubit(rng) for _ in range(n)]
    result = execute(tape, plan, inputs=singles, rng=rng, width_cap=width_cap)
    frame = result.frame
    if corrupt:
        # negative control for the harness: forget one X byproduct bit
        frame = frame.copy()
        frame.x[0] ^= 1
    got = unwind(result.output_state, frame)
    want = oracle_run(c, product_state(singles, width_cap)).vector()
    return {
        "trial": trial,
        "seed": seed,
        "infidelity": max(0.0, 1.0 - fidelity(got, want)),
        "peak_width": tape.peak_width,
    }


def _run_trial_star(args):
    return run_trial(*args)


def check_against_oracle(
    c: Circuit, n: int, d: int, trials: int, seed: int, width_cap=DEFAULT_WIDTH_CAP, jobs=1, corrupt=False
) -> dict:
    args = [(c, n, d, seed, t, width_cap, corrupt) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_run_trial_star, args))
    else:
        records = [run_trial(*a) for a in args]
    return {
        "n": n,
        "d": d,
        "max_infidelity": max((r["infidelity"] for r in records), default=0.0),
        "trials": records,
    }


def format_report(report: dict) -> str:
    lines = [
        f"trial={r['trial']} seed={r['seed']} infidelity={r['infidelity']:.3e} peak_width={r['peak_width']}"
        for r in report["trials"]
    ]
    lines.append(f"max_infidelity={report['max_infidelity']:.3e}")
    return "\n".join(lines) + "\n"
