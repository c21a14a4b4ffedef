import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xzmbqc.builder import Block, ChainStage, build_gnd
from xzmbqc.compiler import compile_plan, make_circuit, parse_circuit, random_circuit
from xzmbqc.engine import (
    check_against_oracle,
    execute,
    format_report,
    run_trial,
    schedule,
    unwind,
    validate_tape,
)
from xzmbqc.hypergraph import Hypergraph
from xzmbqc.statevec import WidthCapExceeded, fidelity, oracle_run, product_state, random_qubit

TOL = 1e-10
CCZ = make_circuit(3, [[("CCZ", 0, 1, 2)]])


def chain_block(length):
    """One wire teleported along ``length`` edges."""
    h = Hypergraph.from_edges(length + 1, [(i, i + 1) for i in range(length)])
    return Block(h, (0,), (length,), 1, (ChainStage({0: tuple(range(length))}),))


def test_g31_tape_fits_window():
    b = build_gnd(3, 1)
    plan = compile_plan(CCZ, b)
    tape = schedule(b, plan)
    assert tape.peak_width <= 22
    assert validate_tape(tape, b, plan) == []


def test_two_vertex_teleport_tape():
    b = chain_block(1)
    tape = schedule(b, compile_plan(make_circuit(1, []), b))
    assert [op for op, _ in tape.instructions] == ["A", "A", "E", "M"]
    assert tape.peak_width == 2


@pytest.mark.parametrize("n, d", [(3, 1), (3, 2), (4, 1), (4, 2)])
def test_emitted_tapes_are_valid(n, d):
    b = build_gnd(n, d)
    plan = compile_plan(random_circuit(n, d, np.random.default_rng(d)), b)
    assert validate_tape(schedule(b, plan), b, plan) == []


def test_validator_catches_broken_tapes():
    b = chain_block(2)
    plan = compile_plan(make_circuit(1, []), b)
    tape = schedule(b, plan)
    T = type(tape)
    ins = list(tape.instructions)
    assert validate_tape(T(tuple(op for op in ins if op[0] != "E"), tape.peak_width), b, plan)
    # edge (1, 2) pushed after vertex 1 was measured
    e12 = ins.index(("E", (1, 2)))
    late = ins[:e12] + ins[e12 + 1 :] + [ins[e12]]
    assert any("measured" in p for p in validate_tape(T(tuple(late), tape.peak_width), b, plan))
    assert any("peak" in p for p in validate_tape(T(tape.instructions, 9), b, plan))


def test_width_cap_enforced():
    b = build_gnd(3, 1)
    with pytest.raises(WidthCapExceeded):
        schedule(b, compile_plan(CCZ, b), width_cap=4)


def test_ccz_on_plus_inputs():
    b = build_gnd(3, 1)
    plan = compile_plan(CCZ, b)
    r = execute(schedule(b, plan), plan, rng=np.random.default_rng(0))
    want = oracle_run(CCZ, product_state(["plus"] * 3)).vector()
    assert 1 - fidelity(unwind(r.output_state, r.frame), want) <= TOL
    assert not r.ledger.entries


def test_identity_plan_random_inputs():
    c = make_circuit(3, [[]])
    b = build_gnd(3, 1)
    plan = compile_plan(c, b)
    tape = schedule(b, plan)
    rng = np.random.default_rng(4)
    for _ in range(10):
        singles = [random_qubit(rng) for _ in range(3)]
        r = execute(tape, plan, inputs=singles, rng=rng)
        assert 1 - fidelity(unwind(r.output_state, r.frame), product_state(singles).vector()) <= TOL


def test_forced_zero_chain_is_exact():
    b = chain_block(4)
    plan = compile_plan(make_circuit(1, []), b)
    psi = random_qubit(np.random.default_rng(2))
    r = execute(schedule(b, plan), plan, inputs=[psi], forced={v: 0 for v in range(4)})
    assert r.frame.as_tuples() == [(0, 0)]
    assert np.allclose(r.output_state, psi)


def test_harness_examples():
    assert check_against_oracle(parse_circuit("CCZ 0 1 3", 4), 4, 1, 5, 1)["max_infidelity"] <= TOL
    for n in (3, 4, 5):
        assert check_against_oracle(make_circuit(n, []), n, 1, 2, 2)["max_infidelity"] <= TOL


def test_corrupt_negative_control():
    rep = check_against_oracle(make_circuit(3, [[("H", 1)]]), 3, 1, 3, 0, corrupt=True)
    assert rep["max_infidelity"] > 1e-3


def test_parallel_matches_serial():
    c = make_circuit(3, [[("H", 0)]])
    assert check_against_oracle(c, 3, 1, 4, 9, jobs=2) == check_against_oracle(c, 3, 1, 4, 9)


def test_report_format():
    text = format_report(check_against_oracle(CCZ, 3, 1, 2, 0))
    lines = text.splitlines()
    assert lines[0].startswith("trial=0 seed=0 infidelity=")
    assert lines[-1].startswith("max_infidelity=")


def test_outputs_do_not_depend_on_outcomes():
    c = random_circuit(4, 2, np.random.default_rng(7))
    b = build_gnd(4, 2)
    plan = compile_plan(c, b)
    tape = schedule(b, plan)
    singles = [random_qubit(np.random.default_rng([1, w])) for w in range(4)]
    outs = []
    for seed in range(100):
        r = execute(tape, plan, inputs=singles, rng=np.random.default_rng(seed))
        outs.append(unwind(r.output_state, r.frame))
    for o in outs[1:]:
        assert 1 - fidelity(o, outs[0]) <= TOL


def test_determinism():
    a = run_trial(CCZ, 3, 1, 5, 2)
    assert a == run_trial(CCZ, 3, 1, 5, 2)
    b = build_gnd(3, 1)
    plan = compile_plan(CCZ, b)
    tape = schedule(b, plan)
    r1 = execute(tape, plan, rng=np.random.default_rng(3))
    r2 = execute(tape, plan, rng=np.random.default_rng(3))
    assert np.array_equal(r1.output_state, r2.output_state)
    assert r1.frame == r2.frame and r1.outcome_log == r2.outcome_log


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 2**16))
def test_hoisting_constant_z_never_widens_the_window(rnd, seed):
    b = build_gnd(3, 1)
    plan = compile_plan(random_circuit(3, 1, np.random.default_rng(seed)), b)
    order = list(range(len(plan.steps)))
    rnd.shuffle(order)
    base = schedule(b, plan, width_cap=b.n_vertices, order=order)
    incident = b.h.incident()
    zs = [i for i, s in enumerate(order) if plan.steps[s].rule == "Z"]
    pos = rnd.choice(zs)
    v = plan.steps[order[pos]].vertex
    need = {x for e in incident[v] for x in e}
    # earliest slot where v and all its partners are already in the window
    live = set()
    slot = None
    for k, (op, arg) in enumerate(base.instructions):
        if op == "A":
            live.add(arg)
        elif op == "M":
            live.discard(plan.steps[arg].vertex)
            if plan.steps[arg].vertex == v:
                break
        if slot is None and need <= live:
            slot = sum(1 for o, _ in base.instructions[: k + 1] if o == "M")
    if slot is None or slot >= pos:
        return
    hoisted = order[:slot] + [order[pos]] + order[slot:pos] + order[pos + 1 :]
    assert schedule(b, plan, width_cap=b.n_vertices, order=hoisted).peak_width <= base.peak_width
