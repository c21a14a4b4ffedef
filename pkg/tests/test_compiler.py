from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xzmbqc.builder import build_block_g31, build_gnd
from xzmbqc.compiler import (
    ByproductError,
    ByproductTracker,
    Circuit,
    CircuitParseError,
    CompileError,
    CzLedger,
    Gate,
    PauliFrame,
    UnroutableGate,
    compile_plan,
    make_circuit,
    parse_circuit,
    propagate_byproduct,
    random_circuit,
    resolve,
    route,
)

X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])


def test_parse_examples():
    c = parse_circuit("H 0; CCZ 1 2 3")
    assert c.depth == 1 and len(c.layers[0]) == 2 and c.n_qubits >= 4
    assert parse_circuit("H 0\nCCZ 0 1 2\n").depth == 2
    assert parse_circuit("-\nH 1\n\n# comment\n", 3).depth == 2


def test_parse_errors():
    with pytest.raises(CompileError, match="overlapping-supports"):
        parse_circuit("H 0; H 0")
    with pytest.raises(CompileError, match="index-out-of-range"):
        parse_circuit("H 5", 3)
    with pytest.raises(CircuitParseError):
        parse_circuit("T 0")
    with pytest.raises(CircuitParseError):
        parse_circuit("CCZ 0 1")
    with pytest.raises(CircuitParseError):
        parse_circuit("H x")


def test_text_round_trip():
    c = parse_circuit("H 0; CCZ 1 2 3\n-\nH 2\n")
    assert parse_circuit(c.to_text(), c.n_qubits) == c


def test_frame_through_ccz_toggles_pair():
    f = PauliFrame([1, 0, 0], [0, 0, 0], [0, 0, 0])
    f2, led = propagate_byproduct(f, CzLedger(), ("CCZ", 0, 1, 2))
    assert led.pairs == {(1, 2)}
    assert (f2.x, f2.z) == ([1, 0, 0], [0, 0, 0])


def test_frame_through_h_and_cz():
    f2, _ = propagate_byproduct(PauliFrame([1], [0], [0]), CzLedger(), ("H", 0))
    assert f2.as_tuples() == [(0, 1)] and f2.hops == [1]
    f = PauliFrame([0, 0], [1, 0], [0, 0])
    f3, led = propagate_byproduct(f, CzLedger(), ("CZ", 0, 1))
    assert f3 == f and not led.entries


def test_ledger_snapshot_mismatch():
    led = CzLedger()
    led.toggle(0, 1, (0, 0))
    with pytest.raises(ByproductError):
        led.toggle(1, 0, (1, 0))
    led.toggle(1, 0, (0, 0))
    assert not led.entries


def _conjugate(xs, gate_name):
    """Matrix of G X^xs G^dagger built from the tracker's rule."""
    n = 3
    f, led = propagate_byproduct(PauliFrame(list(xs), [0] * n, [0] * n), CzLedger(), (gate_name, *range(3 if gate_name == "CCZ" else 2)))
    m = np.eye(1)
    for w in range(n):
        m = np.kron(m, np.linalg.matrix_power(X, xs[w]))
    diag = np.ones(2**n)
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))) & 1
    for w in range(n):
        if f.z[w]:
            diag *= 1 - 2 * bits[:, w]
    for u, v in led.pairs:
        diag *= 1 - 2 * (bits[:, u] & bits[:, v])
    return m @ np.diag(diag)


@pytest.mark.parametrize("gate", ["CZ", "CCZ"])
def test_frame_algebra_is_a_homomorphism(gate):
    # conj(a) conj(a') = +-conj(a xor a') as operators
    for a, b in product(product((0, 1), repeat=3), repeat=2):
        ab = tuple(x ^ y for x, y in zip(a, b))
        lhs = _conjugate(a, gate) @ _conjugate(b, gate)
        rhs = _conjugate(ab, gate)
        assert np.allclose(lhs, rhs) or np.allclose(lhs, -rhs)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.one_of(st.tuples(st.just("H"), st.integers(0, 2)), st.tuples(st.just("CZ"), st.sampled_from([(0, 1), (0, 2), (1, 2)]))), max_size=20),
    st.lists(st.integers(0, 1), min_size=6, max_size=6),
    st.lists(st.integers(0, 1), min_size=6, max_size=6),
)
def test_clifford_frames_are_linear(gates, p, q):
    def run(bits):
        f = PauliFrame(list(bits[:3]), list(bits[3:]), [0, 0, 0])
        led = CzLedger()
        for g in gates:
            name, arg = g
            f, led = propagate_byproduct(f, led, (name, arg) if name == "H" else (name, *arg))
        return f.x + f.z

    pq = [a ^ b for a, b in zip(p, q)]
    assert run(pq) == [a ^ b for a, b in zip(run(p), run(q))]


def test_route_examples():
    b = build_block_g31()
    (key,) = route(make_circuit(3, [[("CCZ", 0, 1, 2)]]), b)
    assert route(make_circuit(3, [[("CCZ", 0, 1, 2)]]), b)[key] == ("M", "M", "M")
    assert route(make_circuit(3, [[("H", 0)]]), b)[key] == ("H", "I", "I")
    assert route(make_circuit(3, [[]]), b)[key] == ("I", "I", "I")


def test_route_rejects_too_deep_or_wide():
    b = build_block_g31()
    with pytest.raises(CompileError):
        route(make_circuit(3, [[], []]), b)
    with pytest.raises(CompileError):
        route(make_circuit(4, [[]]), b)
    # an H sharing a layer with the only gadget's CCZ; make_circuit would refuse this
    clash = Circuit(3, ((Gate("CCZ", (0, 1, 2)), Gate("H", (0,))),))
    with pytest.raises(UnroutableGate):
        route(clash, b)


def _part_steps(plan, pair):
    ups = [s for s in plan.steps if s.rule == "upper" and s.pair == pair]
    lows = [s for s in plan.steps if s.rule == "lower" and s.pair == pair]
    return ups[0], lows[0]


@pytest.mark.parametrize("pending", [True, False])
def test_resolve_picks_correction_path(pending):
    b = build_block_g31()
    plan = compile_plan(make_circuit(3, [[]]), b)
    up, low = _part_steps(plan, (0, 1))
    tracker = ByproductTracker(b)
    tracker.pos = list(tracker.pos)
    tracker.pos[0], tracker.pos[1] = up.start
    if pending:
        tracker.ledger.toggle(0, 1, (0, 0))
    assert resolve(up, tracker) == ("X" if pending else "Z")
    assert resolve(low, tracker) == ("Z" if pending else "X")
    constant = next(s for s in plan.steps if s.rule == "X")
    assert resolve(constant, tracker) == "X"


@pytest.mark.parametrize("n, d", [(3, 1), (3, 2), (4, 1), (4, 2)])
def test_plan_covers_block_and_respects_dependencies(n, d):
    b = build_gnd(n, d)
    c = random_circuit(n, d, np.random.default_rng(n * 10 + d))
    plan = compile_plan(c, b)
    verts = [s.vertex for s in plan.steps]
    assert len(verts) == len(set(verts))
    assert set(verts) == set(range(b.n_vertices)) - set(b.output_ports)
    index = {v: i for i, v in enumerate(verts)}
    for i, s in enumerate(plan.steps):
        assert all(index[dep] < i for dep in s.deps)
    assert compile_plan(c, b) == plan
    assert compile_plan(c, b).to_text() == plan.to_text()


def test_tracker_rejects_misuse():
    b = build_block_g31()
    tracker = ByproductTracker(b)
    with pytest.raises(ByproductError):
        tracker.record(b.output_ports[0], "X", 0)
    with pytest.raises(ByproductError):
        tracker.record(b.input_ports[0], "Z", 0)
    with pytest.raises(ByproductError):
        tracker.finish()
