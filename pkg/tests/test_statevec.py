from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from xzmbqc.compiler import make_circuit
from xzmbqc.statevec import (
    SimulatorError,
    StateVector,
    WidthCapExceeded,
    fidelity,
    oracle_run,
    product_state,
    random_qubit,
)

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])
CZ = np.diag([1, 1, 1, -1])


def test_activate_plus():
    s = StateVector()
    s.activate("plus")
    assert np.allclose(s.vector(), [2**-0.5, 2**-0.5])
    s.activate("plus")
    assert np.allclose(s.vector(), [0.5] * 4)


def test_width_cap():
    s = StateVector()
    for _ in range(22):
        s.activate("zero")
    with pytest.raises(WidthCapExceeded):
        s.activate("zero")


def test_gcz_kernels():
    s = product_state(["one", "one"])
    s.apply_gcz(s.active)
    assert np.allclose(s.vector(), [0, 0, 0, -1])
    t = product_state(["plus"] * 3)
    t.apply_gcz(t.active)
    v = t.vector()
    assert np.allclose(np.abs(v), 2**-1.5)
    assert v[7].real < 0 and np.all(v[:7].real > 0)
    t.apply_gcz(t.active)
    assert np.allclose(t.vector(), 2**-1.5)


def test_gcz_rejects_bad_supports():
    s = product_state(["plus"] * 4)
    with pytest.raises(SimulatorError):
        s.apply_gcz(s.active)
    with pytest.raises(SimulatorError):
        s.apply_gcz([0, 0])


def test_single_qubit_gates():
    s = product_state(["zero"])
    s.apply_1q(0, "H")
    assert np.allclose(s.vector(), [2**-0.5, 2**-0.5])
    rng = np.random.default_rng(1)
    psi = random_qubit(rng)
    r = product_state([psi])
    r.apply_1q(0, "H")
    r.apply_1q(0, "H")
    assert abs(fidelity(r, psi) - 1) <= 1e-12
    one = np.array([0, 1])
    assert np.allclose(X @ Z @ one, -(Z @ X @ one))
    a = product_state(["one"])
    a.apply_1q(0, "Z")
    a.apply_1q(0, "X")
    b = product_state(["one"])
    b.apply_1q(0, "X")
    b.apply_1q(0, "Z")
    assert np.isclose(np.vdot(a.vector(), b.vector()), -1)


def test_measure_zero_state():
    s = product_state(["zero"])
    out = s.measure(0, "Z", rng=np.random.default_rng(0))
    assert (out.bit, out.probability) == (0, 1.0)
    assert s.n_active == 0


def test_forced_zero_probability_branch():
    s = product_state(["zero"])
    with pytest.raises(SimulatorError, match="zero-probability-forced-branch"):
        s.measure(0, "Z", forced=1)


@pytest.mark.parametrize("bit", [0, 1])
def test_z_measurement_on_triangle(bit):
    s = product_state(["plus"] * 3)
    s.apply_gcz(s.active)
    out = s.measure(0, "Z", forced=bit)
    assert np.isclose(out.probability, 0.5)
    want = product_state(["plus"] * 2)
    if bit:
        want.apply_gcz(want.active)
    assert abs(fidelity(s, want.vector()) - 1) < 1e-12


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("bit", [0, 1])
def test_x_measurement_teleports(seed, bit):
    psi = random_qubit(np.random.default_rng(seed))
    s = product_state([psi, "plus"])
    s.apply_gcz(s.active)
    out = s.measure(0, "X", forced=bit)
    assert np.isclose(out.probability, 0.5)
    want = np.linalg.matrix_power(X, bit) @ H @ psi
    assert abs(fidelity(s, want) - 1) < 1e-12


def test_fidelity_basics():
    rng = np.random.default_rng(3)
    psi = random_qubit(rng)
    assert np.isclose(fidelity(psi, psi), 1)
    assert fidelity(np.array([1, 0]), np.array([0, 1])) == 0
    assert np.isclose(fidelity(np.exp(0.7j) * psi, psi), 1)
    with pytest.raises(ValueError):
        fidelity(np.ones(2), np.ones(4))


def test_oracle_examples():
    rng = np.random.default_rng(5)
    singles = [random_qubit(rng) for _ in range(3)]
    s = product_state(singles)
    assert np.allclose(oracle_run(make_circuit(3, []), s).vector(), s.vector())
    h = oracle_run(make_circuit(1, [[("H", 0)]]), product_state(["zero"]))
    assert np.allclose(h.vector(), [2**-0.5, 2**-0.5])
    t = oracle_run(make_circuit(3, [[("CCZ", 0, 1, 2)]]), product_state(["plus"] * 3))
    ref = product_state(["plus"] * 3)
    ref.apply_gcz(ref.active)
    assert np.allclose(t.vector(), ref.vector())


def test_oracle_qubit_mismatch():
    with pytest.raises(SimulatorError):
        oracle_run(make_circuit(2, []), product_state(["plus"] * 3))


def test_from_amplitudes_checks():
    with pytest.raises(SimulatorError):
        StateVector.from_amplitudes(np.ones(3))
    with pytest.raises(WidthCapExceeded):
        StateVector.from_amplitudes(np.ones(8), width_cap=2)


op = st.one_of(
    st.tuples(st.just("gcz"), st.lists(st.integers(0, 4), min_size=1, max_size=3, unique=True)),
    st.tuples(st.sampled_from(["H", "X", "Z"]), st.integers(0, 4)),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(op, min_size=1, max_size=40), st.integers(0, 2**32 - 1))
def test_norm_preserved(ops, seed):
    rng = np.random.default_rng(seed)
    s = product_state([random_qubit(rng) for _ in range(5)])
    for name, arg in ops:
        if name == "gcz":
            s.apply_gcz(arg)
        else:
            s.apply_1q(arg, name)
        assert abs(s.norm() - 1) <= 1e-9
    s.measure(0, "X", rng=rng)
    assert abs(s.norm() - 1) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.lists(st.integers(0, 4), min_size=2, max_size=3, unique=True), min_size=1, max_size=6))
def test_gcz_order_irrelevant(edges):
    base = product_state(["plus"] * 5)
    results = []
    for perm in list(permutations(edges))[:6]:
        s = base.copy()
        for e in perm:
            s.apply_gcz(e)
        results.append(s.vector())
    assert all(np.array_equal(results[0], r) for r in results)


def test_z_outcomes_uniform_on_hypergraph_state():
    rng = np.random.default_rng(11)
    s = product_state(["plus"] * 5)
    for e in [(0, 1, 2), (2, 3, 4), (0, 4), (1, 3)]:
        s.apply_gcz(e)
    counts = np.zeros(32)
    for _ in range(10_000):
        t = s.copy()
        bits = [t.measure(q, "Z", rng=rng).bit for q in range(5)]
        counts[int("".join(map(str, bits)), 2)] += 1
    assert chisquare(counts).pvalue > 0.001


def test_forced_then_sampled_matches_brute_force():
    rng = np.random.default_rng(8)
    amps = rng.normal(size=16) + 1j * rng.normal(size=16)
    amps /= np.linalg.norm(amps)
    bases = ["X", "Z", "X", "Z"]
    # exact joint distribution by rotating X-measured qubits
    psi = amps.reshape((2,) * 4)
    for q, b in enumerate(bases):
        if b == "X":
            psi = np.moveaxis(np.tensordot(H, psi, axes=([1], [q])), 0, q)
    exact = np.abs(psi.reshape(-1)) ** 2
    trials = 20_000
    for first in (0, 1):
        counts = np.zeros(8)
        weight = None
        for _ in range(trials):
            s = StateVector.from_amplitudes(amps)
            o = s.measure(0, bases[0], forced=first)
            weight = o.probability
            rest = [s.measure(q, bases[q], rng=rng).bit for q in (1, 2, 3)]
            counts[int("".join(map(str, rest)), 2)] += 1
        cond = exact[first * 8 : first * 8 + 8] / exact[first * 8 : first * 8 + 8].sum()
        assert np.isclose(weight, exact[first * 8 : first * 8 + 8].sum())
        sigma = np.sqrt(cond * (1 - cond) / trials) + 1e-12
        assert np.all(np.abs(counts / trials - cond) <= 4 * sigma + 1e-3)
