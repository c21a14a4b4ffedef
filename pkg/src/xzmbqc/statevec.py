"""Dense statevector over a sliding window of live qubits.

Qubits are addressed by opaque integer handles.  Measured qubits leave the
window immediately, which halves the amplitude array; that is what lets a
resource state of hundreds of vertices run inside a ~20 qubit window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_WIDTH_CAP = 22
NORM_TOL = 1e-9

SQRT1_2 = 1 / np.sqrt(2)
GATES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
INITS = {
    "plus": np.array([SQRT1_2, SQRT1_2], dtype=complex),
    "zero": np.array([1, 0], dtype=complex),
    "one": np.array([0, 1], dtype=complex),
}


class SimulatorError(RuntimeError):
    pass


class WidthCapExceeded(SimulatorError):
    pass


@dataclass(frozen=True)
class Outcome:
    qubit: int
    basis: str
    bit: int
    probability: float


class StateVector:
    def __init__(self, width_cap: int = DEFAULT_WIDTH_CAP):
        self.width_cap = width_cap
        self.active: list[int] = []
        self.amplitudes = np.ones((), dtype=complex)
        self.peak_width = 0
        self._next = 0

    @classmethod
    def from_amplitudes(cls, amps, width_cap: int = DEFAULT_WIDTH_CAP):
        amps = np.asarray(amps, dtype=complex).ravel()
        n = int(round(np.log2(len(amps))))
        if 2**n != len(amps):
            raise SimulatorError("amplitude count is not a power of two")
        if n > width_cap:
            raise WidthCapExceeded(f"{n} qubits exceed width cap {width_cap}")
        s = cls(width_cap)
        s.amplitudes = amps.reshape((2,) * n).copy()
        s.active = list(range(n))
        s._next = n
        s.peak_width = n
        return s

    @property
    def n_active(self) -> int:
        return len(self.active)

    def copy(self) -> "StateVector":
        s = StateVector(self.width_cap)
        s.active = list(self.active)
        s.amplitudes = self.amplitudes.copy()
        s.peak_width = self.peak_width
        s._next = self._next
        return s

    def _axis(self, q: int) -> int:
        try:
            return self.active.index(q)
        except ValueError:
            raise SimulatorError(f"inactive-handle {q}") from None

    def activate(self, init="plus") -> int:
        if len(self.active) >= self.width_cap:
            raise WidthCapExceeded(f"width-cap-exceeded: cap is {self.width_cap}")
        vec = INITS[init] if isinstance(init, str) else np.asarray(init, dtype=complex)
        if vec.shape != (2,):
            raise SimulatorError("custom init must be a single-qubit amplitude pair")
        norm = np.linalg.norm(vec)
        if abs(norm - 1) > NORM_TOL:
            vec = vec / norm
        self.amplitudes = np.multiply.outer(self.amplitudes, vec)
        handle = self._next
        self._next += 1
        self.active.append(handle)
        self.peak_width = max(self.peak_width, len(self.active))
        return handle

    def apply_gcz(self, qubits) -> None:
        qubits = list(qubits)
        if not 1 <= len(qubits) <= 3:
            raise SimulatorError("generalized CZ takes 1 to 3 qubits")
        if len(set(qubits)) != len(qubits):
            raise SimulatorError(f"duplicate-handle in {qubits}")
        index = [slice(None)] * len(self.active)
        for q in qubits:
            index[self._axis(q)] = 1
        self.amplitudes[tuple(index)] *= -1

    def apply_1q(self, q: int, gate) -> None:
        u = GATES[gate] if isinstance(gate, str) else np.asarray(gate, dtype=complex)
        ax = self._axis(q)
        moved = np.tensordot(u, self.amplitudes, axes=([1], [ax]))
        self.amplitudes = np.moveaxis(moved, 0, ax)

    def probability_one(self, q: int, basis: str = "Z") -> float:
        amps = self._rotated(q, basis)
        ax = self._axis(q)
        return float(np.sum(np.abs(np.take(amps, 1, axis=ax)) ** 2))

    def _rotated(self, q, basis):
        if basis == "Z":
            return self.amplitudes
        if basis != "X":
            raise SimulatorError(f"unsupported basis {basis!r}")
        ax = self._axis(q)
        a0 = np.take(self.amplitudes, 0, axis=ax)
        a1 = np.take(self.amplitudes, 1, axis=ax)
        return np.stack([(a0 + a1) * SQRT1_2, (a0 - a1) * SQRT1_2], axis=ax)

    def measure(self, q: int, basis: str = "Z", rng=None, forced: int | None = None) -> Outcome:
        """Measure ``q`` in X or Z, drop it from the window, renormalize.

        X is measured as H followed by Z; bit 0 is |+> (resp. |0>).
        """
        ax = self._axis(q)
        amps = self._rotated(q, basis)
        branches = [np.take(amps, b, axis=ax) for b in (0, 1)]
        probs = [float(np.sum(np.abs(br) ** 2)) for br in branches]
        total = probs[0] + probs[1]
        probs = [p / total for p in probs]
        if forced is None:
            if rng is None:
                raise SimulatorError("measure needs an rng or a forced bit")
            bit = int(rng.random() < probs[1])
            if probs[bit] <= 0:
                bit ^= 1
        else:
            bit = int(forced)
            if probs[bit] <= 1e-12:
                raise SimulatorError(f"zero-probability-forced-branch: qubit {q} bit {bit}")
        self.amplitudes = branches[bit] / np.sqrt(probs[bit] * total)
        del self.active[ax]
        return Outcome(q, basis, bit, probs[bit])

    def vector(self, order=None) -> np.ndarray:
        """Flattened amplitudes with ``order[0]`` as the most significant qubit."""
        order = list(self.active if order is None else order)
        if sorted(order) != sorted(self.active):
            raise SimulatorError("order must list every active qubit")
        axes = [self._axis(q) for q in order]
        return np.transpose(self.amplitudes, axes).reshape(-1)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


def fidelity(s, reference, order=None) -> float:
    """|<ref|s>|^2 for normalized vectors; global phase drops out."""
    vec = s.vector(order) if isinstance(s, StateVector) else np.asarray(s, dtype=complex).ravel()
    ref = np.asarray(reference, dtype=complex).ravel()
    if vec.shape != ref.shape:
        raise ValueError(f"dimension-mismatch: {vec.shape} vs {ref.shape}")
    overlap = np.vdot(ref, vec)
    value = abs(overlap) ** 2 / (np.vdot(ref, ref).real * np.vdot(vec, vec).real)
    return float(min(1.0, value))


def product_state(singles, width_cap: int = DEFAULT_WIDTH_CAP) -> StateVector:
    s = StateVector(width_cap)
    for amp in singles:
        s.activate(amp)
    return s


def random_qubit(rng) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def oracle_run(circuit, state: StateVector) -> StateVector:
    """Apply a layered {H, CCZ} circuit gate by gate; qubit q is ``state.active[q]``."""
    if circuit.n_qubits != state.n_active:
        raise SimulatorError(
            f"circuit has {circuit.n_qubits} qubits but state has {state.n_active}"
        )
    if circuit.n_qubits > state.width_cap:
        raise WidthCapExceeded("width-cap-exceeded")
    out = state.copy()
    handles = list(out.active)
    for layer in circuit.layers:
        for gate in layer:
            if gate.name == "H":
                out.apply_1q(handles[gate.qubits[0]], "H")
            else:
                out.apply_gcz([handles[q] for q in gate.qubits])
    return out
