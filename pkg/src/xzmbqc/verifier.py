"""Color tests, the cover protocol and register sources (honest, noisy, dense)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .hypergraph import Coloring, Hypergraph, is_valid_coloring
from .statevec import DEFAULT_WIDTH_CAP, StateVector, WidthCapExceeded


class ProtocolDomainError(ValueError):
    pass


def _decimal(x) -> Fraction:
    # repr() gives the shortest decimal that round-trips, i.e. what the caller typed
    return Fraction(repr(float(x)))


def tested_registers(chi: int, delta: float, eps: float) -> int:
    """Number of registers that are tested, ceil(chi (1 - delta) / (delta eps))."""
    if not 0 < delta < 1:
        raise ProtocolDomainError(f"delta must lie in (0, 1), got {delta}")
    if not 0 < eps <= 1:
        raise ProtocolDomainError(f"eps must lie in (0, 1], got {eps}")
    if chi < 1:
        raise ProtocolDomainError(f"chi must be positive, got {chi}")
    d, e = _decimal(delta), _decimal(eps)
    return math.ceil(chi * (1 - d) / (d * e))


def required_registers(chi: int, delta: float, eps: float) -> int:
    """Registers the prover must send: the tested ones plus the reserved one."""
    return tested_registers(chi, delta, eps) + 1


def stabilizer_parity(incident, j, outcomes) -> int:
    """o_j plus, over hyperedges through j, the product of the other outcomes (mod 2)."""
    total = outcomes[j]
    for e in incident[j]:
        prod = 1
        for k in e:
            if k != j:
                prod &= outcomes[k]
        total ^= prod
    return total


@dataclass
class TestRecord:
    __test__ = False  # keeps pytest from collecting it

    register_id: int | None
    color_index: int
    outcomes: dict
    passed: bool
    failing: list = field(default_factory=list)

    def line(self) -> str:
        failing = ",".join(map(str, self.failing)) or "-"
        return f"register={self.register_id} color={self.color_index} pass={int(self.passed)} failing={failing}"


def color_test_bases(h: Hypergraph, coloring: Coloring, i: int) -> dict:
    return {v: ("X" if coloring.color_of[v] == i else "Z") for v in range(h.n_vertices)}


def check_color_test(h: Hypergraph, coloring: Coloring, i: int, outcomes, register_id=None, incident=None) -> TestRecord:
    if not 0 <= i < coloring.k:
        raise ValueError(f"color index {i} outside 0..{coloring.k - 1}")
    if len(outcomes) != h.n_vertices or any(v not in outcomes for v in range(h.n_vertices)):
        raise ValueError("incomplete-outcomes: every vertex needs an outcome")
    incident = incident if incident is not None else h.incident()
    failing = [
        j for j in range(h.n_vertices) if coloring.color_of[j] == i and stabilizer_parity(incident, j, outcomes)
    ]
    return TestRecord(register_id, i, dict(outcomes), not failing, failing)


# -- register sources --------------------------------------------------------

class RegisterSource:
    """Answers ``measure(register_id, bases)`` with one bit per vertex."""

    def measure(self, register_id: int, bases: dict) -> dict:
        raise NotImplementedError


class HonestSource(RegisterSource):
    """Exact sampler for color-test statistics of the ideal hypergraph state.

    Z outcomes of a hypergraph state are uniform.  When no hyperedge holds
    two X-measured vertices, each X outcome is pinned by its stabilizer, so
    the joint distribution is exactly reproduced without any statevector.
    """

    def __init__(self, h: Hypergraph, rng, coloring: Coloring | None = None):
        if coloring is not None and not is_valid_coloring(h, coloring):
            raise ValueError("invalid-coloring")
        self.h = h
        self.rng = rng
        self.incident = h.incident()

    def measure(self, register_id, bases):
        xs = [v for v, b in bases.items() if b == "X"]
        xset = set(xs)
        for v in xs:
            for e in self.incident[v]:
                if len(xset.intersection(e)) > 1:
                    raise ValueError(f"X-measured vertices share hyperedge {e}; honest sampler is not exact")
        n = self.h.n_vertices
        bits = self.rng.integers(0, 2, size=n)
        out = {v: int(bits[v]) for v in range(n)}
        for v in xs:
            out[v] = 0
            out[v] = stabilizer_parity(self.incident, v, out)
        return out


def honest_source(h, rng, coloring=None) -> HonestSource:
    return HonestSource(h, rng, coloring)


class FlipNoiseSource(RegisterSource):
    def __init__(self, base: RegisterSource, p: float, rng):
        if not 0 <= p <= 1:
            raise ValueError("flip probability must lie in [0, 1]")
        self.base, self.p, self.rng = base, p, rng

    def measure(self, register_id, bases):
        out = self.base.measure(register_id, bases)
        flips = self.rng.random(len(out)) < self.p
        return {v: b ^ int(f) for (v, b), f in zip(sorted(out.items()), flips)}


class DenseSource(RegisterSource):
    """Every register is a fresh copy of one small dense state (vertex 0 most significant)."""

    def __init__(self, amplitudes, h: Hypergraph, rng, width_cap=DEFAULT_WIDTH_CAP):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if len(amps) != 2**h.n_vertices:
            raise ValueError(f"dimension-mismatch: {len(amps)} amplitudes for {h.n_vertices} vertices")
        if h.n_vertices > width_cap:
            raise WidthCapExceeded("dense source exceeds the width cap")
        self.state = StateVector.from_amplitudes(amps / np.linalg.norm(amps), width_cap)
        self.h = h
        self.rng = rng

    def measure(self, register_id, bases):
        s = self.state.copy()
        return {v: s.measure(v, bases[v], rng=self.rng).bit for v in range(self.h.n_vertices)}


def dense_source(amplitudes, h, rng, width_cap=DEFAULT_WIDTH_CAP) -> DenseSource:
    return DenseSource(amplitudes, h, rng, width_cap)


# -- brute-force references ---------------------------------------------------

def hypergraph_amplitudes(h: Hypergraph) -> np.ndarray:
    n = h.n_vertices
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))) & 1
    sign = np.zeros(2**n, dtype=int)
    for e in h.edges:
        sign ^= np.bitwise_and.reduce(bits[:, list(e)], axis=1)
    return (1 - 2 * sign) / np.sqrt(2**n)


def outcome_distribution(amplitudes, bases) -> np.ndarray:
    """Exact probability of every outcome string (vertex 0 most significant)."""
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    n = len(bases)
    psi = amps.reshape((2,) * n)
    hmat = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    for v in range(n):
        if bases[v] == "X":
            psi = np.moveaxis(np.tensordot(hmat, psi, axes=([1], [v])), 0, v)
    probs = np.abs(psi.reshape(-1)) ** 2
    return probs / probs.sum()


def exact_pass_probability(amplitudes, h: Hypergraph, coloring: Coloring, i: int, flip_p: float = 0.0) -> float:
    """Probability that the i-th color test passes, optionally after i.i.d. bit flips."""
    n = h.n_vertices
    probs = outcome_distribution(amplitudes, color_test_bases(h, coloring, i))
    incident = h.incident()
    passes = np.zeros(2**n)
    for idx, bits in enumerate(product((0, 1), repeat=n)):
        out = dict(enumerate(bits))
        passes[idx] = all(
            not stabilizer_parity(incident, j, out) for j in range(n) if coloring.color_of[j] == i
        )
    if flip_p == 0:
        return float(probs @ passes)
    total = 0.0
    for idx in range(2**n):
        if probs[idx] == 0:
            continue
        for f in range(2**n):
            w = bin(f).count("1")
            total += probs[idx] * flip_p**w * (1 - flip_p) ** (n - w) * passes[idx ^ f]
    return float(total)


# -- the cover protocol -------------------------------------------------------

@dataclass
class ProtocolResult:
    accepted: bool
    reserved: int
    records: list
    chi: int
    delta: float
    eps: float
    ell: int

    @property
    def first_failure(self) -> TestRecord | None:
        return next((r for r in self.records if not r.passed), None)

    def report(self) -> str:
        lines = [r.line() for r in self.records]
        verdict = "ACCEPT" if self.accepted else "REJECT"
        lines.append(
            f"verdict={verdict} reserved={self.reserved} chi={self.chi} "
            f"delta={self.delta} eps={self.eps} ell={self.ell}"
        )
        return "\n".join(lines) + "\n"


def cover_protocol(source: RegisterSource, h: Hypergraph, coloring: Coloring, delta, eps, rng) -> ProtocolResult:
    """Test every register except one uniformly reserved; accept iff all pass.

    The color index of each register is drawn after the register arrived.
    """
    if not is_valid_coloring(h, coloring):
        raise ValueError("invalid-coloring")
    chi = coloring.k
    ell = tested_registers(chi, delta, eps)
    reserved = int(rng.integers(0, ell + 1))
    incident = h.incident()
    records = []
    for reg in range(ell + 1):
        if reg == reserved:
            continue
        i = int(rng.integers(0, chi))
        outcomes = source.measure(reg, color_test_bases(h, coloring, i))
        records.append(check_color_test(h, coloring, i, outcomes, reg, incident))
    accepted = all(r.passed for r in records)
    return ProtocolResult(accepted, reserved, records, chi, delta, eps, ell)


def flip_all_pass_probability(h: Hypergraph, coloring: Coloring, i: int) -> float:
    """Exact pass probability of the i-th test when an honest register has
    every outcome bit inverted.

    Inverting all bits shifts j's parity by 1 per 2-edge and by
    ``1 + o_a + o_b`` per 3-edge {j, a, b}, so only the Z outcomes on
    3-edge partners of tested vertices matter; those are enumerated.
    """
    incident = h.incident()
    tested = [j for j in range(h.n_vertices) if coloring.color_of[j] == i]
    partners = sorted({k for j in tested for e in incident[j] if len(e) == 3 for k in e if k != j})
    passing = 0
    for bits in product((0, 1), repeat=len(partners)):
        o = dict(zip(partners, bits))
        ok = True
        for j in tested:
            shift = 1
            for e in incident[j]:
                if len(e) == 2:
                    shift ^= 1
                else:
                    a, b = (k for k in e if k != j)
                    shift ^= 1 ^ o[a] ^ o[b]
            if shift:
                ok = False
                break
        passing += ok
    return passing / 2 ** len(partners)
