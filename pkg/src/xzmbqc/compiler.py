"""Circuit DSL, Pauli-frame algebra and compilation of {H, CCZ} circuits into
adaptive X/Z measurement plans on a built block."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .builder import Block, SubBlock


class CompileError(ValueError):
    pass


class CircuitParseError(CompileError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnroutableGate(CompileError):
    pass


class MissingDependency(RuntimeError):
    pass


class ByproductError(RuntimeError):
    """The tracked byproduct left the Pauli/CZ form the plan relies on."""


# -- circuits ---------------------------------------------------------------

@dataclass(frozen=True)
class Gate:
    name: str  # "H" or "CCZ"
    qubits: tuple

    def __str__(self):
        return " ".join([self.name, *map(str, self.qubits)])


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: tuple  # tuple of tuples of Gate

    @property
    def depth(self) -> int:
        return len(self.layers)

    def to_text(self) -> str:
        return "\n".join("; ".join(map(str, layer)) if layer else "-" for layer in self.layers) + "\n"


def make_circuit(n_qubits: int, layers) -> Circuit:
    """Validate and freeze a list of layers, each a list of Gate or (name, *qubits)."""
    frozen = []
    for lineno, layer in enumerate(layers, start=1):
        gates = []
        used = set()
        for g in layer:
            if not isinstance(g, Gate):
                g = Gate(str(g[0]).upper(), tuple(int(q) for q in g[1:]))
            arity = {"H": 1, "CCZ": 3}.get(g.name)
            if arity is None:
                raise CircuitParseError(f"unknown gate {g.name!r}", lineno)
            if len(g.qubits) != arity:
                raise CircuitParseError(f"{g.name} takes {arity} qubit(s)", lineno)
            if any(not 0 <= q < n_qubits for q in g.qubits):
                raise CompileError(f"index-out-of-range in layer {lineno}: {g}")
            if len(set(g.qubits)) != arity or used & set(g.qubits):
                raise CompileError(f"overlapping-supports in layer {lineno}: {g}")
            used |= set(g.qubits)
            if g.name == "CCZ":
                g = Gate("CCZ", tuple(sorted(g.qubits)))
            gates.append(g)
        frozen.append(tuple(gates))
    return Circuit(n_qubits, tuple(frozen))


def parse_circuit(text: str, n_qubits: int | None = None) -> Circuit:
    """One layer per line, gates separated by ``;``.  A line holding only ``-``
    is an explicit empty layer; blank lines are ignored."""
    layers = []
    highest = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "-":
            layers.append([])
            continue
        layer = []
        for chunk in line.split(";"):
            toks = chunk.split()
            if not toks:
                continue
            try:
                qs = [int(t) for t in toks[1:]]
            except ValueError:
                raise CircuitParseError(f"bad qubit index in {chunk.strip()!r}", lineno) from None
            if any(q < 0 for q in qs):
                raise CompileError(f"index-out-of-range on line {lineno}")
            highest = max([highest, *qs])
            layer.append((toks[0], *qs))
        layers.append(layer)
    if n_qubits is None:
        n_qubits = highest + 1
    return make_circuit(n_qubits, layers)


# -- byproduct algebra ------------------------------------------------------

@dataclass
class PauliFrame:
    """Per wire the physical state is X^x Z^z applied to the logical one.

    ``hops`` counts, mod 2, the Hadamards each wire has been through; pending
    CZ byproducts only cancel when both wires sit at the parity they had when
    the byproduct appeared.
    """

    x: list
    z: list
    hops: list

    @classmethod
    def identity(cls, n):
        return cls([0] * n, [0] * n, [0] * n)

    def copy(self):
        return PauliFrame(list(self.x), list(self.z), list(self.hops))

    def as_tuples(self):
        return [(self.x[w], self.z[w]) for w in range(len(self.x))]


@dataclass
class CzLedger:
    entries: dict = field(default_factory=dict)  # (u, v) -> hop parities at creation

    @property
    def pairs(self) -> set:
        return set(self.entries)

    def pending(self, u, v) -> bool:
        return (min(u, v), max(u, v)) in self.entries

    def toggle(self, u, v, snapshot):
        key = (min(u, v), max(u, v))
        snap = snapshot if u < v else snapshot[::-1]
        if key in self.entries:
            if self.entries[key] != snap:
                raise ByproductError(f"CZ byproduct on {key} met a correction at a different H parity")
            del self.entries[key]
        else:
            self.entries[key] = snap

    def touches(self, wires) -> bool:
        return any(u in wires or v in wires for u, v in self.entries)

    def copy(self):
        return CzLedger(dict(self.entries))


def _conjugation_extras(frame, wires):
    """Diagonal factors left behind when a generalized CZ on ``wires`` is
    pulled through the X part of the frame (X_i CCZ X_i = CCZ CZ_jk and kin)."""
    flipped = [w for w in wires if frame.x[w]]
    extras = []
    for r in range(1, len(flipped) + 1):
        for removed in combinations(flipped, r):
            rest = tuple(w for w in wires if w not in removed)
            if rest:
                extras.append(rest)
    return extras


def _apply_diagonal(frame, ledger, support):
    if len(support) == 1:
        frame.z[support[0]] ^= 1
    elif len(support) == 2:
        u, v = support
        ledger.toggle(u, v, (frame.hops[u], frame.hops[v]))
    else:
        raise ByproductError("a three-wire byproduct cannot arise from X/Z frames")


def propagate_byproduct(frame: PauliFrame, ledger: CzLedger, gate):
    """Push the frame through a physically applied gate; returns (frame, ledger).

    ``gate`` is ("H", w), ("CZ", u, v) or ("CCZ", a, b, c).  H is a logical gate
    and swaps the wire's bits.  CZ and CCZ leave the logical state untouched
    except for the conjugation factors, which land in the frame (Z) and the
    ledger (CZ).  The CZ itself is recorded by :class:`ByproductTracker`.
    """
    frame, ledger = frame.copy(), ledger.copy()
    name, *wires = gate
    if name == "H":
        (w,) = wires
        frame.x[w], frame.z[w] = frame.z[w], frame.x[w]
        frame.hops[w] ^= 1
    elif name in ("CZ", "CCZ"):
        for support in _conjugation_extras(frame, tuple(wires)):
            _apply_diagonal(frame, ledger, support)
    else:
        raise ValueError(f"unknown gate {name!r}")
    return frame, ledger


class ByproductTracker:
    """Classical bookkeeping that replays measurement outcomes on a block.

    The unmeasured part of the resource is kept as a residual edge set: a Z
    outcome of 1 on v toggles ``e - {v}`` for every edge through v.  X outcomes
    are applied in logical order: a wire leaves its vertex only once that
    vertex has a single remaining edge, to a fresh vertex.  Measurements on
    distinct qubits commute, so this reordering does not change the state.
    """

    def __init__(self, block: Block):
        self.block = block
        n = block.n_wires
        self.frame = PauliFrame.identity(n)
        self.ledger = CzLedger()
        self.edges = {frozenset(e) for e in block.h.edges}
        self.incident = {}
        for e in self.edges:
            for v in e:
                self.incident.setdefault(v, set()).add(e)
        self.status = {}  # vertex -> "current" | "measured"; missing means fresh
        self.pos = list(block.input_ports)
        self.wire_at = {v: w for w, v in enumerate(self.pos)}
        for v in self.pos:
            self.status[v] = "current"
        self.deferred = {}
        self.outcomes = {}
        self.decisions = {}  # (pair, start) -> take the correcting path
        self.logical_gates = []
        for v in list(self.pos):
            self._apply_current_edges(v)

    def _remove(self, e):
        self.edges.discard(e)
        for v in e:
            self.incident[v].discard(e)

    def _toggle(self, e):
        if not e:
            return
        if e in self.edges:
            self._remove(e)
        elif all(self.status.get(v) == "current" for v in e):
            self._gate(e)
        else:
            self.edges.add(e)
            for v in e:
                self.incident.setdefault(v, set()).add(e)

    def _gate(self, e):
        wires = tuple(sorted(self.wire_at[v] for v in e))
        if len(wires) == 1:
            self.frame.z[wires[0]] ^= 1
            return
        extras = _conjugation_extras(self.frame, wires)
        if len(wires) == 3:
            if self.ledger.touches(wires):
                raise ByproductError(f"CCZ on {wires} with an uncorrected CZ byproduct pending")
            self.logical_gates.append(wires)
        else:
            _apply_diagonal(self.frame, self.ledger, wires)
        for support in extras:
            _apply_diagonal(self.frame, self.ledger, support)

    def _apply_current_edges(self, v):
        for e in list(self.incident.get(v, ())):
            if all(self.status.get(x) == "current" for x in e):
                self._remove(e)
                self._gate(e)

    def record(self, v: int, basis: str, bit: int):
        if v in self.outcomes:
            raise ByproductError(f"vertex {v} measured twice")
        if v in self.block.output_ports:
            raise ByproductError(f"output port {v} must stay unmeasured")
        self.outcomes[v] = (basis, bit)
        if basis == "Z":
            if self.status.get(v) == "current":
                raise ByproductError(f"Z measurement on wire vertex {v} destroys the wire")
            self.status[v] = "measured"
            for e in list(self.incident.get(v, ())):
                self._remove(e)
                if bit:
                    self._toggle(e - {v})
        elif basis == "X":
            self.deferred[v] = bit
        else:
            raise ValueError(f"unknown basis {basis!r}")
        self._advance()

    def _advance(self):
        moved = True
        while moved:
            moved = False
            for w, v in enumerate(self.pos):
                if v in self.deferred and self._can_teleport(v):
                    self._teleport(w, v, self.deferred.pop(v))
                    moved = True

    def _can_teleport(self, v):
        es = self.incident.get(v, ())
        if len(es) != 1:
            return False
        (e,) = es
        if len(e) != 2:
            return False
        (b,) = e - {v}
        return b not in self.status

    def _teleport(self, w, v, s):
        (e,) = self.incident[v]
        (b,) = e - {v}
        self._remove(e)
        f = self.frame
        f.x[w], f.z[w] = f.z[w] ^ s, f.x[w]
        f.hops[w] ^= 1
        self.status[v] = "measured"
        del self.wire_at[v]
        self.status[b] = "current"
        self.wire_at[b] = w
        self.pos[w] = b
        self._apply_current_edges(b)

    def finish(self):
        if self.deferred:
            raise ByproductError(f"X outcomes never consumed: {sorted(self.deferred)}")
        if tuple(self.pos) != tuple(self.block.output_ports):
            raise ByproductError(f"wires stopped at {self.pos}, not at the outputs")
        if self.edges:
            raise ByproductError(f"{len(self.edges)} residual edges left")
        if self.ledger.entries:
            raise ByproductError(f"nonempty-ledger: {sorted(self.ledger.pairs)}")
        return self.frame


# -- plans ------------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    vertex: int
    rule: str  # "X", "Z", "upper" or "lower"
    pair: tuple = ()  # global wires whose pending CZ decides upper/lower
    start: tuple = ()  # where those wires must sit when the decision is taken
    deps: tuple = ()


@dataclass(frozen=True)
class MeasurementPlan:
    block: Block
    circuit: Circuit
    steps: tuple
    routes: dict  # (layer, sub-block base) -> per local wire "I" | "H" | "M"

    def to_text(self) -> str:
        lines = []
        for i, st in enumerate(self.steps):
            line = f"step {i} vertex={st.vertex} rule={st.rule}"
            if st.pair:
                line += f" pair={st.pair[0]},{st.pair[1]}"
            line += " deps=" + (",".join(map(str, st.deps)) if st.deps else "-")
            lines.append(line)
        return "\n".join(lines) + "\n"


_BRANCH_RULES = {
    # mode -> rule for (identity path, hadamard path, middle path)
    "I": ("X", "Z", "Z"),
    "H": ("Z", "X", "Z"),
    "M": ("Z", "Z", "X"),
}


def route(c: Circuit, b: Block) -> dict:
    """Assign each gate of each layer to a sub-block of that layer's slice."""
    if c.n_qubits != b.n_wires:
        raise CompileError(f"circuit has {c.n_qubits} qubits, block has {b.n_wires} wires")
    if c.depth > b.depth:
        raise CompileError(f"circuit depth {c.depth} exceeds block depth {b.depth}")
    routes = {}
    for sub in b.subblocks:
        routes[(sub.layer, sub.base)] = ["I", "I", "I"]
    for layer_index, layer in enumerate(c.layers):
        subs = [s for s in b.subblocks if s.layer == layer_index]
        busy = set()
        for g in layer:
            if g.name != "CCZ":
                continue
            host = next((s for s in subs if tuple(sorted(s.wires)) == g.qubits), None)
            if host is None:
                raise UnroutableGate(f"no sub-block hosts {g}")
            routes[(layer_index, host.base)] = ["M", "M", "M"]
            busy.add(host.base)
        for g in layer:
            if g.name != "H":
                continue
            (q,) = g.qubits
            host = next((s for s in subs if q in s.wires and s.base not in busy), None)
            if host is None:
                raise UnroutableGate(f"no free gadget for {g} in layer {layer_index}")
            routes[(layer_index, host.base)][host.wires.index(q)] = "H"
    return {k: tuple(v) for k, v in routes.items()}


def _subblock_steps(sub: SubBlock, modes):
    steps = {}
    deps = []
    for w in range(3):
        steps[sub.inputs[w]] = Step(sub.inputs[w], "X")
        ident, had, mid = _BRANCH_RULES[modes[w]]
        for v in sub.identity[w]:
            steps[v] = Step(v, ident)
        for v in sub.hadamard[w]:
            steps[v] = Step(v, had)
        for v in sub.middle[w]:
            steps[v] = Step(v, mid)
        steps[sub.region3[w]] = Step(sub.region3[w], "X")
        deps += [sub.inputs[w], *sub.identity[w], *sub.hadamard[w], *sub.middle[w], sub.region3[w]]
    deps = tuple(sorted(deps))
    for p in sub.parts:
        pair = (sub.wires[p.pair[0]], sub.wires[p.pair[1]])
        for y, l in zip(p.upper, p.lower):
            steps[y] = Step(y, "upper", pair, p.start, deps)
            steps[l] = Step(l, "lower", pair, p.start, deps)
        for v in p.merge + p.bypass:
            steps[v] = Step(v, "X")
    return steps


def compile_plan(c: Circuit, b: Block) -> MeasurementPlan:
    routes = route(c, b)
    steps = {}
    for stage in b.stages:
        if isinstance(stage, SubBlock):
            new = _subblock_steps(stage, routes[(stage.layer, stage.base)])
        else:
            new = {v: Step(v, "X") for vs in stage.chains.values() for v in vs}
        clash = steps.keys() & new.keys()
        if clash:
            raise CompileError(f"vertices {sorted(clash)[:5]} appear in two stages")
        steps.update(new)
    expected = set(range(b.n_vertices)) - set(b.output_ports)
    if set(steps) != expected:
        missing = sorted(expected - set(steps))[:5]
        raise CompileError(f"plan does not cover the block, e.g. {missing}")
    ordered = tuple(steps[v] for v in sorted(steps))
    return MeasurementPlan(b, c, ordered, routes)


def resolve(step: Step, tracker: ByproductTracker) -> str:
    """Concrete basis for a step given everything recorded so far."""
    if step.rule in ("X", "Z"):
        return step.rule
    key = (step.pair, step.start)
    if key not in tracker.decisions:
        u, v = step.pair
        if (tracker.pos[u], tracker.pos[v]) != tuple(step.start):
            raise MissingDependency(
                f"decision at vertex {step.vertex} needs wires {u},{v} at {step.start}, "
                f"they are at {tracker.pos[u]},{tracker.pos[v]}"
            )
        tracker.decisions[key] = tracker.ledger.pending(u, v)
    correct = tracker.decisions[key]
    if step.rule == "upper":
        return "X" if correct else "Z"
    return "Z" if correct else "X"


def random_circuit(n: int, d: int, rng, ccz_rate: float = 0.4) -> Circuit:
    """Random {H, CCZ} circuit of depth ``d`` on ``n`` qubits with disjoint supports per layer."""
    layers = []
    for _ in range(d):
        free = [int(q) for q in rng.permutation(n)]
        layer = []
        while free:
            if len(free) >= 3 and rng.random() < ccz_rate:
                layer.append(("CCZ", *sorted(free.pop() for _ in range(3))))
            else:
                q = free.pop()
                if rng.random() < 0.5:
                    layer.append(("H", q))
        layers.append(layer)
    return make_circuit(n, layers)
