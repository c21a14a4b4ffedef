"""Builders for the X/Z-universal hypergraphs G_3^1, G_n^1 and G_n^d.

Every block is a flat :class:`Hypergraph` plus a list of *stages* that record
how logical wires flow through it: a :class:`ChainStage` is a run of plain
teleportation vertices, a :class:`SubBlock` is one embedded copy of the
three-wire universal gadget.  Vertex ids are assigned in flow order, so
ascending id order is always a valid measurement order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations
from math import comb

from .hypergraph import Coloring, Hypergraph, VertexMeta, is_valid_coloring

# region labels; 1-5 are the gadget regions, the rest tag connector vertices
REGION_FINAL_LAYER = 6  # final-layer |+> and right half of |Phi+> pairs
REGION_PASS = 7  # left half of |Phi+> pairs and last-group singles
REGION_COLUMN = 8  # columns joining consecutive G_n^1 copies

RED, BLACK, WHITE = 0, 1, 2
G31_PAD = 6  # per-wire teleport padding that brings the core to 66 vertices


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Part:
    """One of the three CZ-correction gadgets of region 4."""

    pair: tuple  # local wires (u, v)
    start: tuple  # vertices the two wires sit on when the part begins
    upper: tuple  # (y_u, y_v); joined by the correcting CZ edge
    lower: tuple  # (l_u, l_v); bypass
    merge: tuple  # (z_u, z_v)
    third: int  # local wire that bypasses this part
    bypass: tuple  # two teleport vertices for the third wire


@dataclass(frozen=True)
class SubBlock:
    wires: tuple  # global wire for local wire 0, 1, 2
    base: int  # id offset of this copy inside the flat hypergraph
    layer: int  # which depth slice (G_n^1 copy) it belongs to
    triple: tuple
    inputs: tuple
    identity: tuple  # per local wire: (i1, i2)
    hadamard: tuple  # per local wire: (h1,)
    middle: tuple  # per local wire: (a, m); the m's form the 3-edge
    region3: tuple
    parts: tuple
    outputs: tuple

    def shifted(self, offset: int, wire_map, layer: int) -> "SubBlock":
        def sh(x):
            if isinstance(x, tuple):
                return tuple(sh(y) for y in x)
            return x + offset

        return SubBlock(
            wires=tuple(wire_map[w] for w in self.wires),
            base=self.base + offset,
            layer=layer,
            triple=tuple(wire_map[w] for w in self.wires),
            inputs=sh(self.inputs),
            identity=sh(self.identity),
            hadamard=sh(self.hadamard),
            middle=sh(self.middle),
            region3=sh(self.region3),
            parts=tuple(
                replace(p, start=sh(p.start), upper=sh(p.upper), lower=sh(p.lower), merge=sh(p.merge), bypass=sh(p.bypass))
                for p in self.parts
            ),
            outputs=sh(self.outputs),
        )


@dataclass(frozen=True)
class ChainStage:
    """Per wire, vertices measured in X that simply teleport the wire onward."""

    chains: dict  # wire -> tuple of vertices

    def shifted(self, offset, wire_map):
        return ChainStage({wire_map[w]: tuple(v + offset for v in vs) for w, vs in self.chains.items()})


@dataclass(frozen=True)
class Block:
    h: Hypergraph
    input_ports: tuple
    output_ports: tuple
    n_wires: int
    stages: tuple
    depth: int = 1
    groups: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    @property
    def subblocks(self) -> list[SubBlock]:
        return [s for s in self.stages if isinstance(s, SubBlock)]

    @property
    def n_vertices(self) -> int:
        return self.h.n_vertices


class _Draft:
    def __init__(self):
        self.n = 0
        self.edges = []
        self.meta = {}

    def add(self, region, wire=None, role="internal"):
        v = self.n
        self.n += 1
        self.meta[v] = VertexMeta(region, role, wire)
        return v

    def edge(self, *vs):
        self.edges.append(tuple(sorted(vs)))

    def set_role(self, v, role):
        self.meta[v] = replace(self.meta[v], role=role)

    def embed(self, block: Block, wire_map, layer):
        offset = self.n
        for v in range(block.n_vertices):
            m = block.h.meta(v)
            wire = wire_map[m.wire] if m.wire is not None else None
            self.meta[offset + v] = VertexMeta(m.region, "internal", wire)
        self.n += block.n_vertices
        self.edges.extend(tuple(x + offset for x in e) for e in block.h.edges)
        stages = []
        for s in block.stages:
            if isinstance(s, SubBlock):
                stages.append(s.shifted(offset, wire_map, layer))
            else:
                stages.append(s.shifted(offset, wire_map))
        ins = tuple(v + offset for v in block.input_ports)
        outs = tuple(v + offset for v in block.output_ports)
        return stages, ins, outs

    def hypergraph(self):
        return Hypergraph.from_edges(self.n, self.edges, self.meta)


def n_subblocks(n: int) -> int:
    return comb(n, 3)


def triple_index(n: int, triple) -> int:
    """Position of a 1-based triple ``i<j<k`` after (1,2,3) in lexicographic order.

    Negative summands of the first double sum are clamped at zero; without
    the clamp the closed form drifts from the lexicographic rank once i >= 4.
    """
    i, j, k = triple
    if n < 4:
        raise DomainError(f"triple_index needs n >= 4, got {n}")
    if not (1 <= i < j < k <= n):
        raise DomainError(f"invalid-triple {triple} for n={n}")
    if (i, j, k) == (1, 2, 3):
        raise DomainError("excluded-triple (1,2,3) lives in the first sub-block")
    first = sum(max(0, n - l - s + 1) for s in range(i) for l in range(2, n))
    second = sum(n - l - i + 1 for l in range(1, j - i + 1))
    return first + second + k - j - (n + 1) * (n - 2) // 2 - n + i - 1


def qubit_count(n: int, d: int) -> int:
    if n < 3 or d < 1:
        raise DomainError(f"qubit_count needs n >= 3 and d >= 1, got n={n}, d={d}")
    return d * (2 * n + 63) * comb(n, 3) - n


def _g31_core() -> Block:
    g = _Draft()
    ins = tuple(g.add(1, w, "input") for w in range(3))
    identity, hadamard, middle = [], [], []
    for w in range(3):
        identity.append((g.add(2, w), g.add(2, w)))
        hadamard.append((g.add(2, w),))
        middle.append((g.add(2, w), g.add(2, w)))
    r3 = tuple(g.add(3, w) for w in range(3))
    for w in range(3):
        i1, i2 = identity[w]
        (h1,) = hadamard[w]
        a, m = middle[w]
        g.edge(ins[w], i1), g.edge(i1, i2), g.edge(i2, r3[w])
        g.edge(ins[w], h1), g.edge(h1, r3[w])
        g.edge(ins[w], a), g.edge(a, m), g.edge(m, r3[w])
    g.edge(*(mid[1] for mid in middle))

    cur = list(r3)
    parts = []
    for u, v in ((0, 1), (0, 2), (1, 2)):
        t = 3 - u - v
        yu, lu, yv, lv = g.add(4, u), g.add(4, u), g.add(4, v), g.add(4, v)
        zu, zv = g.add(4, u), g.add(4, v)
        b1, b2 = g.add(4, t), g.add(4, t)
        for w, y, l, z in ((u, yu, lu, zu), (v, yv, lv, zv)):
            g.edge(cur[w], y), g.edge(cur[w], l), g.edge(y, z), g.edge(l, z)
        g.edge(yu, yv)
        g.edge(cur[t], b1), g.edge(b1, b2)
        parts.append(Part((u, v), (cur[u], cur[v]), (yu, yv), (lu, lv), (zu, zv), t, (b1, b2)))
        cur[u], cur[v], cur[t] = zu, zv, b2
    outs = tuple(g.add(5, w, "output") for w in range(3))
    for w in range(3):
        g.edge(cur[w], outs[w])

    sub = SubBlock(
        wires=(0, 1, 2), base=0, layer=0, triple=(0, 1, 2), inputs=ins,
        identity=tuple(identity), hadamard=tuple(hadamard), middle=tuple(middle),
        region3=r3, parts=tuple(parts), outputs=outs,
    )
    return Block(g.hypergraph(), ins, outs, 3, (sub,))


def pad_wire(b: Block, wire: int, extra: int) -> Block:
    """Append ``extra`` teleport vertices in front of a wire's output port."""
    if extra % 2:
        raise DomainError(f"odd-extra: padding must be even, got {extra}")
    if extra < 0:
        raise DomainError("padding must be non-negative")
    if extra == 0:
        return b
    old_out = b.output_ports[wire]
    region = b.h.meta(old_out).region
    meta = dict(b.h.vertex_meta)
    meta[old_out] = replace(b.h.meta(old_out), role="internal")
    new = list(range(b.n_vertices, b.n_vertices + extra))
    for v in new:
        meta[v] = VertexMeta(region, "internal", wire)
    meta[new[-1]] = VertexMeta(region, "output", wire)
    chain = [old_out] + new
    edges = set(b.h.edges) | {(a, c) for a, c in zip(chain, chain[1:])}
    h = Hypergraph(b.n_vertices + extra, frozenset(edges), meta)
    outs = list(b.output_ports)
    outs[wire] = new[-1]
    stage = ChainStage({wire: tuple(chain[:-1])})
    # the padded end becomes the gadget's port
    stages = tuple(
        replace(st, outputs=tuple(new[-1] if v == old_out else v for v in st.outputs))
        if isinstance(st, SubBlock)
        else st
        for st in b.stages
    )
    return replace(b, h=h, output_ports=tuple(outs), stages=stages + (stage,))


@lru_cache(maxsize=None)
def build_block_g31() -> Block:
    b = _g31_core()
    for w in range(3):
        b = pad_wire(b, w, G31_PAD)
    return b


@lru_cache(maxsize=None)
def build_gn1(n: int) -> Block:
    if n < 3:
        raise DomainError(f"build_gn1 needs n >= 3, got {n}")
    if n == 3:
        return build_block_g31()
    g31 = build_block_g31()
    m = comb(n, 3)
    triples = list(combinations(range(n), 3))
    g = _Draft()
    stages = []
    groups = {}

    def take(group, start):
        groups[group] = set(range(start, g.n))

    # group 1: the first gadget carries wires 0,1,2 directly from the inputs
    start = g.n
    st, ins0, outs0 = g.embed(g31, {0: 0, 1: 1, 2: 2}, 0)
    stages += st
    inputs = {w: ins0[w] for w in range(3)}
    final = {}
    chains = {}
    for w in range(3):
        final[w] = g.add(REGION_FINAL_LAYER, w)
        g.edge(outs0[w], final[w])
        chains[w] = (outs0[w],)
    for w in range(3, n):
        left = g.add(REGION_PASS, w, "input")
        final[w] = g.add(REGION_FINAL_LAYER, w)
        g.edge(left, final[w])
        inputs[w] = left
        chains[w] = (left,)
    stages.append(ChainStage(chains))
    take(1, start)

    outputs = {}
    for s in range(1, m):
        start = g.n
        last = s == m - 1
        triple = triples[s]
        others = [w for w in range(n) if w not in triple]
        chains = {w: (final[w],) for w in range(n)}
        nxt = {}
        for w in others:
            if last:
                p = g.add(REGION_PASS, w, "output")
                g.edge(final[w], p)
                outputs[w] = p
            else:
                left = g.add(REGION_PASS, w)
                right = g.add(REGION_FINAL_LAYER, w)
                g.edge(final[w], left)
                g.edge(left, right)
                chains[w] = (final[w], left)
                nxt[w] = right
        stages.append(ChainStage(chains))
        st, ins, outs = g.embed(g31, dict(enumerate(triple)), 0)
        for w_local, w in enumerate(triple):
            g.edge(final[w], ins[w_local])
        stages += st
        if last:
            for w_local, w in enumerate(triple):
                outputs[w] = outs[w_local]
        else:
            tail = {}
            for w_local, w in enumerate(triple):
                f = g.add(REGION_FINAL_LAYER, w)
                g.edge(outs[w_local], f)
                nxt[w] = f
                tail[w] = (outs[w_local],)
            stages.append(ChainStage(tail))
        final = nxt
        take(s + 1, start)

    for w in range(n):
        g.set_role(inputs[w], "input")
        g.set_role(outputs[w], "output")
    return Block(
        g.hypergraph(),
        tuple(inputs[w] for w in range(n)),
        tuple(outputs[w] for w in range(n)),
        n,
        tuple(stages),
        groups=groups,
    )


@lru_cache(maxsize=None)
def build_gnd(n: int, d: int) -> Block:
    if n < 3 or d < 1:
        raise DomainError(f"build_gnd needs n >= 3 and d >= 1, got n={n}, d={d}")
    one = build_gn1(n)
    if d == 1:
        return one
    g = _Draft()
    stages = []
    columns = {}
    identity = {w: w for w in range(n)}
    prev_outs = None
    inputs = None
    for t in range(d):
        if prev_outs is not None:
            col = tuple(g.add(REGION_COLUMN, w) for w in range(n))
            columns[t] = set(col)
        st, ins, outs = g.embed(one, identity, t)
        if prev_outs is not None:
            for w in range(n):
                g.edge(prev_outs[w], col[w])
                g.edge(col[w], ins[w])
            stages.append(ChainStage({w: (prev_outs[w], col[w]) for w in range(n)}))
        else:
            inputs = ins
        stages += st
        prev_outs = outs
    for w in range(n):
        g.set_role(inputs[w], "input")
        g.set_role(prev_outs[w], "output")
    return Block(g.hypergraph(), tuple(inputs), tuple(prev_outs), n, tuple(stages), depth=d, columns=columns)


def _template_coloring(b: Block) -> list[int]:
    """Backtracking 3-coloring of a single gadget with every port forced red."""
    h = b.h
    n = h.n_vertices
    inc = h.incident()
    colors = [-1] * n
    for v in b.input_ports + b.output_ports:
        colors[v] = RED

    def ok(v, c):
        for e in inc[v]:
            if any(colors[x] == c for x in e if x != v):
                return False
        return True

    order = [v for v in range(n) if colors[v] < 0]

    def solve(i):
        if i == len(order):
            return True
        v = order[i]
        for c in (BLACK, WHITE, RED):
            if ok(v, c):
                colors[v] = c
                if solve(i + 1):
                    return True
        colors[v] = -1
        return False

    if not solve(0):
        raise RuntimeError("gadget is not 3-colorable with red ports")
    return colors


@lru_cache(maxsize=None)
def _g31_colors() -> tuple:
    return tuple(_template_coloring(build_block_g31()))


def build_coloring(b: Block) -> Coloring:
    """Three-coloring with every gadget's ports red and every connector black
    except pass-through vertices, which are red."""
    template = _g31_colors()
    colors = [None] * b.n_vertices
    for sub in b.subblocks:
        for i, c in enumerate(template):
            colors[sub.base + i] = c
    for v in range(b.n_vertices):
        if colors[v] is None:
            region = b.h.meta(v).region
            colors[v] = RED if region == REGION_PASS else BLACK
    coloring = Coloring.from_list(colors, 3)
    if not is_valid_coloring(b.h, coloring):
        raise RuntimeError("constructed coloring is invalid")
    return coloring
