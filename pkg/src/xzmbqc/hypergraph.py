"""Hypergraphs with arity-1..3 edges, vertex metadata, colorings and a text format."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

ROLES = ("input", "output", "internal")


class HypergraphError(ValueError):
    """Raised for invalid hypergraphs; ``violations`` lists (code, detail) pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{code}: {detail}" for code, detail in self.violations))


class ParseError(ValueError):
    def __init__(self, message: str, line: int, offset: int = 0):
        self.line = line
        self.offset = offset
        super().__init__(f"line {line}, offset {offset}: {message}")


@dataclass(frozen=True)
class VertexMeta:
    region: int = 0
    role: str = "internal"
    wire: int | None = None


@dataclass(frozen=True)
class Hypergraph:
    """Vertex set ``0..n_vertices-1`` plus a set of sorted edge tuples.

    Edges are stored sorted and deduplicated; the generalized-CZ gates they
    stand for commute, so edge order carries no meaning.
    """

    n_vertices: int
    edges: frozenset = frozenset()
    vertex_meta: dict = field(default_factory=dict, compare=False, hash=False)

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[Iterable[int]], meta=None, strict=True):
        """Build from raw edge lists. With ``strict`` the result must pass :func:`validate`."""
        normalized = [tuple(sorted(e)) for e in edges]
        h = cls(n_vertices, frozenset(normalized), dict(meta or {}))
        if strict:
            problems = _violations(n_vertices, [list(e) for e in edges])
            if problems:
                raise HypergraphError(problems)
        return h

    def meta(self, v: int) -> VertexMeta:
        return self.vertex_meta.get(v, VertexMeta())

    def incident(self) -> list[list[tuple]]:
        inc = [[] for _ in range(self.n_vertices)]
        for e in self.edges:
            for v in e:
                inc[v].append(e)
        return inc

    def edges_of_arity(self, k: int) -> list[tuple]:
        return sorted(e for e in self.edges if len(e) == k)

    def remove_edge(self, edge) -> "Hypergraph":
        return Hypergraph(self.n_vertices, self.edges - {tuple(sorted(edge))}, self.vertex_meta)


def _violations(n_vertices, raw_edges):
    problems = []
    seen = set()
    for e in raw_edges:
        e = list(e)
        if not 1 <= len(e) <= 3:
            problems.append(("arity-out-of-range", f"edge {e} has arity {len(e)}"))
        bad = [v for v in e if not (isinstance(v, int) and 0 <= v < n_vertices)]
        if bad:
            problems.append(("vertex-out-of-range", f"edge {e} uses {bad}"))
        if len(set(e)) != len(e):
            problems.append(("repeated-vertex-in-edge", f"edge {e}"))
        key = tuple(sorted(e))
        if key in seen:
            problems.append(("duplicate-edge", f"edge {e}"))
        seen.add(key)
    return problems


def validate(h: Hypergraph, raw_edges=None) -> list[tuple[str, str]]:
    """Return the list of invariant violations (empty means ok).

    ``raw_edges`` lets callers check an edge list before it has been
    normalized into a set, which is the only way duplicates can be seen.
    """
    edges = raw_edges if raw_edges is not None else sorted(h.edges)
    problems = _violations(h.n_vertices, edges)
    for v, m in h.vertex_meta.items():
        if not 0 <= v < h.n_vertices:
            problems.append(("vertex-out-of-range", f"meta for vertex {v}"))
        if m.role not in ROLES:
            problems.append(("bad-role", f"vertex {v} role {m.role!r}"))
    return problems


@dataclass(frozen=True)
class Coloring:
    color_of: tuple
    k: int

    @classmethod
    def from_list(cls, colors, k=None):
        colors = tuple(int(c) for c in colors)
        return cls(colors, k if k is not None else (max(colors) + 1 if colors else 0))


def is_valid_coloring(h: Hypergraph, c: Coloring) -> bool:
    if len(c.color_of) != h.n_vertices:
        raise ValueError(
            f"length-mismatch: coloring has {len(c.color_of)} entries, hypergraph {h.n_vertices}"
        )
    for e in h.edges:
        cols = [c.color_of[v] for v in e]
        if len(set(cols)) != len(cols):
            return False
    return all(0 <= x < c.k for x in c.color_of)


def color_classes(c: Coloring) -> list[set[int]]:
    classes = [set() for _ in range(c.k)]
    for v, col in enumerate(c.color_of):
        classes[col].add(v)
    return classes


def encode(h: Hypergraph, c: Coloring | None = None) -> str:
    lines = [f"hypergraph n={h.n_vertices}"]
    for e in sorted(h.edges, key=lambda e: (len(e), e)):
        lines.append("e " + " ".join(map(str, e)))
    for v in sorted(h.vertex_meta):
        m = h.vertex_meta[v]
        line = f"meta {v} region={m.region} role={m.role}"
        if m.wire is not None:
            line += f" wire={m.wire}"
        lines.append(line)
    if c is not None:
        lines.extend(f"color {v} {col}" for v, col in enumerate(c.color_of))
    return "\n".join(lines) + "\n"


def decode(text: str) -> tuple[Hypergraph, Coloring | None]:
    n = None
    edges = []
    meta = {}
    colors = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if n is None:
            if head != "hypergraph" or len(toks) != 2 or not toks[1].startswith("n="):
                raise ParseError("expected header 'hypergraph n=<N>'", lineno)
            n = _int(toks[1][2:], lineno, raw)
            continue
        if head == "e":
            if not 2 <= len(toks) <= 4:
                raise ParseError(f"edge arity {len(toks) - 1} out of range", lineno, raw.find("e"))
            e = [_int(t, lineno, raw) for t in toks[1:]]
            problems = _violations(n, [e])
            if problems:
                raise ParseError(problems[0][1], lineno)
            edges.append(e)
        elif head == "meta":
            v = _int(toks[1], lineno, raw)
            fields = {}
            for t in toks[2:]:
                key, _, val = t.partition("=")
                fields[key] = val
            try:
                wire = int(fields["wire"]) if "wire" in fields else None
                meta[v] = VertexMeta(int(fields.get("region", 0)), fields.get("role", "internal"), wire)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if meta[v].role not in ROLES:
                raise ParseError(f"unknown role {meta[v].role!r}", lineno, raw.find("role"))
        elif head == "color":
            if len(toks) != 3:
                raise ParseError("expected 'color <v> <c>'", lineno)
            colors[_int(toks[1], lineno, raw)] = _int(toks[2], lineno, raw)
        else:
            raise ParseError(f"unknown record {head!r}", lineno)
    if n is None:
        raise ParseError("missing header", 0)
    dup = len({tuple(sorted(e)) for e in edges}) != len(edges)
    if dup:
        raise ParseError("duplicate edge", 0)
    h = Hypergraph.from_edges(n, edges, meta)
    coloring = None
    if colors:
        if sorted(colors) != list(range(n)):
            raise ParseError("color lines must cover every vertex", 0)
        coloring = Coloring.from_list([colors[v] for v in range(n)])
    return h, coloring


def _int(tok, lineno, raw):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer, got {tok!r}", lineno, max(raw.find(tok), 0)) from None
