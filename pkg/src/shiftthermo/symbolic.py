"""Finite paths, eventually periodic base points, cylinder functions and measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import InvalidInput
from .graph_model import GraphModel


@dataclass(frozen=True, order=True)
class FinitePath:
    """A finite path; ``vertices`` has one more entry than ``edges``.

    The empty path still carries a vertex, so ``FinitePath((v,), ())`` is the
    vertex cylinder ``[v]``.
    """

    vertices: tuple[int, ...]
    edges: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.vertices) != len(self.edges) + 1:
            raise InvalidInput("path needs exactly one more vertex than edges")

    @classmethod
    def from_edges(cls, g: GraphModel, edges: Iterable[int], start: int | None = None) -> "FinitePath":
        edges = tuple(edges)
        if not edges:
            if start is None:
                raise InvalidInput("an empty path needs a start vertex")
            if not g.has_vertex(start):
                raise InvalidInput(f"unknown vertex {start}")
            return cls((start,), ())
        for e in edges:
            if not g.has_edge(e):
                raise InvalidInput(f"unknown edge {e}")
        verts = [g.source(edges[0])]
        if start is not None and start != verts[0]:
            raise InvalidInput(f"path does not start at vertex {start}")
        for e in edges:
            if g.source(e) != verts[-1]:
                raise InvalidInput(f"edges do not compose at edge {g.label(e)}")
            verts.append(g.range(e))
        return cls(tuple(verts), edges)

    @classmethod
    def vertex(cls, v: int) -> "FinitePath":
        return cls((v,), ())

    @classmethod
    def parse(cls, g: GraphModel, text: str) -> "FinitePath":
        """Inverse of :meth:`serialize`: ``"[v]"`` or whitespace-separated edge labels."""
        text = text.strip()
        if text.startswith("[") and text.endswith("]"):
            try:
                return cls.from_edges(g, (), start=int(text[1:-1]))
            except ValueError:
                raise InvalidInput(f"bad vertex cylinder {text!r}") from None
        return cls.from_edges(g, [g.edge_by_label(tok) for tok in text.split()])

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def range(self) -> int:
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.edges)

    def prefix(self, n: int) -> "FinitePath":
        return FinitePath(self.vertices[: n + 1], self.edges[:n])

    def suffix(self, start: int) -> "FinitePath":
        """Drop the first ``start`` edges (the shift applied ``start`` times)."""
        return FinitePath(self.vertices[start:], self.edges[start:])

    def extend(self, g: GraphModel, e: int) -> "FinitePath":
        if g.source(e) != self.range:
            raise InvalidInput("edge does not continue the path")
        return FinitePath(self.vertices + (g.range(e),), self.edges + (e,))

    def extensions(self, g: GraphModel) -> list["FinitePath"]:
        return [FinitePath(self.vertices + (g.range(e),), self.edges + (e,)) for e in g.out_edges(self.range)]

    def serialize(self, g: GraphModel) -> str:
        if not self.edges:
            return f"[{self.source}]"
        return " ".join(g.label(e) for e in self.edges)


def paths_from(g: GraphModel, v: int, length: int) -> list[FinitePath]:
    """All paths of exactly ``length`` edges starting at v, in id order."""
    out = [FinitePath.vertex(v)]
    for _ in range(length):
        out = [q for p in out for q in p.extensions(g)]
    return out


@dataclass(frozen=True)
class BasePoint:
    """The infinite path ``prefix . loop . loop ...``.

    With ``loop=None`` the tail follows the first out-edge at every vertex
    (a deterministic continuation covering e.g. the all-up path of the Ladder).
    """

    graph: GraphModel = field(compare=False, repr=False)
    start: int
    prefix: tuple[int, ...] = ()
    loop: tuple[int, ...] | None = None

    def __post_init__(self):
        g = self.graph
        FinitePath.from_edges(g, self.prefix, start=self.start)
        if self.loop is not None:
            if not self.loop:
                raise InvalidInput("loop must have at least one edge")
            end = FinitePath.from_edges(g, self.prefix, start=self.start).range
            lp = FinitePath.from_edges(g, self.loop, start=end)
            if lp.range != end:
                raise InvalidInput("loop must return to its start vertex")

    @classmethod
    def from_labels(cls, g: GraphModel, prefix: Iterable[str], loop: Iterable[str] | None = None,
                    start: int | None = None) -> "BasePoint":
        pre = tuple(g.edge_by_label(s) for s in prefix)
        lp = None if loop is None else tuple(g.edge_by_label(s) for s in loop)
        if start is None:
            if pre:
                start = g.source(pre[0])
            elif lp:
                start = g.source(lp[0])
            else:
                raise InvalidInput("base point needs a start vertex")
        return cls(g, start, pre, lp)

    @property
    def source(self) -> int:
        return self.start

    def iter_edges(self) -> Iterator[int]:
        yield from self.prefix
        if self.loop is not None:
            while True:
                yield from self.loop
        v = self.graph.range(self.prefix[-1]) if self.prefix else self.start
        while True:
            e = self.graph.greedy_edge(v)
            yield e
            v = self.graph.range(e)

    def edges(self, n: int) -> tuple[int, ...]:
        it = self.iter_edges()
        return tuple(next(it) for _ in range(n))

    def head(self, n: int) -> FinitePath:
        return FinitePath.from_edges(self.graph, self.edges(n), start=self.start)

    def shift(self) -> "BasePoint":
        g = self.graph
        if self.prefix:
            return BasePoint(g, g.range(self.prefix[0]), self.prefix[1:], self.loop)
        if self.loop is not None:
            lp = self.loop[1:] + self.loop[:1]
            return BasePoint(g, g.range(self.loop[0]), (), lp)
        return BasePoint(g, g.range(g.greedy_edge(self.start)))

    def preimage(self, e: int) -> "BasePoint":
        """The point ``e . self``."""
        if self.graph.range(e) != self.start:
            raise InvalidInput("edge does not end at the base point's source")
        return BasePoint(self.graph, self.graph.source(e), (e,) + self.prefix, self.loop)

    def describe(self) -> str:
        g = self.graph
        pre = " ".join(g.label(e) for e in self.prefix)
        tail = "greedy" if self.loop is None else "(" + " ".join(g.label(e) for e in self.loop) + ")*"
        return f"[{self.start}] {pre} {tail}".replace("  ", " ")


class CylinderFunction:
    """A finite real combination of indicators of cylinders of one common depth.

    Weights are kept as plain floats. Depth-0 keys are vertex cylinders.
    """

    __slots__ = ("depth", "terms")

    def __init__(self, depth: int, terms: Mapping[FinitePath, float]):
        if depth < 0:
            raise InvalidInput("depth must be non-negative")
        clean = {}
        for p, w in terms.items():
            if len(p) != depth:
                raise InvalidInput(f"cylinder key of length {len(p)} in a depth-{depth} function")
            w = float(w)
            if not math.isfinite(w):
                raise InvalidInput("cylinder weights must be finite")
            if w != 0.0:
                clean[p] = clean.get(p, 0.0) + w
        self.depth = depth
        self.terms = {p: clean[p] for p in sorted(clean) if clean[p] != 0.0}

    @classmethod
    def indicator(cls, path: FinitePath, weight: float = 1.0) -> "CylinderFunction":
        return cls(len(path), {path: weight})

    @classmethod
    def vertex_indicator(cls, v: int) -> "CylinderFunction":
        return cls(0, {FinitePath.vertex(v): 1.0})

    def __repr__(self) -> str:
        return f"CylinderFunction(depth={self.depth}, terms={len(self.terms)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CylinderFunction) and self.depth == other.depth and self.terms == other.terms

    def scale(self, c: float) -> "CylinderFunction":
        return CylinderFunction(self.depth, {p: c * w for p, w in self.terms.items()})

    def __add__(self, other: "CylinderFunction") -> "CylinderFunction":
        if self.depth != other.depth:
            raise InvalidInput("refine both functions to a common depth before adding")
        merged = dict(self.terms)
        for p, w in other.terms.items():
            merged[p] = merged.get(p, 0.0) + w
        return CylinderFunction(self.depth, merged)

    def refine(self, g: GraphModel, depth: int) -> "CylinderFunction":
        """Rewrite on cylinders of a larger depth (exact, the graph is row-finite)."""
        if depth < self.depth:
            raise InvalidInput("cannot refine to a smaller depth")
        terms = dict(self.terms)
        for _ in range(depth - self.depth):
            nxt = {}
            for p, w in terms.items():
                for q in p.extensions(g):
                    nxt[q] = w
            terms = nxt
        return CylinderFunction(depth, terms)

    def is_nonnegative(self) -> bool:
        return all(w >= 0 for w in self.terms.values())

    def support_vertices(self) -> set[int]:
        return {p.source for p in self.terms}


def evaluate(f: CylinderFunction, x: BasePoint) -> float:
    """Weight of the depth-d prefix of x, or 0."""
    key = x.head(f.depth) if f.depth else FinitePath.vertex(x.start)
    return f.terms.get(key, 0.0)


class CylinderMeasure:
    """Masses of cylinders of length up to ``depth``, stored as natural logs."""

    def __init__(self, depth: int, log_values: Mapping[FinitePath, float], finite_total: bool | None = None):
        for p in log_values:
            if len(p) > depth:
                raise InvalidInput("cylinder longer than the measure depth")
        self.depth = depth
        self.log_values = dict(sorted(log_values.items(), key=lambda kv: (len(kv[0]), kv[0])))
        self.finite_total = finite_total

    def __contains__(self, p: FinitePath) -> bool:
        return p in self.log_values

    def __len__(self) -> int:
        return len(self.log_values)

    def log_mass(self, p: FinitePath) -> float:
        return self.log_values[p]

    def mass(self, p: FinitePath) -> float:
        return math.exp(self.log_values[p])

    def paths(self, length: int | None = None) -> list[FinitePath]:
        return [p for p in self.log_values if length is None or len(p) == length]

    def scaled(self, log_factor: float) -> "CylinderMeasure":
        return CylinderMeasure(self.depth, {p: v + log_factor for p, v in self.log_values.items()}, self.finite_total)

    def integrate(self, f: CylinderFunction) -> float:
        if f.depth > self.depth:
            raise InvalidInput("function is finer than the stored measure")
        total = 0.0
        for p, w in f.terms.items():
            if p not in self.log_values:
                raise InvalidInput(f"measure does not store the cylinder {p}")
            total += w * math.exp(self.log_values[p])
        return total

    def additivity_residual(self, g: GraphModel) -> float:
        """Max relative gap between a cylinder and the sum over its one-edge extensions."""
        worst = 0.0
        for p, lv in self.log_values.items():
            if len(p) >= self.depth:
                continue
            kids = p.extensions(g)
            if not all(q in self.log_values for q in kids):
                continue
            parent = math.exp(lv)
            s = math.fsum(math.exp(self.log_values[q]) for q in kids)
            if parent == 0.0:
                gap = 0.0 if s == 0.0 else math.inf
            else:
                gap = abs(s - parent) / parent
            worst = max(worst, gap)
        return worst

    def to_tsv(self, g: GraphModel) -> str:
        lines = []
        for p, lv in self.log_values.items():
            val = lv / math.log(10) if lv > -math.inf else -math.inf
            lines.append(f"{p.serialize(g)}\t{val:.15g}")
        return "\n".join(lines) + "\n"


def restrict_depth(m: CylinderMeasure, d: int) -> CylinderMeasure:
    if d > m.depth or d < 0:
        raise InvalidInput(f"cannot restrict a depth-{m.depth} measure to depth {d}")
    return CylinderMeasure(d, {p: v for p, v in m.log_values.items() if len(p) <= d}, m.finite_total)


def read_measure_tsv(g: GraphModel, text: str) -> CylinderMeasure:
    vals = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        try:
            key, val = line.split("\t")
            vals[FinitePath.parse(g, key)] = float(val) * math.log(10)
        except ValueError:
            raise InvalidInput(f"bad measure row {line!r}") from None
    if not vals:
        raise InvalidInput("empty measure table")
    return CylinderMeasure(max(len(p) for p in vals), vals)
