"""Row-finite, sink-free countable directed graphs.

Infinite graphs exist only as parametric families whose global structure
(non-wandering set, cofinality, filtration) is known in closed form. Finite
graphs are given by an explicit edge list and analysed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import networkx as nx

from .errors import InvalidInput, Refused, Undecided

EMPTY = "Empty"
FINITE = "FiniteNonEmpty"
INFINITE = "Infinite"


@dataclass(frozen=True)
class NonWanderingReport:
    """Classification of the vertices lying on a cycle.

    ``vertices`` is explicit for the Empty/FiniteNonEmpty cases; for infinite
    non-wandering sets membership goes through ``predicate`` and ``sample``
    lists a few certified members.
    """

    case_tag: str
    vertices: frozenset | None
    period: int | None = None
    predicate: Callable[[int], bool] | None = field(default=None, compare=False)
    sample: tuple[int, ...] = ()

    def __contains__(self, v: int) -> bool:
        if self.vertices is not None:
            return v in self.vertices
        return bool(self.predicate(v))

    @property
    def empty(self) -> bool:
        return self.case_tag == EMPTY


@dataclass(frozen=True)
class HFiltration:
    levels: tuple[frozenset, ...]

    def __getitem__(self, n: int) -> frozenset:
        return self.levels[n]

    def __len__(self) -> int:
        return len(self.levels)


class GraphModel:
    """Common interface. Vertex and edge ids are integers."""

    kind = "abstract"
    finite = False
    max_out_degree = 0

    def out_edges(self, v: int) -> tuple[int, ...]:
        raise NotImplementedError

    def source(self, e: int) -> int:
        raise NotImplementedError

    def range(self, e: int) -> int:
        raise NotImplementedError

    def has_vertex(self, v: int) -> bool:
        raise NotImplementedError

    def has_edge(self, e: int) -> bool:
        raise NotImplementedError

    def label(self, e: int) -> str:
        return str(e)

    def edge_by_label(self, label: str) -> int:
        try:
            e = int(label)
        except ValueError:
            raise InvalidInput(f"unknown edge label {label!r}") from None
        if not self.has_edge(e):
            raise InvalidInput(f"unknown edge label {label!r}")
        return e

    def nonwandering(self, explore_radius: int | None = None) -> NonWanderingReport:
        raise NotImplementedError

    def is_cofinal(self, explore_radius: int | None = None) -> bool:
        raise NotImplementedError

    def h_filtration(self, levels: int) -> HFiltration:
        raise Refused("WRONG_CASE", f"{self.kind}: H-filtration needs a finite non-empty NW_G")

    def reference_vertex(self) -> int:
        """A fixed vertex of NW_G (or any vertex when NW_G is empty)."""
        raise NotImplementedError

    def default_roots(self) -> tuple[int, ...]:
        """Vertices whose cylinders make up the default explored region."""
        raise NotImplementedError

    def escape_chain(self, v: int, k: int) -> tuple[int, ...]:
        """A path of length k from v whose range leaves every finite set as k grows."""
        raise Refused("NOT_NONCOMPACT", f"{self.kind} has pre-compact forward orbits")

    def to_spec(self) -> dict:
        raise NotImplementedError

    def greedy_edge(self, v: int) -> int:
        return self.out_edges(v)[0]


class ExplicitFinite(GraphModel):
    """A finite graph given as ``(edge_id, source, range)`` triples."""

    kind = "explicit"
    finite = True

    def __init__(self, edges: Iterable[Iterable[int]], labels: dict[int, str] | None = None):
        triples = []
        for item in edges:
            t = tuple(item)
            if len(t) != 3 or not all(isinstance(x, int) and not isinstance(x, bool) for x in t):
                raise InvalidInput(f"edge must be an [id, source, range] integer triple, got {item!r}")
            triples.append(t)
        if not triples:
            raise InvalidInput("graph has no edges")
        self._src: dict[int, int] = {}
        self._rng: dict[int, int] = {}
        out: dict[int, list[int]] = {}
        for e, s, r in triples:
            if e in self._src:
                raise InvalidInput(f"duplicate edge id {e}")
            self._src[e], self._rng[e] = s, r
            out.setdefault(s, []).append(e)
            out.setdefault(r, [])
        sinks = sorted(v for v, es in out.items() if not es)
        if sinks:
            raise InvalidInput(f"graph has sinks: {sinks}")
        self._out = {v: tuple(sorted(es)) for v, es in out.items()}
        self.max_out_degree = max(len(es) for es in self._out.values())
        self._labels = dict(labels or {})
        self._by_label = {lab: e for e, lab in self._labels.items()}

    @property
    def edges(self) -> tuple[tuple[int, int, int], ...]:
        return tuple((e, self._src[e], self._rng[e]) for e in sorted(self._src))

    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self._out))

    def out_edges(self, v):
        try:
            return self._out[v]
        except KeyError:
            raise InvalidInput(f"unknown vertex {v}") from None

    def source(self, e):
        return self._src[e]

    def range(self, e):
        return self._rng[e]

    def has_vertex(self, v):
        return v in self._out

    def has_edge(self, e):
        return e in self._src

    def label(self, e):
        return self._labels.get(e, str(e))

    def edge_by_label(self, label):
        if label in self._by_label:
            return self._by_label[label]
        return super().edge_by_label(label)

    @cached_property
    def _digraph(self) -> nx.DiGraph:
        dg = nx.DiGraph()
        dg.add_nodes_from(self._out)
        dg.add_edges_from((s, r) for _, s, r in self.edges)
        return dg

    @cached_property
    def _cyclic_components(self) -> list[frozenset]:
        dg = self._digraph
        comps = []
        for comp in nx.strongly_connected_components(dg):
            if len(comp) > 1 or any(dg.has_edge(v, v) for v in comp):
                comps.append(frozenset(comp))
        return sorted(comps, key=min)

    def _check_ball(self, explore_radius):
        if explore_radius is None:
            return
        outside = [v for v in self._out if abs(v) > explore_radius]
        if outside:
            raise Undecided(f"vertices {sorted(outside)[:5]} lie outside the explored ball")

    def _component_period(self, comp: frozenset) -> int:
        start = min(comp)
        level = {start: 0}
        queue = [start]
        for v in queue:
            for e in self._out[v]:
                w = self._rng[e]
                if w in comp and w not in level:
                    level[w] = level[v] + 1
                    queue.append(w)
        p = 0
        for e, s, r in self.edges:
            if s in comp and r in comp:
                p = math.gcd(p, level[s] + 1 - level[r])
        return abs(p)

    def nonwandering(self, explore_radius=None):
        self._check_ball(explore_radius)
        comps = self._cyclic_components
        if not comps:
            return NonWanderingReport(EMPTY, frozenset())
        period = 0
        for comp in comps:
            period = math.gcd(period, self._component_period(comp))
        nw = frozenset().union(*comps)
        return NonWanderingReport(FINITE, nw, period=period, sample=tuple(sorted(nw)))

    def is_cofinal(self, explore_radius=None):
        self._check_ball(explore_radius)
        # Infinite paths in a finite graph eventually circulate in a cyclic
        # component; cofinality means every vertex reaches every such component.
        dg = self._digraph
        for v in self._out:
            reach = nx.descendants(dg, v) | {v}
            if any(not (comp & reach) for comp in self._cyclic_components):
                return False
        return True

    def h_filtration(self, levels):
        report = self.nonwandering()
        if report.case_tag != FINITE:
            raise Refused("WRONG_CASE", f"NW_G is {report.case_tag}")
        out = [frozenset(report.vertices)]
        for _ in range(levels):
            prev = out[-1]
            out.append(frozenset(v for v in self._out if all(self._rng[e] in prev for e in self._out[v])))
        return HFiltration(tuple(out))

    def reference_vertex(self):
        report = self.nonwandering()
        return min(report.vertices) if report.vertices else min(self._out)

    def default_roots(self):
        return self.vertices()

    def to_spec(self):
        params = {"edges": [list(t) for t in self.edges]}
        if self._labels:
            params["labels"] = {str(e): lab for e, lab in sorted(self._labels.items())}
        return {"kind": "explicit", "params": params}


class FullShift(ExplicitFinite):
    """One vertex carrying ``letters`` loops ``e1, e2, ...``: the full shift."""

    kind = "full_shift"

    def __init__(self, letters: int = 2):
        if letters < 1:
            raise InvalidInput("full shift needs at least one letter")
        self.letters = letters
        super().__init__([(i, 0, 0) for i in range(letters)], {i: f"e{i + 1}" for i in range(letters)})

    def to_spec(self):
        return {"kind": "full_shift", "params": {"letters": self.letters}}


class Ladder(GraphModel):
    """Vertices 0, 1, 2, ...; edges ``u_n: n -> n+1`` (id 2n) and ``d_n: n -> 0`` (id 2n+1)."""

    kind = "ladder"
    max_out_degree = 2

    def out_edges(self, v):
        if not self.has_vertex(v):
            raise InvalidInput(f"unknown vertex {v}")
        return (2 * v, 2 * v + 1)

    def source(self, e):
        return e // 2

    def range(self, e):
        return e // 2 + 1 if e % 2 == 0 else 0

    def has_vertex(self, v):
        return isinstance(v, int) and v >= 0

    def has_edge(self, e):
        return isinstance(e, int) and e >= 0

    @staticmethod
    def up(n: int) -> int:
        return 2 * n

    @staticmethod
    def down(n: int) -> int:
        return 2 * n + 1

    def is_up(self, e: int) -> bool:
        return e % 2 == 0

    def label(self, e):
        return f"{'u' if e % 2 == 0 else 'd'}_{e // 2}"

    def edge_by_label(self, label):
        kind, _, num = label.partition("_")
        if kind not in ("u", "d") or not num.isdigit():
            raise InvalidInput(f"unknown edge label {label!r}")
        return 2 * int(num) + (kind == "d")

    def nonwandering(self, explore_radius=None):
        # n lies on the cycle u_0 ... u_{n-1} d_n; d_0 is a loop, so the period is 1.
        return NonWanderingReport(INFINITE, None, period=1, predicate=self.has_vertex, sample=tuple(range(6)))

    def is_cofinal(self, explore_radius=None):
        return True

    def reference_vertex(self):
        return 0

    def default_roots(self):
        return tuple(range(5))

    def escape_chain(self, v, k):
        return tuple(2 * (v + i) for i in range(k))

    def to_spec(self):
        return {"kind": "ladder", "params": {}}


class ZRay(GraphModel):
    """Vertices in Z with the single edge ``z_m: m -> m-1`` (edge id m). No cycles."""

    kind = "zray"
    max_out_degree = 1

    def out_edges(self, v):
        if not self.has_vertex(v):
            raise InvalidInput(f"unknown vertex {v}")
        return (v,)

    def source(self, e):
        return e

    def range(self, e):
        return e - 1

    def has_vertex(self, v):
        return isinstance(v, int)

    has_edge = has_vertex

    def label(self, e):
        return f"z_{e}"

    def edge_by_label(self, label):
        kind, _, num = label.partition("_")
        try:
            if kind == "z":
                return int(num)
        except ValueError:
            pass
        raise InvalidInput(f"unknown edge label {label!r}")

    def nonwandering(self, explore_radius=None):
        return NonWanderingReport(EMPTY, frozenset())

    def is_cofinal(self, explore_radius=None):
        # m reaches n - i for every i >= n - m.
        return True

    def reference_vertex(self):
        return 0

    def default_roots(self):
        return tuple(range(-2, 3))

    def escape_chain(self, v, k):
        return tuple(v - i for i in range(k))

    def to_spec(self):
        return {"kind": "zray", "params": {}}


class CoreWithInwardRays(GraphModel):
    """A finite strongly connected core with ``rays`` infinite rays flowing into it.

    Ray ``r`` has vertices ``v_{r,1}, v_{r,2}, ...`` and edges
    ``v_{r,n} -> v_{r,n-1}``, where ``v_{r,0}`` is the smallest core vertex.
    The default core is a single vertex 0 with ``loops`` loops.
    """

    kind = "core_with_inward_rays"

    def __init__(self, loops: int = 2, rays: int = 1, core_edges: Iterable[Iterable[int]] | None = None):
        if rays < 1:
            raise InvalidInput("need at least one ray")
        if core_edges is None:
            if loops < 1:
                raise InvalidInput("core needs at least one loop")
            core_edges = [(i, 0, 0) for i in range(loops)]
        self.core = ExplicitFinite(core_edges)
        if any(v < 0 for v in self.core.vertices()) or any(e < 0 for e, _, _ in self.core.edges):
            raise InvalidInput("core ids must be non-negative")
        if len(self.core._cyclic_components) != 1 or self.core._cyclic_components[0] != frozenset(self.core.vertices()):
            raise InvalidInput("core must be strongly connected")
        self.loops = loops
        self.rays = rays
        self.attach = min(self.core.vertices())
        self._voff = max(self.core.vertices()) + 1
        self._eoff = max(e for e, _, _ in self.core.edges) + 1
        self.max_out_degree = max(self.core.max_out_degree, 1)

    def ray_vertex(self, ray: int, level: int) -> int:
        if level == 0:
            return self.attach
        return self._voff + (level - 1) * self.rays + ray

    def ray_edge(self, ray: int, level: int) -> int:
        """The edge leaving ``v_{ray,level}`` (level >= 1)."""
        return self._eoff + (level - 1) * self.rays + ray

    def ray_position(self, v: int) -> tuple[int, int] | None:
        if v < self._voff:
            return None
        q, r = divmod(v - self._voff, self.rays)
        return r, q + 1

    def ray_edge_level(self, e: int) -> int | None:
        """Level of the ray vertex emitting e, or None for core edges."""
        if e < self._eoff:
            return None
        return (e - self._eoff) // self.rays + 1

    def out_edges(self, v):
        if not self.has_vertex(v):
            raise InvalidInput(f"unknown vertex {v}")
        pos = self.ray_position(v)
        if pos is None:
            return self.core.out_edges(v)
        return (self.ray_edge(*pos),)

    def source(self, e):
        if e < self._eoff:
            return self.core.source(e)
        q, r = divmod(e - self._eoff, self.rays)
        return self.ray_vertex(r, q + 1)

    def range(self, e):
        if e < self._eoff:
            return self.core.range(e)
        q, r = divmod(e - self._eoff, self.rays)
        return self.ray_vertex(r, q)

    def has_vertex(self, v):
        return isinstance(v, int) and (v >= self._voff or self.core.has_vertex(v))

    def has_edge(self, e):
        return isinstance(e, int) and (e >= self._eoff or self.core.has_edge(e))

    def label(self, e):
        if e < self._eoff:
            return f"c_{e}"
        q, r = divmod(e - self._eoff, self.rays)
        return f"r{r}_{q + 1}"

    def edge_by_label(self, label):
        try:
            if label.startswith("c_"):
                e = int(label[2:])
                if self.core.has_edge(e):
                    return e
            elif label.startswith("r"):
                ray, level = label[1:].split("_")
                if 0 <= int(ray) < self.rays and int(level) >= 1:
                    return self.ray_edge(int(ray), int(level))
        except ValueError:
            pass
        raise InvalidInput(f"unknown edge label {label!r}")

    def nonwandering(self, explore_radius=None):
        core = self.core.nonwandering()
        return NonWanderingReport(FINITE, core.vertices, period=core.period, sample=core.sample)

    def is_cofinal(self, explore_radius=None):
        # Every infinite path ends in the strongly connected core, which every vertex reaches.
        return True

    def h_filtration(self, levels):
        core = frozenset(self.core.vertices())
        return HFiltration(tuple(
            core | {self.ray_vertex(r, j) for r in range(self.rays) for j in range(1, n + 1)}
            for n in range(levels + 1)
        ))

    def reference_vertex(self):
        return self.attach

    def default_roots(self):
        return tuple(sorted(self.h_filtration(3)[3]))

    def to_spec(self):
        return {"kind": "core_with_inward_rays",
                "params": {"rays": self.rays, "core_edges": [list(t) for t in self.core.edges]}}


def nonwandering(g: GraphModel, explore_radius: int | None = None) -> NonWanderingReport:
    return g.nonwandering(explore_radius)


def is_cofinal(g: GraphModel, explore_radius: int | None = None) -> bool:
    return g.is_cofinal(explore_radius)


def h_filtration(g: GraphModel, levels: int) -> HFiltration:
    if levels < 1:
        raise InvalidInput("levels must be positive")
    return g.h_filtration(levels)


def default_explore_radius(g: ExplicitFinite) -> int:
    return 10 * max(max(abs(v) for v in g.vertices()), 1)
