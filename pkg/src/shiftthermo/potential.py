"""Locally constant potentials of finite depth.

A potential of depth k reads the first k edges of a path. Besides the rule
itself it carries closed-form bounds (globally and on the non-wandering part)
and the variations var_1 .. var_{k-1}, so that downstream code never has to
search an infinite graph for a supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import InvalidInput, Refused
from .graph_model import CoreWithInwardRays, ExplicitFinite, GraphModel, Ladder
from .symbolic import FinitePath, paths_from

Window = tuple[int, ...]


@dataclass(frozen=True)
class Potential:
    depth: int
    rule: Callable[[Window], float] = field(compare=False, repr=False)
    bounds: tuple[float, float]
    nw_bounds: tuple[float, float]
    variations: tuple[float, ...] = ()
    truncation_error: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidInput("potential depth must be at least 1")
        if len(self.variations) != self.depth - 1:
            raise InvalidInput("need var_j for j = 1 .. depth-1")

    def __call__(self, window: Window) -> float:
        return self.rule(window)

    def scaled(self, beta: float) -> "Potential":
        """The potential beta * phi."""
        if beta == 1.0:
            return self
        base = self.rule

        def rule(w, _b=beta):
            return _b * base(w)

        def sc(lo, hi):
            a, b = beta * lo, beta * hi
            return (min(a, b), max(a, b))

        return Potential(self.depth, rule, sc(*self.bounds), sc(*self.nw_bounds),
                         tuple(abs(beta) * v for v in self.variations), abs(beta) * self.truncation_error,
                         f"{beta!r}*({self.description})")

    def shifted(self, c: float) -> "Potential":
        """The potential phi + c."""
        if c == 0.0:
            return self
        base = self.rule

        def rule(w, _c=c):
            return base(w) + _c

        return Potential(self.depth, rule, (self.bounds[0] + c, self.bounds[1] + c),
                         (self.nw_bounds[0] + c, self.nw_bounds[1] + c), self.variations,
                         self.truncation_error, f"({self.description})+{c!r}")

    def negated(self) -> "Potential":
        return self.scaled(-1.0)


def constant(value: float, truncation_error: float = 0.0) -> Potential:
    return Potential(1, lambda w, _v=float(value): _v, (value, value), (value, value), (),
                     truncation_error, f"const {value!r}")


def ladder_classes(t_up: float, t_down: float, truncation_error: float = 0.0) -> Potential:
    """Depth-1 potential on the Ladder: t_up on every u-edge, t_down on every d-edge."""

    def rule(w, _u=float(t_up), _d=float(t_down)):
        return _u if w[0] % 2 == 0 else _d

    b = (min(t_up, t_down), max(t_up, t_down))
    return Potential(1, rule, b, b, (), truncation_error, f"ladder up={t_up!r} down={t_down!r}")


def core_rays(g: CoreWithInwardRays, core_values: Mapping[int, float] | float,
              ray_values: Sequence[float], truncation_error: float = 0.0) -> Potential:
    """Depth-1 potential on a core with inward rays.

    ``core_values`` maps core edge ids to values (or is one value for all core
    edges). The edge leaving level n of any ray gets ``ray_values[n-1]``; the
    last entry is repeated beyond the list.
    """
    if not ray_values:
        raise InvalidInput("need at least one ray value")
    core_ids = [e for e, _, _ in g.core.edges]
    if isinstance(core_values, Mapping):
        table = {int(e): float(v) for e, v in core_values.items()}
        missing = [e for e in core_ids if e not in table]
        if missing:
            raise InvalidInput(f"core edges without a value: {missing}")
    else:
        table = {e: float(core_values) for e in core_ids}
    rays = tuple(float(v) for v in ray_values)

    def rule(w, _t=table, _r=rays, _g=g):
        level = _g.ray_edge_level(w[0])
        if level is None:
            return _t[w[0]]
        return _r[min(level, len(_r)) - 1]

    core_b = (min(table.values()), max(table.values()))
    all_b = (min(core_b[0], min(rays)), max(core_b[1], max(rays)))
    return Potential(1, rule, all_b, core_b, (), truncation_error, f"core {table} rays {list(rays)}")


def table(g: ExplicitFinite, depth: int, values: Mapping[Window, float], truncation_error: float = 0.0) -> Potential:
    """Explicit table on a finite graph, keyed by windows of ``depth`` edge ids."""
    if not isinstance(g, ExplicitFinite):
        raise InvalidInput("table potentials need an explicit finite graph")
    vals = {tuple(int(e) for e in k): float(v) for k, v in values.items()}
    windows = [p for v in g.vertices() for p in paths_from(g, v, depth)]
    keys = {p.edges for p in windows}
    missing = [k for k in keys if k not in vals]
    if missing:
        raise InvalidInput(f"table misses {len(missing)} windows, e.g. {sorted(missing)[0]}")
    extra = [k for k in vals if k not in keys]
    if extra:
        raise InvalidInput(f"table has entries that are not paths, e.g. {sorted(extra)[0]}")
    if any(not math.isfinite(v) for v in vals.values()):
        raise InvalidInput("potential values must be finite")

    variations = []
    for j in range(1, depth):
        spread: dict[Window, list[float]] = {}
        for k, v in vals.items():
            spread.setdefault(k[:j], []).append(v)
        variations.append(max(max(s) - min(s) for s in spread.values()))

    nw = g.nonwandering()
    nw_vals = [vals[p.edges] for p in windows if all(v in nw.vertices for v in p.vertices)]
    bounds = (min(vals.values()), max(vals.values()))
    nw_bounds = (min(nw_vals), max(nw_vals)) if nw_vals else bounds

    def rule(w, _t=vals):
        return _t[w]

    return Potential(depth, rule, bounds, nw_bounds, tuple(variations), truncation_error, f"table depth {depth}")


def birkhoff(phi: Potential, path: FinitePath | Window, n: int) -> float:
    """phi_n on the cylinder of ``path``: sum of phi over the first n shifts."""
    edges = path.edges if isinstance(path, FinitePath) else tuple(path)
    if n < 0:
        raise InvalidInput("n must be non-negative")
    if n == 0:
        return 0.0
    k = phi.depth
    if len(edges) < n + k - 1:
        raise Refused("INSUFFICIENT_DEPTH", f"need {n + k - 1} edges, path has {len(edges)}")
    return math.fsum(phi(edges[j:j + k]) for j in range(n))


def variation(phi: Potential, j: int) -> float:
    if j < 1:
        raise InvalidInput("variation index starts at 1")
    return phi.variations[j - 1] if j < phi.depth else 0.0


@dataclass(frozen=True)
class BowenReport:
    holds: bool
    constant: float


def bowen_check(phi: Potential, g: GraphModel | None = None) -> BowenReport:
    # For a depth-k potential only the last k-1 summands of two Birkhoff sums over
    # a shared prefix can differ, and those differ by at most var_1 + ... + var_{k-1}.
    return BowenReport(True, math.fsum(phi.variations))


def potential_on(g: GraphModel, kind: str, **params) -> Potential:
    """Dispatch a family rule by name; used by the JSON loader."""
    if kind == "constant":
        return constant(params["value"], params.get("truncation_error", 0.0))
    if kind == "ladder_classes":
        if not isinstance(g, Ladder):
            raise InvalidInput("ladder_classes needs the ladder graph")
        return ladder_classes(params["up"], params["down"], params.get("truncation_error", 0.0))
    if kind == "core_rays":
        if not isinstance(g, CoreWithInwardRays):
            raise InvalidInput("core_rays needs a core_with_inward_rays graph")
        return core_rays(g, params["core"], params["rays"], params.get("truncation_error", 0.0))
    raise InvalidInput(f"unknown potential rule {kind!r}")
