import math
from pathlib import Path

import numpy as np
import pytest

from shiftthermo.graph_model import CoreWithInwardRays, ExplicitFinite, FullShift, Ladder, ZRay
from shiftthermo.potential import constant, core_rays, ladder_classes, table
from shiftthermo.symbolic import paths_from

DATA = Path(__file__).parent / "data"
LOG2 = math.log(2)


@pytest.fixture
def golden():
    # 0 -> 0 (edge 0), 0 -> 1 (edge 1), 1 -> 0 (edge 2)
    return ExplicitFinite([(0, 0, 0), (1, 0, 1), (2, 1, 0)], {0: "a", 1: "b", 2: "c"})


@pytest.fixture
def ladder():
    return Ladder()


@pytest.fixture
def zray():
    return ZRay()


@pytest.fixture
def core_graph():
    return CoreWithInwardRays(loops=2, rays=1)


@pytest.fixture
def core_potential(core_graph):
    return core_rays(core_graph, LOG2, [1.0, 2.0])


@pytest.fixture
def const_log2():
    return constant(LOG2)


@pytest.fixture
def ladder_24():
    return ladder_classes(LOG2, math.log(4))


@pytest.fixture
def full_shift():
    return FullShift(2)


def random_instance(rng: np.random.Generator, max_vertices: int = 4, max_depth: int = 2):
    """A random sink-free finite graph and a table potential of depth <= max_depth."""
    nv = int(rng.integers(1, max_vertices + 1))
    edges = []
    for v in range(nv):
        for r in rng.choice(nv, size=int(rng.integers(1, 3)), replace=True):
            edges.append((len(edges), v, int(r)))
    g = ExplicitFinite(edges)
    depth = int(rng.integers(1, max_depth + 1))
    windows = [p.edges for v in g.vertices() for p in paths_from(g, v, depth)]
    values = {w: float(rng.uniform(-1.0, 1.0)) for w in windows}
    return g, table(g, depth, values)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
