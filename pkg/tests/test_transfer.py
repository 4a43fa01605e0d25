import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftthermo.errors import Refused
from shiftthermo.oracle import enumerate_Ln, enumerate_periodic
from shiftthermo.potential import constant
from shiftthermo.symbolic import BasePoint, CylinderFunction, FinitePath, paths_from
from shiftthermo.transfer import apply_functional, apply_pointwise, orbit_log_sums, pointwise_iterates, series

from conftest import random_instance


def _random_f(rng, g, depth):
    ps = [p for v in g.vertices() for p in paths_from(g, v, depth)] if depth else [
        FinitePath.vertex(v) for v in g.vertices()]
    chosen = rng.choice(len(ps), size=min(len(ps), 3), replace=False)
    return CylinderFunction(depth, {ps[i]: float(rng.uniform(0.1, 2.0)) for i in chosen})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_iterates_match_enumeration(seed, n):
    rng = np.random.default_rng(seed)
    g, phi = random_instance(rng)
    f = _random_f(rng, g, int(rng.integers(0, 3)))
    x = BasePoint(g, int(rng.choice(g.vertices())))
    want = enumerate_Ln(phi, g, f, x, n)
    got = apply_pointwise(phi, g, f, x, n)
    assert got == pytest.approx(want, rel=1e-10, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_periodic_sums_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    g, phi = random_instance(rng)
    mu_len = int(rng.integers(0, 3))
    starts = paths_from(g, int(rng.choice(g.vertices())), mu_len)
    mu = starts[int(rng.integers(len(starts)))]
    logs = orbit_log_sums(phi, g, mu, 7)
    for n in range(1, 8):
        want = enumerate_periodic(phi, g, mu, n)
        got = math.exp(logs[n - 1]) if np.isfinite(logs[n - 1]) else 0.0
        assert got == pytest.approx(want, rel=1e-10, abs=1e-300)


def test_signed_functions_split_cleanly(golden):
    phi = constant(0.0)
    x = BasePoint(golden, 0)
    f = CylinderFunction(0, {FinitePath.vertex(0): 1.0, FinitePath.vertex(1): -1.0})
    for n in range(5):
        assert apply_pointwise(phi, golden, f, x, n) == pytest.approx(enumerate_Ln(phi, golden, f, x, n))
    neg = f.scale(-1.0)
    signs, _ = pointwise_iterates(phi, golden, neg, x, 3)
    assert signs[0] == -1.0


def test_ladder_iterates_closed_form(ladder):
    # weight 1/4 per edge: L^n 1_[0] at the d_0 loop is 2^{-n-1} for n >= 1
    phi = constant(-2 * math.log(2))
    x = BasePoint(ladder, 0, (), (1,))
    _, logs = pointwise_iterates(phi, ladder, CylinderFunction.vertex_indicator(0), x, 30)
    for n in range(1, 31):
        assert logs[n] == pytest.approx(-(n + 1) * math.log(2), rel=1e-12)


def test_apply_functional(golden):
    phi = constant(math.log(3))
    f = CylinderFunction.vertex_indicator(0).refine(golden, 1)
    Lf = apply_functional(phi, golden, f)
    assert Lf.depth == 0
    # L 1_[0](y) sums over preimages starting at 0: two for y at 0, one for y at 1
    assert Lf.terms[FinitePath.vertex(0)] == pytest.approx(3.0)
    assert Lf.terms[FinitePath.vertex(1)] == pytest.approx(3.0)
    with pytest.raises(Refused):
        apply_functional(phi, golden, CylinderFunction.vertex_indicator(0))


def test_series_geometric(ladder):
    phi = constant(-2 * math.log(2))
    res = series(phi, ladder, [CylinderFunction.vertex_indicator(0)], BasePoint(ladder, 0, (), (1,)))
    # 1 + sum_{n>=1} 2^{-n-1} = 3/2
    assert res.converged
    assert math.exp(res.log_values[0]) == pytest.approx(1.5, rel=1e-12)
    assert res.ratio == pytest.approx(0.5, rel=1e-9)
