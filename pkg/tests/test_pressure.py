import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from shiftthermo.errors import Refused
from shiftthermo.oracle import perron
from shiftthermo.potential import constant
from shiftthermo.pressure import (
    core_pressure, estimate_from_logs, gurevich, nw_transfer_matrix, pointwise, pressure_estimate,
    pressure_of_beta, pressure_tsv,
)
from shiftthermo.symbolic import BasePoint, CylinderFunction, FinitePath

from conftest import LOG2, random_instance

GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def test_golden_mean_gurevich(golden):
    est = gurevich(constant(0.0), golden, FinitePath.vertex(0), 40)
    assert abs(est.point_value - GOLDEN) < 1e-6
    assert est.lo <= GOLDEN <= est.hi


def test_golden_core_pressure(golden):
    assert core_pressure(constant(0.0), golden) == pytest.approx(GOLDEN, abs=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0, 2.0])
def test_ladder_closed_form(ladder, beta):
    est = pressure_estimate(constant(LOG2).scaled(-beta), ladder, 60)
    assert est.point_value == pytest.approx((1 - beta) * LOG2, abs=1e-6)


def test_pointwise_matches_gurevich(ladder):
    phi = constant(-LOG2)
    est = pointwise(phi, ladder, BasePoint(ladder, 0, (), (1,)), CylinderFunction.vertex_indicator(0), 60)
    assert est.point_value == pytest.approx(0.0, abs=1e-6)


def test_empty_nonwandering(zray):
    assert pressure_estimate(constant(0.0), zray).point_value == -math.inf
    with pytest.raises(Refused):
        gurevich(constant(0.0), zray)


def test_periodic_sequence_estimate():
    # Z_n = 2^n on even n, 0 on odd n (period 2)
    ns = np.arange(1, 41)
    logs = np.where(ns % 2 == 0, ns * LOG2, -np.inf)
    est = estimate_from_logs(ns, logs, period=2)
    assert est.point_value == pytest.approx(LOG2, abs=1e-9)


def test_sandwich_on_ladder_classes(ladder, ladder_24):
    curve = pressure_of_beta(ladder_24, ladder, [0.5, 0.7, 1.0, 1.5], 60, threads=2)
    assert curve.sandwich_ok
    text = pressure_tsv(curve, 60)
    assert text.splitlines()[0] == "beta\tp_lo\tp_est\tp_hi\tN"
    assert len(text.splitlines()) == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_core_pressure_matches_power_iteration(seed):
    g, phi = random_instance(np.random.default_rng(seed))
    assume(g.nonwandering().vertices == frozenset(g.vertices()) and g.is_cofinal())
    M, _ = nw_transfer_matrix(phi, g)
    lr, _ = perron(M)
    assert core_pressure(phi, g) == pytest.approx(lr, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_full_shift_pressure_linear_in_beta(c, b1, db):
    """P(-beta phi) for phi = const c on the full two-shift is log 2 - beta c exactly."""
    from shiftthermo.graph_model import FullShift

    g = FullShift(2)
    b2 = b1 + db
    p1 = pressure_estimate(constant(c).scaled(-b1), g).point_value
    p2 = pressure_estimate(constant(c).scaled(-b2), g).point_value
    assert p1 - p2 == pytest.approx(db * c, abs=1e-9)
