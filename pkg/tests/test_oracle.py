import csv
import math

import pytest

from shiftthermo.oracle import moran_solve, perron, reference_table

from conftest import DATA


def _frozen():
    with open(DATA / "oracle_reference.tsv") as fh:
        return {(r["method"], r["instance"]): float(r["value"]) for r in csv.DictReader(fh, delimiter="\t")}


def test_reference_values_frozen():
    frozen = _frozen()
    fresh = {(r.method, r.instance): r.value for r in reference_table()}
    assert fresh.keys() == frozen.keys()
    for key, v in fresh.items():
        assert v == pytest.approx(frozen[key], rel=1e-12, abs=1e-12), key


def test_frozen_values_against_hand_results():
    frozen = _frozen()
    fib = [1, 2, 3, 5]
    for n, z in enumerate(fib, start=1):
        assert frozen[("enumerate_periodic", f"golden_mean Z_{n} through [0]")] == z
    assert frozen[("enumerate_periodic", "golden_mean Z_2 all points")] == 3
    assert frozen[("perron", "golden_mean log radius")] == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)
    assert frozen[("moran", "2^-b + 4^-b = 1")] == pytest.approx(math.log2((1 + math.sqrt(5)) / 2), abs=1e-10)


def test_perron_periodic_matrix():
    lr, v = perron([[0.0, 1.0], [1.0, 0.0]])
    assert lr == pytest.approx(0.0, abs=1e-12)
    assert v == pytest.approx([0.5, 0.5])


def test_moran_needs_two_rates():
    with pytest.raises(ValueError):
        moran_solve([1.0])
