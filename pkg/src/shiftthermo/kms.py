"""Inverse temperatures carrying gauge-invariant KMS weights.

These are the beta for which a beta*phi-conformal measure exists, so the
region is read off the map beta -> P(-beta phi) according to the shape of the
non-wandering set: empty (every beta), finite (the zeros of the core pressure)
or infinite (a closed half-line starting at the first zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .config import settings
from .conformal import ConformalResult, construct_limit, extend_from_core
from .errors import InvalidInput, Refused
from .graph_model import EMPTY, FINITE, INFINITE, GraphModel
from .potential import Potential
from .pressure import PressureEstimate, core_pressure, pressure_estimate
from .symbolic import CylinderFunction

ALL_REAL = "ALL_REAL"
SINGLETON = "SINGLETON"
HALF_LINE = "HALF_LINE"
EMPTY_REGION = "EMPTY"
UNBOUNDED_NONE = "UNBOUNDED_NONE"


@dataclass
class KmsRegion:
    case_tag: str
    region: str
    beta0_lo: float | None = None
    beta0_hi: float | None = None
    samples: list = field(default_factory=list)   # (beta, lo, est, hi)
    searched: tuple[float, float] | None = None

    @property
    def beta0(self) -> float | None:
        if self.beta0_lo is None:
            return None
        return 0.5 * (self.beta0_lo + self.beta0_hi)

    def contains(self, beta: float) -> bool:
        if self.region == ALL_REAL:
            return True
        if self.region == HALF_LINE:
            return beta >= self.beta0_lo
        if self.region == SINGLETON:
            return self.beta0_lo <= beta <= self.beta0_hi
        return False

    def to_json(self) -> dict:
        return {
            "case": self.case_tag,
            "region": self.region,
            "beta0_lo": self.beta0_lo,
            "beta0_hi": self.beta0_hi,
            "samples": [{"beta": b, "p_lo": lo, "p_est": p, "p_hi": hi} for b, lo, p, hi in self.samples],
        }


def _finite(x: float) -> float | None:
    return x if math.isfinite(x) else None


def kms_region(phi: Potential, g: GraphModel, tol: float | None = None, N: int | None = None) -> KmsRegion:
    cfg = settings()
    tol = cfg["tol"] if tol is None else tol
    N = cfg["N"] if N is None else N
    report = g.nonwandering()
    a, b = phi.nw_bounds
    if report.case_tag == EMPTY:
        return KmsRegion(EMPTY, ALL_REAL)
    if report.case_tag == FINITE:
        return _finite_case(phi, g, tol, a, b)
    if a <= 0 or not math.isfinite(b):
        raise Refused("UNBOUNDED_POTENTIAL", f"phi ranges over [{a}, {b}] on NW_G")
    return _half_line(phi, g, tol, N, a, b)


def _finite_case(phi, g, tol, a, b) -> KmsRegion:
    samples = []

    def P(beta):
        v = core_pressure(phi.scaled(-beta), g)
        samples.append((beta, v, v, v))
        return v

    if a == b == 0:
        # phi vanishes on the core, so P(-beta phi) = P(0) for every beta.
        p0 = P(0.0)
        if abs(p0) <= settings()["core_pressure_tol"]:
            return KmsRegion(FINITE, ALL_REAL, None, None, sorted(samples), None)
        return KmsRegion(FINITE, EMPTY_REGION, None, None, sorted(samples), None)
    if a > 0:
        p0 = P(0.0)
        if p0 <= 0:
            # A single cycle: the pressure vanishes at beta = 0 and decreases afterwards.
            return KmsRegion(FINITE, SINGLETON, 0.0, 0.0, sorted(samples), (0.0, 0.0))
        lo, hi = p0 / b, p0 / a
    else:
        # No sign information: scan for a sign change.
        grid = [i * 0.5 for i in range(-100, 101)]
        vals = [P(x) for x in grid]
        lo = hi = None
        for x1, v1, x2, v2 in zip(grid, vals, grid[1:], vals[1:]):
            if v1 == 0:
                lo = hi = x1
                break
            if v1 * v2 < 0:
                lo, hi = x1, x2
                break
        if lo is None:
            return KmsRegion(FINITE, EMPTY_REGION, None, None, sorted(samples), (grid[0], grid[-1]))
    if hi > lo:
        root = brentq(P, lo, hi, xtol=tol * 1e-3, rtol=1e-14)
    else:
        root = lo
    half = max(tol * 1e-3, 1e-12)
    return KmsRegion(FINITE, SINGLETON, root - half, root + half, sorted(samples), (lo, hi))


def _half_line(phi, g, tol, N, a, b) -> KmsRegion:
    samples = []

    def P(beta) -> PressureEstimate:
        est = pressure_estimate(phi.scaled(-beta), g, N)
        samples.append((beta, est.lo, est.point_value, est.hi))
        return est

    p0 = P(0.0)
    if math.isinf(p0.hi) and p0.hi > 0:
        return KmsRegion(INFINITE, UNBOUNDED_NONE, math.inf, math.inf, samples)
    # P(0) - beta b <= P(-beta phi) <= P(0) - beta a brackets the first zero.
    lo, hi = max(p0.lo, 0.0) / b, max(p0.hi, 0.0) / a
    searched = (lo, hi)
    width = 0.0
    while hi - lo > tol / 4:
        mid = 0.5 * (lo + hi)
        est = P(mid)
        width = max(width, est.half_width)
        if est.point_value > 0:
            lo = mid
        else:
            hi = mid
    # Fold the pressure error bars into the bracket through the Lipschitz bound.
    pad = width / a
    return KmsRegion(INFINITE, HALF_LINE, max(lo - pad, 0.0), hi + pad, sorted(samples), searched)


def kms_certificate(region: KmsRegion, phi: Potential, beta: float, g: GraphModel,
                    h: CylinderFunction | None = None, depth: int | None = None) -> ConformalResult:
    """A beta*phi-conformal measure witnessing a KMS weight at this beta."""
    if not region.contains(beta):
        raise Refused("WRONG_CASE", f"beta = {beta} lies outside the {region.region} region")
    h = CylinderFunction.vertex_indicator(g.reference_vertex()) if h is None else h
    if region.case_tag == FINITE:
        return extend_from_core(g, phi, beta, depth=depth)
    if region.case_tag in (EMPTY, INFINITE):
        return construct_limit(phi, beta, g, h, depth=depth)
    raise InvalidInput(f"unknown case {region.case_tag}")
