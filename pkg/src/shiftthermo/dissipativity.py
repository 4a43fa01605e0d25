"""Dissipativity certificates from negative pressure, with series diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import settings
from .graph_model import GraphModel
from .potential import Potential
from .pressure import PressureEstimate, pressure_estimate
from .symbolic import BasePoint, CylinderFunction
from .transfer import pointwise_iterates

CERTIFIED = "DISSIPATIVE_CERTIFIED"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class PointDiagnostics:
    point: str
    log_partial_sums: list[float]   # log S_n for n = 0..N
    decay_ratio: float              # geometric ratio of the terms over the last decade
    diverging: bool


@dataclass
class DissipativityReport:
    verdict: str
    pressure: PressureEstimate
    points: list[PointDiagnostics] = field(default_factory=list)

    @property
    def decay_ratio(self) -> float:
        return self.points[0].decay_ratio if self.points else math.nan


def dissipativity_test(phi: Potential, beta: float, g: GraphModel, f: CylinderFunction | None = None,
                       sample_points: list[BasePoint] | None = None, N: int | None = None) -> DissipativityReport:
    """Certify that every beta*phi-conformal measure is dissipative.

    The certificate is P(-beta phi) < 0 with its whole error bar. The partial
    sums of sum_n L^n_{-beta phi}(f)(x) are reported either way; bounded sums
    support the verdict but never replace it.
    """
    N = settings()["N"] if N is None else N
    ref = g.reference_vertex()
    f = CylinderFunction.vertex_indicator(ref) if f is None else f
    sample_points = [BasePoint(g, ref)] if sample_points is None else sample_points
    psi = phi.scaled(-beta)
    P = pressure_estimate(psi, g, N)
    diags = []
    for x in sample_points:
        _, logs = pointwise_iterates(psi, g, f, x, N)
        partial = np.logaddexp.accumulate(logs)
        ratio = math.nan
        fin = np.flatnonzero(np.isfinite(logs))
        if len(fin) >= 2:
            a, b = fin[0], fin[-1]
            # Skip the first decade when possible so start-up terms do not bias the ratio.
            lo = max(a, b - 10)
            if b > lo:
                ratio = math.exp((logs[b] - logs[lo]) / (b - lo))
        diags.append(PointDiagnostics(x.describe(), [float(v) for v in partial], ratio,
                                      bool(np.isfinite(ratio) and ratio >= 1.0)))
    verdict = CERTIFIED if P.hi < 0 else INCONCLUSIVE
    return DissipativityReport(verdict, P, diags)
