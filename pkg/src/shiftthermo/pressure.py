"""Gurevich and pointwise pressure, and the map beta -> P(-beta phi)."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import settings
from .errors import InvalidInput, Refused
from .graph_model import FINITE, GraphModel
from .potential import Potential
from .symbolic import BasePoint, CylinderFunction, FinitePath, paths_from
from .transfer import TransferEngine, orbit_log_sums, pointwise_iterates

INF = math.inf


@dataclass
class PressureEstimate:
    point_value: float
    lo: float
    hi: float
    sequence: list = field(default_factory=list)  # (n, a_n) pairs, a_n = log(value)/n
    method: str = ""

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    def as_row(self) -> tuple[float, float, float]:
        return self.lo, self.point_value, self.hi


def _fit_slope(ns: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Slope of y ~ p n + alpha log n + c, and the largest fit residual."""
    A = np.column_stack([ns, np.log(ns), np.ones_like(ns)])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = float(np.max(np.abs(A @ coef - ys)))
    return float(coef[0]), resid


def estimate_from_logs(ns, logs, period: int = 1, truncation_error: float = 0.0,
                       method: str = "") -> PressureEstimate:
    """Growth rate of a sequence of logs of positive quantities (log 0 = -inf).

    Uses the tail [ceil(N/2), N] restricted to the residue class of the last
    nonzero term, so sequences supported on multiples of a period still work.
    The rate is a least-squares fit of log V_n against (n, log n, 1), which
    removes polynomial prefactors; the half-width is the disagreement with the
    plain secant over the same tail plus the fit residual.
    """
    ns = np.asarray(ns, dtype=float)
    logs = np.asarray(logs, dtype=float)
    seq = [(int(n), (float(v) / n if n > 0 else float(v))) for n, v in zip(ns, logs)]
    N = int(ns.max())
    tail = ns >= math.ceil(N / 2)
    ok = tail & np.isfinite(logs)
    if not ok.any():
        if np.isposinf(logs).any():
            return PressureEstimate(INF, INF, INF, seq, method)
        return PressureEstimate(-INF, -INF, -INF, seq, method)
    n_last = ns[ok].max()
    p = max(period, 1)
    sel = ok & (np.mod(n_last - ns, p) == 0)
    tn, ty = ns[sel], logs[sel]
    if len(tn) == 1:
        # A single usable term: fall back to the normalized value with an O(1/n) band.
        v = float(ty[0] / tn[0])
        hw = abs(v) + 1.0 / tn[0]
        return PressureEstimate(v, v - hw - truncation_error, v + hw + truncation_error, seq, method)
    secant = float((ty[-1] - ty[0]) / (tn[-1] - tn[0]))
    if len(tn) >= 6:
        slope, resid = _fit_slope(tn, ty)
        hw = abs(slope - secant) + 2.0 * resid / (tn[-1] - tn[0])
    else:
        slope = secant
        mid = len(tn) // 2
        early = (ty[mid] - ty[0]) / max(tn[mid] - tn[0], 1)
        late = (ty[-1] - ty[mid]) / max(tn[-1] - tn[mid], 1)
        hw = abs(late - early)
    hw += 1e-9 * (1.0 + abs(slope)) + truncation_error
    return PressureEstimate(slope, slope - hw, slope + hw, seq, method)


def gurevich(phi: Potential, g: GraphModel, mu: FinitePath | None = None, N: int | None = None) -> PressureEstimate:
    """Gurevich pressure from weighted periodic-orbit sums through Z(mu).

    ``mu`` defaults to the reference vertex of the non-wandering set;
    ``mu=None`` with a finite graph counts every periodic point.
    """
    N = settings()["N"] if N is None else N
    if N < 4:
        raise InvalidInput("N must be at least 4")
    report = g.nonwandering()
    if report.empty:
        raise Refused("EMPTY_NW", "the graph has no cycles")
    logs = orbit_log_sums(phi, g, mu, N)
    if not np.isfinite(logs).any():
        raise Refused("EMPTY_NW", "no periodic orbit meets the cylinder")
    est = estimate_from_logs(np.arange(1, N + 1), logs, report.period or 1, phi.truncation_error, "gurevich")
    return est


def pointwise(phi: Potential, g: GraphModel, x: BasePoint, f: CylinderFunction, N: int | None = None) -> PressureEstimate:
    """Growth rate of L^n_phi(f)(x)."""
    N = settings()["N"] if N is None else N
    if not f.terms or not f.is_nonnegative():
        raise InvalidInput("f must be nonnegative and nonzero")
    signs, logs = pointwise_iterates(phi, g, f, x, N)
    ns = np.arange(1, N + 1)
    report = g.nonwandering()
    period = report.period or 1
    return estimate_from_logs(ns, logs[1:], period, phi.truncation_error, "pointwise")


def core_pressure(phi: Potential, g: GraphModel) -> float:
    """Exact P(phi) for a finite non-wandering set: log spectral radius of its transfer matrix."""
    report = g.nonwandering()
    if report.case_tag != FINITE:
        raise Refused("WRONG_CASE", f"NW_G is {report.case_tag}")
    M, _ = nw_transfer_matrix(phi, g)
    if M.size == 0:
        return -INF
    ev = np.linalg.eigvals(M)
    return math.log(float(np.max(np.abs(ev))))


def nw_transfer_matrix(phi: Potential, g: GraphModel):
    """Dense transfer matrix on the (k-1)-edge states inside the finite NW_G.

    Entry [s, t] is e^{phi(window)} for the transition s -> t. Returns the
    matrix and the ordered state list.
    """
    report = g.nonwandering()
    nw = report.vertices
    eng = TransferEngine(phi, g)
    if eng.L == 0:
        states = sorted(nw)
    else:
        states = sorted({p.edges for v in sorted(nw) for p in paths_from(g, v, eng.L)
                         if all(u in nw for u in p.vertices)})
    index = {s: i for i, s in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        for t, lw in eng.successors(s):
            j = index.get(t)
            if j is not None:
                M[i, j] += math.exp(lw)
    return M, states


def _pressure_at(args):
    phi, g, beta, N, mu = args
    return pressure_estimate(phi.scaled(-beta), g, N, mu)


def pressure_estimate(psi: Potential, g: GraphModel, N: int | None = None,
                      mu: FinitePath | None = None) -> PressureEstimate:
    """P(psi): exact on a finite core, Gurevich estimate otherwise, -inf without cycles."""
    N = settings()["N"] if N is None else N
    report = g.nonwandering()
    if report.empty:
        return PressureEstimate(-INF, -INF, -INF, [], "empty")
    if report.case_tag == FINITE and mu is None:
        v = core_pressure(psi, g)
        tw = psi.truncation_error
        return PressureEstimate(v, v - tw, v + tw, [], "core")
    mu = FinitePath.vertex(g.reference_vertex()) if mu is None else mu
    return gurevich(psi, g, mu, N)


@dataclass
class PressureCurve:
    points: list  # (beta, PressureEstimate)
    sandwich_ok: bool
    sandwich_violations: list


def pressure_of_beta(phi: Potential, g: GraphModel, betas, N: int | None = None,
                     mu: FinitePath | None = None, threads: int = 1) -> PressureCurve:
    """P(-beta phi) over a grid, with the Lipschitz sandwich checked between neighbours."""
    N = settings()["N"] if N is None else N
    betas = sorted(float(b) for b in betas)
    jobs = [(phi, g, b, N, mu) for b in betas]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            ests = list(ex.map(_pressure_at, jobs))
    else:
        ests = [_pressure_at(j) for j in jobs]
    a, b = phi.nw_bounds
    bad = []
    for (b1, e1), (b2, e2) in zip(zip(betas, ests), zip(betas[1:], ests[1:])):
        if not (math.isfinite(e1.point_value) and math.isfinite(e2.point_value)):
            continue
        diff = e1.point_value - e2.point_value
        slack = e1.half_width + e2.half_width + 1e-12
        if not ((b2 - b1) * a - slack <= diff <= (b2 - b1) * b + slack):
            bad.append((b1, b2, diff))
    return PressureCurve(list(zip(betas, ests)), not bad, bad)


def pressure_tsv(curve: PressureCurve, N: int) -> str:
    lines = ["beta\tp_lo\tp_est\tp_hi\tN"]
    for beta, est in curve.points:
        lines.append(f"{beta:.15g}\t{est.lo:.15g}\t{est.point_value:.15g}\t{est.hi:.15g}\t{N}")
    return "\n".join(lines) + "\n"
