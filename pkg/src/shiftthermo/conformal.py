"""Conformal measures.

Three routes are implemented:

* ratio limits  m(Z(mu)) = lim_k sum_n L^n(1_{Z(mu)})(x_k) / sum_n L^n(h)(x_k)
  along escaping points x_k, valid while the pressure of the weight is negative;
* the same at zero pressure through the regularised weights -beta*phi - eps,
  extrapolated to eps = 0;
* for a finite non-wandering core, the Perron eigenvector on the core pulled
  back level by level along the inward part of the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import settings
from .errors import InvalidInput, Refused
from .graph_model import FINITE, GraphModel
from .potential import Potential
from .pressure import PressureEstimate, nw_transfer_matrix, pressure_estimate
from .symbolic import BasePoint, CylinderFunction, CylinderMeasure, FinitePath, paths_from
from .transfer import TransferEngine, series


@dataclass
class DivergingSequence:
    points: list[BasePoint]
    witnesses: list[tuple[int, FinitePath]]  # (n_k, path u_k in supp h with sigma^{n_k} = x_k)
    escape: list[int]                        # s(x_k)


@dataclass
class ResidualReport:
    max_rel: float
    mean_rel: float
    checked: int
    worst: FinitePath | None = None
    additivity: float = 0.0


@dataclass
class ConformalResult:
    measure: CylinderMeasure
    beta: float
    target: str
    params: dict
    residual: ResidualReport | None = None
    pressure: PressureEstimate | None = None
    spread: dict = field(default_factory=dict)   # path -> relative spread (k-tail or eps extrapolation)
    tail_bound: float = 0.0
    normalization: float = 1.0


def _support_key(h: CylinderFunction) -> FinitePath:
    if not h.terms or not h.is_nonnegative():
        raise InvalidInput("h must be nonnegative and nonzero")
    return next(iter(h.terms))


def diverging_sequence(g: GraphModel, h: CylinderFunction, count: int) -> DivergingSequence:
    """Escaping base points reachable from supp h, with their witness paths."""
    if count < 1:
        raise InvalidInput("count must be positive")
    mu = _support_key(h)
    g.escape_chain(mu.range, 1)  # refuses for families without escaping orbits
    pts, wits, esc = [], [], []
    for k in range(1, count + 1):
        chain = FinitePath.from_edges(g, mu.edges + g.escape_chain(mu.range, k), start=mu.source)
        x = BasePoint(g, chain.range)
        pts.append(x)
        wits.append((len(chain), chain))
        esc.append(chain.range)
    return DivergingSequence(pts, wits, esc)


def region_cylinders(g: GraphModel, roots, depth: int) -> list[FinitePath]:
    out = []
    for v in roots:
        for j in range(depth + 1):
            out.extend(paths_from(g, v, j))
    return sorted(set(out), key=lambda p: (len(p), p))


def _default_count(g: GraphModel, roots, depth: int) -> int:
    return max(abs(v) for v in roots) + depth + 6


def construct_fixed(psi: Potential, g: GraphModel, h: CylinderFunction, seq: DivergingSequence | None = None,
                    depth: int | None = None, roots=None, k_tail: int | None = None,
                    pressure: PressureEstimate | None = None) -> ConformalResult:
    """Ratio-limit measure for a weight psi with P(psi) < 0.

    The result m satisfies L*_psi m = m, i.e. it is (-psi)-conformal.
    """
    cfg = settings()
    depth = cfg["D"] if depth is None else depth
    k_tail = cfg["k_tail"] if k_tail is None else k_tail
    roots = tuple(g.default_roots() if roots is None else roots)
    P = pressure_estimate(psi, g) if pressure is None else pressure
    if P.hi >= 0:
        raise Refused("NONNEGATIVE_PRESSURE", f"P(psi) <= {P.hi:.6g} is not certified negative")
    if seq is None:
        seq = diverging_sequence(g, h, _default_count(g, roots, depth))
    cyls = region_cylinders(g, roots, depth)
    funcs = [h] + [CylinderFunction.indicator(p) for p in cyls]
    ratios = []
    tail = 0.0
    for x in seq.points[-k_tail:]:
        res = series(psi, g, funcs, x)
        if not np.isfinite(res.log_values[0]):
            raise Refused("UNSTABLE_LIMIT", "the normalising series vanishes at a sequence point")
        ratios.append(res.log_values[1:] - res.log_values[0])
        tail = max(tail, res.rel_tail)
    R = np.array(ratios)
    last = R[-1]
    spread = {}
    worst = 0.0
    for j, p in enumerate(cyls):
        col = R[:, j]
        if np.all(~np.isfinite(col)):
            spread[p] = 0.0
            continue
        s = float(np.max(np.abs(np.expm1(col - last[j])))) if np.isfinite(last[j]) else math.inf
        spread[p] = s
        worst = max(worst, s)
    if worst > cfg["ratio_spread_tol"]:
        raise Refused("UNSTABLE_LIMIT", f"ratio spread {worst:.3g} over the last {k_tail} points")
    m = CylinderMeasure(depth, {p: float(last[j]) for j, p in enumerate(cyls)}, None)
    norm = _normalization(m, h)
    if norm is not None and norm > 0:
        m = m.scaled(-math.log(norm))
    res = ConformalResult(m, 1.0, f"-({psi.description})", {
        "depth": depth, "roots": list(roots), "points": [x.start for x in seq.points[-k_tail:]],
    }, pressure=P, spread=spread, tail_bound=tail, normalization=1.0)
    res.residual = verify(m, psi.negated(), 1.0, g)
    return res


def _normalization(m: CylinderMeasure, h: CylinderFunction) -> float | None:
    try:
        return m.integrate(h)
    except InvalidInput:
        return None


def _lagrange_at_zero(eps: np.ndarray) -> np.ndarray:
    """Weights c_i with sum_i c_i f(eps_i) = interpolating polynomial at 0."""
    c = np.ones(len(eps))
    for i in range(len(eps)):
        for j in range(len(eps)):
            if i != j:
                c[i] *= eps[j] / (eps[j] - eps[i])
    return c


def construct_limit(phi: Potential, beta: float, g: GraphModel, h: CylinderFunction,
                    eps_schedule=None, depth: int | None = None, roots=None) -> ConformalResult:
    """A beta*phi-conformal measure at P(-beta phi) <= 0 via eps-regularised weights."""
    cfg = settings()
    eps = sorted((float(e) for e in (cfg["eps_schedule"] if eps_schedule is None else eps_schedule)), reverse=True)
    if len(eps) < 2 or eps[-1] <= 0:
        raise InvalidInput("eps schedule needs at least two positive values")
    depth = cfg["D"] if depth is None else depth
    roots = tuple(g.default_roots() if roots is None else roots)
    base = phi.scaled(-beta)
    P = pressure_estimate(base, g)
    if P.lo > 0:
        raise Refused("PRESSURE_POSITIVE", f"P(-beta phi) >= {P.lo:.6g} > 0")
    seq = diverging_sequence(g, h, _default_count(g, roots, depth))
    runs = []
    for e in eps:
        shifted = PressureEstimate(P.point_value - e, P.lo - e, P.hi - e, [], P.method)
        runs.append(construct_fixed(base.shifted(-e), g, h, seq, depth, roots, pressure=shifted))
    use = eps[-3:]
    c = _lagrange_at_zero(np.array(use))
    c_lin = _lagrange_at_zero(np.array(use[-2:]))
    ms = [r.measure for r in runs[-3:]]
    vals, spread = {}, {}
    for p in ms[0].log_values:
        v = np.array([math.exp(m.log_values[p]) for m in ms])
        ext = float(c @ v)
        lin = float(c_lin @ v[-2:])
        if ext <= 0:
            ext = float(v[-1])
            spread[p] = math.inf
        else:
            spread[p] = abs(ext - lin) / ext
        vals[p] = math.log(ext) if ext > 0 else -math.inf
    m = CylinderMeasure(depth, vals, None)
    norm = _normalization(m, h)
    if norm is not None and norm > 0:
        m = m.scaled(-math.log(norm))
    res = ConformalResult(m, beta, phi.description, {
        "depth": depth, "roots": list(roots), "eps_schedule": eps,
    }, pressure=P, spread=spread, tail_bound=max(r.tail_bound for r in runs))
    res.residual = verify(m, phi, beta, g)
    return res


def eigenmeasure(phi: Potential, t: float, g: GraphModel, h: CylinderFunction,
                 depth: int | None = None, eps_schedule=None) -> ConformalResult:
    """A measure with L*_phi m = e^t m; exists exactly when t >= P(phi)."""
    P = pressure_estimate(phi, g)
    if t < P.lo:
        raise Refused("BELOW_THRESHOLD", f"t = {t:.6g} < P(phi) = {P.point_value:.6g}")
    # L*_phi m = e^t m  <=>  m is (t - phi)-conformal.
    chi = phi.negated().shifted(t)
    Pshift = PressureEstimate(P.point_value - t, P.lo - t, P.hi - t, [], P.method)
    if Pshift.hi < 0:
        res = construct_fixed(phi.shifted(-t), g, h, depth=depth, pressure=Pshift)
        res.target = chi.description
        res.residual = verify(res.measure, chi, 1.0, g)
    else:
        res = construct_limit(chi, 1.0, g, h, eps_schedule, depth)
    res.params["t"] = t
    return res


def verify(m: CylinderMeasure, phi: Potential, beta: float, g: GraphModel, d: int | None = None) -> ResidualReport:
    """Relative residuals of m(Z(e nu)) = e^{-beta phi(e nu)} m(Z(nu)) over stored cylinders."""
    d = m.depth - 1 if d is None else d
    k = phi.depth
    if d < k or m.depth < d + 1:
        raise Refused("DEPTH_MISMATCH", f"need potential depth {k} <= d = {d} < measure depth {m.depth}")
    rels = []
    worst, worst_p = 0.0, None
    for p, lv in m.log_values.items():
        if len(p) < k or len(p) > d + 1:
            continue
        nu = p.suffix(1)
        if nu not in m:
            continue
        pred = -beta * phi(p.edges[:k]) + m.log_values[nu]
        if lv == -math.inf:
            r = 0.0 if pred == -math.inf else math.inf
        else:
            r = abs(math.expm1(pred - lv))
        rels.append(r)
        if r > worst:
            worst, worst_p = r, p
    mean = float(np.mean(rels)) if rels else 0.0
    return ResidualReport(worst, mean, len(rels), worst_p, m.additivity_residual(g))


def extend_from_core(g: GraphModel, phi: Potential, beta: float, levels: int | None = None,
                     depth: int | None = None) -> ConformalResult:
    """The unique beta*phi-conformal measure when NW_G is finite and the core pressure is 0."""
    cfg = settings()
    depth = cfg["D"] if depth is None else depth
    report = g.nonwandering()
    if report.case_tag != FINITE:
        raise Refused("WRONG_CASE", f"NW_G is {report.case_tag}")
    levels = depth if levels is None else levels
    psi = phi.scaled(-beta)
    M, states = nw_transfer_matrix(psi, g)
    ev, vecs = np.linalg.eig(M)
    i = int(np.argmax(ev.real))
    rho = float(ev[i].real)
    if rho <= 0 or abs(math.log(rho)) > cfg["core_pressure_tol"]:
        p = math.log(rho) if rho > 0 else -math.inf
        raise Refused("PRESSURE_NOT_ZERO", f"core pressure P(-beta phi) = {p:.6g}")
    q = np.real(vecs[:, i])
    q = q * np.sign(q[np.argmax(np.abs(q))])
    if np.any(q <= 0):
        raise Refused("PRESSURE_NOT_ZERO", "core transfer matrix is not irreducible")
    eng = TransferEngine(psi, g)
    qmap = {s: float(q[j]) for j, s in enumerate(states)}

    def mass(s):
        # Pull back along out-edges; off the core every state moves towards it.
        stack = [s]
        while stack:
            top = stack[-1]
            if top in qmap:
                stack.pop()
                continue
            succ = eng.successors(top)
            todo = [t for t, _ in succ if t not in qmap]
            if todo:
                if len(stack) > 100000:
                    raise InvalidInput("state recursion does not reach the core")
                stack.extend(todo)
                continue
            qmap[top] = math.fsum(math.exp(lw) * qmap[t] for t, lw in succ)
            stack.pop()
        return qmap[s]

    H = g.h_filtration(levels)
    roots = sorted(H[levels])
    k, L = psi.depth, eng.L
    vals = {}
    for p in region_cylinders(g, roots, depth):
        if len(p) >= L:
            w = math.fsum(psi(p.edges[j:j + k]) for j in range(len(p) - L))
            val = math.exp(w) * mass(eng.state_of(p))
        else:
            val = math.fsum(mass(eng.state_of(ext)) for ext in paths_from(g, p.range, L - len(p))
                            for ext in [FinitePath(p.vertices + ext.vertices[1:], p.edges + ext.edges)])
        vals[p] = math.log(val) if val > 0 else -math.inf
    anchor = FinitePath.vertex(g.reference_vertex())
    m = CylinderMeasure(depth, vals, None)
    m = m.scaled(-m.log_values[anchor])
    res = ConformalResult(m, beta, phi.description, {"depth": depth, "levels": levels, "core_rho": rho})
    res.residual = verify(m, phi, beta, g)
    return res
