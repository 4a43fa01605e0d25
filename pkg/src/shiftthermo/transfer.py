"""Ruelle transfer operator by dynamic programming over suffix states.

For a depth-k potential the weight of appending an edge depends only on the
last k-1 edges, so sums over preimage paths collapse to products of a sparse
transfer matrix indexed by (k-1)-edge states (vertices when k = 1). For
infinite families the matrix is materialised on the finite set of states a
bounded number of steps away from the seeds, which keeps every sum exact
within that step budget.

Magnitudes are carried as scaled vectors (mantissa array plus a log scale),
so quantities like Z_n never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import settings
from .errors import InvalidInput, Refused
from .graph_model import ExplicitFinite, GraphModel
from .potential import Potential
from .symbolic import BasePoint, CylinderFunction, FinitePath, paths_from

NEG_INF = -math.inf


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass
class Region:
    states: list
    index: dict
    matrix: sp.csr_matrix  # rows: from-state, columns: to-state, entries exp(logw - shift)
    shift: float
    steps: int


class TransferEngine:
    """Transfer matrix machinery for one potential on one graph."""

    def __init__(self, phi: Potential, g: GraphModel):
        self.phi = phi
        self.g = g
        self.L = phi.depth - 1
        self._succ: dict = {}

    # -- states ---------------------------------------------------------
    def state_of(self, p: FinitePath):
        if self.L == 0:
            return p.range
        if len(p) < self.L:
            raise InvalidInput("path shorter than the state length")
        return p.edges[len(p) - self.L:]

    def state_range(self, s) -> int:
        return s if self.L == 0 else self.g.range(s[-1])

    def all_states(self) -> list:
        if not isinstance(self.g, ExplicitFinite):
            raise InvalidInput("full state enumeration needs a finite graph")
        if self.L == 0:
            return list(self.g.vertices())
        return [p.edges for v in self.g.vertices() for p in paths_from(self.g, v, self.L)]

    def successors(self, s) -> list:
        out = self._succ.get(s)
        if out is None:
            out = []
            for e in self.g.out_edges(self.state_range(s)):
                if self.L == 0:
                    out.append((self.g.range(e), self.phi((e,))))
                else:
                    w = s + (e,)
                    out.append((w[1:], self.phi(w)))
            self._succ[s] = out
        return out

    def region(self, seeds, steps: int) -> Region:
        states, index, depth = [], {}, []
        for s in seeds:
            if s not in index:
                index[s] = len(states)
                states.append(s)
                depth.append(0)
        rows, cols, logs = [], [], []
        i = 0
        while i < len(states):
            s = states[i]
            if depth[i] < steps:
                for t, lw in self.successors(s):
                    j = index.get(t)
                    if j is None:
                        j = index[t] = len(states)
                        states.append(t)
                        depth.append(depth[i] + 1)
                    rows.append(i)
                    cols.append(j)
                    logs.append(lw)
            i += 1
        n = len(states)
        logs = np.asarray(logs, dtype=float)
        shift = float(logs.max()) if logs.size else 0.0
        mat = sp.csr_matrix((np.exp(logs - shift), (rows, cols)), shape=(n, n))
        mat.sum_duplicates()
        return Region(states, index, mat, shift, steps)

    # -- pieces of L^n f(x) -------------------------------------------------
    def initial_log_weight(self, p: FinitePath) -> float:
        """Sum of phi over the windows lying entirely inside p."""
        k = self.phi.depth
        return math.fsum(self.phi(p.edges[j:j + k]) for j in range(len(p) - k + 1))

    def terminal_log_weight(self, s, xe: tuple[int, ...]) -> float:
        """Windows that straddle the junction between a path ending in state s and x."""
        if self.L == 0:
            return 0.0
        return math.fsum(self.phi(s[q:] + xe[:q + 1]) for q in range(self.L))

    def direct_term(self, key: FinitePath, n: int, xe: tuple[int, ...]) -> float | None:
        """log e^{phi_n(key[:n] x)} when key[:n] x lies in Z(key), for n < |key|; None otherwise."""
        d = len(key)
        if key.edges[n:] != xe[:d - n]:
            return None
        y = key.edges[:n] + xe
        k = self.phi.depth
        return math.fsum(self.phi(y[j:j + k]) for j in range(n))

    def prepared(self, f: CylinderFunction) -> CylinderFunction:
        return f.refine(self.g, max(f.depth, self.L))


class _Backward:
    """u_m = M^m t_x on a region, with per-function term read-out v0_i . u_m."""

    def __init__(self, eng: TransferEngine, funcs: list[CylinderFunction], x: BasePoint, steps: int):
        self.eng = eng
        self.funcs = [eng.prepared(f) for f in funcs]
        self.depths = np.array([f.depth for f in self.funcs])
        seeds = []
        for f in self.funcs:
            seeds.extend(eng.state_of(p) for p in f.terms)
        self.region = reg = eng.region(seeds, steps)
        xe = x.edges(max(self.depths.max(), eng.L) + eng.L + 1)
        self.xe = xe
        t = np.full(len(reg.states), NEG_INF)
        for i, s in enumerate(reg.states):
            if eng.state_range(s) == x.start:
                t[i] = eng.terminal_log_weight(s, xe)
        tmax = t.max() if np.isfinite(t).any() else 0.0
        self.u = np.exp(t - tmax)
        self.u_log = float(tmax)
        # v0 rows: weight * e^{w0 - c_i}
        rows, cols, vals = [], [], []
        self.c = np.zeros(len(self.funcs))
        for i, f in enumerate(self.funcs):
            w0 = {p: eng.initial_log_weight(p) for p in f.terms}
            ci = max(w0.values()) if w0 else 0.0
            self.c[i] = ci
            for p, w in f.terms.items():
                rows.append(i)
                cols.append(reg.index[eng.state_of(p)])
                vals.append(w * math.exp(w0[p] - ci))
        self.v0 = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.funcs), len(reg.states)))
        self.m = 0

    def read(self) -> np.ndarray:
        """Signed term values as (mantissa, log-scale) collapsed to log|.| and sign arrays."""
        raw = self.v0 @ self.u
        return raw, self.u_log + self.c

    def step(self):
        reg = self.region
        self.u = reg.matrix @ self.u
        s = float(np.abs(self.u).max()) if self.u.size else 0.0
        if s > 0:
            self.u /= s
            self.u_log += math.log(s) + reg.shift
        else:
            self.u_log = NEG_INF
        self.m += 1

    def direct_terms(self, i: int, n: int) -> float:
        """Signed value of the n-th iterate for function i when n < its depth."""
        f = self.funcs[i]
        total = 0.0
        for p, w in f.terms.items():
            lv = self.eng.direct_term(p, n, self.xe)
            if lv is not None:
                total += w * math.exp(lv)
        return total


def pointwise_iterates(phi: Potential, g: GraphModel, f: CylinderFunction, x: BasePoint, N: int):
    """Signs and natural logs of |L^n f(x)| for n = 0..N."""
    if N < 0:
        raise InvalidInput("N must be non-negative")
    eng = TransferEngine(phi, g)
    pos = CylinderFunction(f.depth, {p: w for p, w in f.terms.items() if w > 0})
    neg = CylinderFunction(f.depth, {p: -w for p, w in f.terms.items() if w < 0})
    parts = [h for h in (pos, neg) if h.terms]
    signs = np.zeros(N + 1)
    logs = np.full(N + 1, NEG_INF)
    if not parts:
        return signs, logs
    bw = _Backward(eng, parts, x, max(N - int(max(max(h.depth, eng.L) for h in parts)), 0))
    per_part = []
    for i, h in enumerate(bw.funcs):
        arr = np.full(N + 1, NEG_INF)
        for n in range(min(h.depth, N + 1)):
            v = bw.direct_terms(i, n)
            arr[n] = math.log(v) if v > 0 else NEG_INF
        per_part.append(arr)
    for m in range(0, N + 1):
        raw, lg = bw.read()
        for i, h in enumerate(bw.funcs):
            n = h.depth + m
            if n <= N and raw[i] > 0:
                per_part[i][n] = math.log(raw[i]) + lg[i]
        if m < N:
            bw.step()
    empty = np.full(N + 1, NEG_INF)
    a = per_part[0] if pos.terms else empty
    b = per_part[-1] if neg.terms else empty
    for n in range(N + 1):
        la, lb = a[n], b[n]
        if la == lb:
            continue
        hi, lo = (la, lb) if la > lb else (lb, la)
        logs[n] = hi + math.log1p(-math.exp(lo - hi)) if lo > NEG_INF else hi
        signs[n] = 1.0 if la > lb else -1.0
    return signs, logs


def apply_pointwise(phi: Potential, g: GraphModel, f: CylinderFunction, x: BasePoint, n: int) -> float:
    """L^n_phi(f)(x)."""
    signs, logs = pointwise_iterates(phi, g, f, x, n)
    return float(signs[n] * math.exp(logs[n])) if signs[n] else 0.0


def apply_functional(phi: Potential, g: GraphModel, f: CylinderFunction) -> CylinderFunction:
    """L_phi f as a cylinder function of one smaller depth."""
    k = phi.depth
    if f.depth < max(k, 1):
        raise Refused("DEPTH_UNDERFLOW", f"refine f to depth >= {max(k, 1)} first")
    out: dict[FinitePath, float] = {}
    for p, w in f.terms.items():
        q = p.suffix(1)
        out[q] = out.get(q, 0.0) + w * math.exp(phi(p.edges[:k]))
    return CylinderFunction(f.depth - 1, out)


@dataclass
class SeriesResult:
    log_values: np.ndarray      # log sum_n L^n f_i(x); -inf when every term vanishes
    terms: int                  # number of iterates summed (max over functions)
    ratio: float                # last-decade geometric decay ratio of the first function
    rel_tail: float             # geometric tail bound relative to the partial sum (max over functions)
    converged: bool
    head_logs: np.ndarray       # log L^n f_0(x) for the first function, n = 0..terms


def series(phi: Potential, g: GraphModel, funcs: list[CylinderFunction], x: BasePoint,
           rel_tol: float | None = None, cap: int | None = None, window: int = 8) -> SeriesResult:
    """sum_{n >= 0} L^n_phi(f_i)(x) for nonnegative f_i, truncated adaptively.

    Stops once, for every function with a nonzero partial sum, the last
    ``window`` terms are below ``rel_tol`` of the partial sum.
    """
    cfg = settings()
    rel_tol = cfg["series_rel_tol"] if rel_tol is None else rel_tol
    cap = cfg["series_cap"] if cap is None else cap
    if any(not f.is_nonnegative() for f in funcs):
        raise InvalidInput("series needs nonnegative functions")
    eng = TransferEngine(phi, g)
    steps = 64
    while True:
        res = _series_run(eng, funcs, x, min(steps, cap), rel_tol, window)
        if res.converged or steps >= cap:
            return res
        steps *= 2


def _series_run(eng, funcs, x, steps, rel_tol, window):
    bw = _Backward(eng, funcs, x, steps)
    F = len(bw.funcs)
    partial = np.full(F, NEG_INF)
    head = []
    small = np.zeros(F, dtype=int)
    last_new = 0
    hist = []
    # direct terms n < depth
    for i, h in enumerate(bw.funcs):
        for n in range(h.depth):
            v = bw.direct_terms(i, n)
            if v > 0:
                partial[i] = np.logaddexp(partial[i], math.log(v))
            if i == 0:
                head.append(math.log(v) if v > 0 else NEG_INF)
    converged = False
    m = 0
    while True:
        raw, lg = bw.read()
        tl = np.where(raw > 0, _log(np.where(raw > 0, raw, 1.0)) + lg, NEG_INF)
        if bw.funcs[0].depth + m == len(head):
            head.append(float(tl[0]))
        hist.append(tl)
        was_zero = ~np.isfinite(partial)
        partial = np.logaddexp(partial, tl)
        if np.any(was_zero & np.isfinite(partial)):
            last_new = m
        with np.errstate(invalid="ignore"):
            rel = np.where(np.isfinite(partial), tl - partial, NEG_INF)
        small = np.where(rel < math.log(rel_tol), small + 1, 0)
        if m >= 2 * last_new + window and np.all(small >= window):
            converged = True
            break
        if m >= steps:
            break
        bw.step()
        m += 1
    hist = np.array(hist)
    ratio, rel_tail = _tail(hist, partial)
    return SeriesResult(partial, m + int(bw.depths.min()), ratio, rel_tail, converged, np.array(head))


def _tail(hist: np.ndarray, partial: np.ndarray, decade: int = 10) -> tuple[float, float]:
    if len(hist) <= decade:
        return math.nan, math.inf
    last, prev = hist[-1], hist[-1 - decade]
    with np.errstate(invalid="ignore"):
        lr = (last - prev) / decade
    ratios = np.exp(lr)
    worst = 0.0
    for i in range(len(partial)):
        if not np.isfinite(partial[i]):
            continue
        r = ratios[i]
        if not np.isfinite(last[i]):
            continue
        if not (r < 1):
            return float(ratios[0]), math.inf
        worst = max(worst, math.exp(last[i] - partial[i]) * r / (1 - r))
    return float(ratios[0]), worst


def orbit_log_sums(phi: Potential, g: GraphModel, mu: FinitePath | None, N: int) -> np.ndarray:
    """log Z_n for n = 1..N (index n-1), where Z_n sums e^{phi_n(y)} over
    period-n points y in Z(mu); ``mu=None`` sums over all periodic points of a finite graph."""
    eng = TransferEngine(phi, g)
    L, k = eng.L, phi.depth
    out = np.full(N, NEG_INF)
    if mu is None:
        starts = eng.all_states()
        pairs = [(s, s, 0.0) for s in starts]
        forced = 0
    elif len(mu) <= L:
        starts = [p.edges for p in paths_from(g, mu.range, L - len(mu))] if L else [mu.source]
        if L:
            starts = [mu.edges + t for t in starts]
        pairs = [(s, s, 0.0) for s in starts]
        forced = 0
    else:
        forced = len(mu) - L
        s_a = mu.edges[:L] if L else mu.source
        s_b = eng.state_of(mu)
        w0 = math.fsum(phi(mu.edges[j:j + k]) for j in range(forced))
        pairs = [(s_a, s_b, w0)]
        for n in range(1, min(forced, N + 1)):
            c = mu.edges[:n]
            if g.range(c[-1]) != mu.source:
                continue
            if any(mu.edges[i] != c[i % n] for i in range(len(mu))):
                continue
            y = c * (k // n + 2)
            out[n - 1] = math.fsum(phi(y[j:j + k]) for j in range(n))
    if forced > N:
        return out
    reg = eng.region([b for _, b, _ in pairs] + [a for a, _, _ in pairs], N)
    cols = len(pairs)
    V = np.zeros((len(reg.states), cols))
    wmax = max(w for _, _, w in pairs)
    for j, (a, b, w) in enumerate(pairs):
        V[reg.index[b], j] = math.exp(w - wmax)
    read_rows = np.array([reg.index[a] for a, _, _ in pairs])
    col_ids = np.arange(cols)
    scale = wmax
    MT = reg.matrix.T.tocsr()
    # After m steps from the forced state the walk has length forced + m.
    for m in range(0, N - forced + 1):
        n = forced + m
        if n >= 1:
            z = float(V[read_rows, col_ids].sum())
            if z > 0:
                out[n - 1] = math.log(z) + scale
        if m == N - forced:
            break
        V = MT @ V
        s = float(V.max()) if V.size else 0.0
        if s <= 0:
            break
        V /= s
        scale += math.log(s) + reg.shift
    return out
