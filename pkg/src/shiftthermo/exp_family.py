"""Pressure of -beta log|z| for the exponential maps z -> lam e^z, 0 < lam < 1/e.

Inverse branches of x are Log(x/lam) + 2 pi i k. Iterating the transfer
operator at the repelling real fixed point builds a tree of preimages; it is
truncated to |k| <= K per node and to the heaviest ``beam`` nodes per level.
Branches |k| > K are bracketed by Hurwitz zeta tails. Beam losses are
reported as a share of the level mass; estimates only use levels whose
expanded parents still carry at least half of the mass.

The beam ranks nodes by sum log|y|, which orders weights identically for
every beta, so one tree serves a whole beta grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .config import settings
from .errors import InvalidInput, Refused
from .pressure import PressureEstimate

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ExpSystem:
    lam: float
    K: int
    x0: float


def repelling_fixed_point(lam: float) -> float:
    """The larger real root of lam e^x = x."""
    if not 0 < lam < math.exp(-1):
        raise InvalidInput("lambda must lie in (0, 1/e)")
    f = lambda x: lam * math.exp(x) - x  # noqa: E731
    lo = 1.0  # f(1) = lam e - 1 < 0, and f is convex with minimum at log(1/lam) > 1
    hi = max(2.0, math.log(1.0 / lam))
    while f(hi) <= 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def exp_system(lam: float, K: int) -> ExpSystem:
    if K < 0:
        raise InvalidInput("K must be non-negative")
    return ExpSystem(lam, K, repelling_fixed_point(lam))


def _check_beta(beta: float):
    if beta <= 1:
        raise Refused("DIVERGENT", f"branch sums diverge for beta = {beta} <= 1")


def _zeta_tail(beta: float, b: np.ndarray | float, K: int):
    """Bound on sum_{|k| > K} |y_k|^-beta from |y_k| >= |b + 2 pi k|, b = Im Log(x/lam)."""
    s = np.asarray(b, dtype=float) / TWO_PI
    return TWO_PI ** (-beta) * (zeta(beta, K + 1 + s) + zeta(beta, K + 1 - s))


def branch_sum(x: complex, beta: float, K: int, lam: float) -> tuple[float, float]:
    """sum over |k| <= K of |Log(x/lam) + 2 pi i k|^-beta, and a bound on the rest."""
    _check_beta(beta)
    if x == 0:
        raise InvalidInput("x must be nonzero")
    w = np.log(complex(x) / lam)
    ks = np.arange(-K, K + 1)
    val = float(np.sum(np.abs(w + 1j * TWO_PI * ks) ** (-beta)))
    return val, float(_zeta_tail(beta, w.imag, K))


def branch_sum_bound(beta: float, x0: float, terms: int = 20000) -> float:
    """Upper bound for A_beta = sup over the Julia set of the full branch sum."""
    _check_beta(beta)
    k = np.arange(1, terms + 1, dtype=float)
    head = x0 ** (-beta) + 2.0 * float(np.sum((x0 ** 2 + (TWO_PI * (k - 0.5)) ** 2) ** (-beta / 2)))
    return head + 2.0 * TWO_PI ** (-beta) * float(zeta(beta, terms + 0.5))


def _tail_bracket(beta: float, logs: np.ndarray, K: int):
    """Lower and upper values of sum_{|k| > K} |Log(x/lam) + 2 pi i k|^-beta, vectorized over x.

    With a + ib = Log(x/lam), |b| <= pi and a > 0, the terms lie between
    (a + |b + 2 pi k|)^-beta and |b + 2 pi k|^-beta.
    """
    a = np.abs(logs.real)
    b = logs.imag
    lo = TWO_PI ** (-beta) * (zeta(beta, K + 1 + (a + b) / TWO_PI) + zeta(beta, K + 1 + (a - b) / TWO_PI))
    return lo, _zeta_tail(beta, b, K)


@dataclass
class TreeLevels:
    """Per level j = 1..n and per beta, masses of the truncated preimage tree at x0.

    ``parent[j]`` is the mass of the level j-1 nodes that were expanded,
    ``child[j]`` the mass of their |k| <= K children, ``tail_lo``/``tail_hi``
    bracket the children with |k| > K, and ``share[j]`` is the fraction of
    the level j mass the beam discarded.
    """

    betas: np.ndarray
    parent: np.ndarray
    child: np.ndarray
    tail_lo: np.ndarray
    tail_hi: np.ndarray
    share: np.ndarray


def _expand(nodes, scores, mult, lam: float, K: int, betas: np.ndarray, beam: int | None,
            chunk: int = 1 << 21):
    """One level of the preimage tree.

    Nodes are stored up to complex conjugation: ``mult`` is 2 for a node
    standing in for a conjugate pair and 1 for a real node. Scores are
    sum log|y| along the path, so weights are mult * exp(-beta * score).
    """
    ks_all = np.arange(-K, K + 1, dtype=float)
    B = len(betas)
    logs = np.log(nodes / lam)
    parent = np.zeros(B)
    t_lo = np.zeros(B)
    t_hi = np.zeros(B)
    for i, beta in enumerate(betas):
        w = mult * np.exp(-beta * scores)
        parent[i] = float(np.sum(w))
        lo, hi = _tail_bracket(beta, logs, K)
        t_lo[i] = float(np.sum(w * lo))
        t_hi[i] = float(np.sum(w * hi))
    child = np.zeros(B)
    pools = ([], [], [])
    held = 0

    def flush():
        s = np.concatenate(pools[0])
        z = np.concatenate(pools[1])
        m = np.concatenate(pools[2])
        if beam is not None and len(s) > beam:
            idx = np.argpartition(s, beam - 1)[:beam]
            s, z, m = s[idx], z[idx], m[idx]
        for lst, arr in zip(pools, (s, z, m)):
            lst[:] = [arr]
        return len(s)

    real = nodes.imag == 0
    # A real node's children come in conjugate pairs k, -k around the real child k = 0.
    groups = [(np.flatnonzero(real), np.arange(0, K + 1, dtype=float)), (np.flatnonzero(~real), ks_all)]
    for idx_all, ks in groups:
        if len(idx_all) == 0:
            continue
        per = max(1, chunk // len(ks))
        for start in range(0, len(idx_all), per):
            idx = idx_all[start:start + per]
            lg, sc, mu = logs[idx], scores[idx], mult[idx]
            im = lg.imag[:, None] + TWO_PI * ks[None, :]
            re = np.broadcast_to(lg.real[:, None], im.shape)
            cs = (sc[:, None] + 0.5 * np.log(re * re + im * im)).ravel()
            cm = np.broadcast_to(mu[:, None], im.shape).copy()
            if ks[0] == 0:
                cm[:, 1:] *= 2.0
            cm = cm.ravel()
            for i, beta in enumerate(betas):
                child[i] += float(np.sum(cm * np.exp(-beta * cs)))
            if beam is None:
                continue
            pools[0].append(cs)
            pools[1].append((re + 1j * im).ravel())
            pools[2].append(cm)
            held += len(cs)
            if held > 2 * beam:
                held = flush()
    share = np.zeros(B)
    if beam is None or not pools[0]:
        return None, None, None, parent, child, t_lo, t_hi, share
    flush()
    s, z, m = pools[0][0], pools[1][0], pools[2][0]
    order = np.argsort(s, kind="stable")
    s, z, m = s[order], z[order], m[order]
    for i, beta in enumerate(betas):
        kept = float(np.sum(m * np.exp(-beta * s)))
        share[i] = min(max(1.0 - kept / child[i], 0.0), 1.0)
    return z, s, m, parent, child, t_lo, t_hi, share


def build_tree(lam: float, betas, n_max: int, K: int, beam: int | None = None) -> tuple[ExpSystem, TreeLevels]:
    cfg = settings()
    beam = cfg["beam_width"] if beam is None else beam
    betas = np.asarray(sorted(float(b) for b in betas))
    for b in betas:
        _check_beta(b)
    if n_max < 1:
        raise InvalidInput("n_max must be positive")
    if beam < 1:
        raise InvalidInput("beam width must be positive")
    system = exp_system(lam, K)
    nodes = np.array([complex(system.x0)])
    scores = np.zeros(1)
    mult = np.ones(1)
    shape = (n_max, len(betas))
    rec = {key: np.zeros(shape) for key in ("parent", "child", "tail_lo", "tail_hi", "share")}
    for j in range(n_max):
        last = j == n_max - 1
        nodes, scores, mult, *vals = _expand(nodes, scores, mult, lam, K, betas, None if last else beam)
        for key, v in zip(("parent", "child", "tail_lo", "tail_hi", "share"), vals):
            rec[key][j] = v
    return system, TreeLevels(betas, **rec)


def _usable_depth(share: np.ndarray) -> int:
    """Deepest level whose parents carry at least half of the mass they would have without the beam."""
    kept = np.cumprod(1.0 - share)
    depth = 1
    for j in range(1, len(share)):
        if kept[j - 1] < 0.5:
            break
        depth = j + 1
    return depth


def exp_pressure_curve(lam: float, betas, n_max: int | None = None, K: int | None = None,
                       beam: int | None = None) -> list[tuple[float, PressureEstimate]]:
    """Interval estimates of P(-beta log|z|) for every beta in the grid.

    The growth rate at level j is log(child mass / parent mass): the ratio
    L^j 1 / L^{j-1} 1 restricted to the expanded part of the tree. Unlike
    (1/n) log L^n 1 it carries no O(1/n) prefactor bias. The interval is the
    tail bracket, lowered by the beam loss of the parent level and widened by
    the change of the rate over the last levels.
    """
    cfg = settings()
    n_max = cfg["exp_nmax"] if n_max is None else n_max
    K = cfg["exp_branches"] if K is None else K
    _, tree = build_tree(lam, betas, n_max, K, beam)
    need = max(1, math.ceil(n_max / 2))
    out = []
    for i, beta in enumerate(tree.betas):
        depth = _usable_depth(tree.share[:, i])
        if depth < need:
            lost = 1.0 - float(np.prod(1.0 - tree.share[:need - 1, i]))
            raise Refused("BEAM_OVERFLOW",
                          f"beam discarded {lost:.0%} of the mass before level {need} at beta = {beta}")
        par = np.log(tree.parent[:depth, i])
        mid = np.log(tree.child[:depth, i] + 0.5 * (tree.tail_lo[:depth, i] + tree.tail_hi[:depth, i])) - par
        # Discarded parents have nonnegative offspring, which bounds the beam bias from below.
        lost = np.concatenate([[0.0], tree.share[:depth - 1, i]])
        lo = np.log(tree.child[:depth, i] + tree.tail_lo[:depth, i]) - par + np.log1p(-lost)
        hi = np.log(tree.child[:depth, i] + tree.tail_hi[:depth, i]) - par
        drift = float(np.max(np.abs(np.diff(mid[-3:])))) if depth > 1 else abs(float(mid[-1]))
        est = PressureEstimate(float(mid[-1]), float(lo[-1]) - drift, float(hi[-1]) + drift,
                               [(j + 1, float(r)) for j, r in enumerate(mid)], f"exp_tree depth={depth}")
        out.append((float(beta), est))
    return out


def exp_pressure(lam: float, beta: float, n_max: int | None = None, K: int | None = None,
                 beam: int | None = None) -> PressureEstimate:
    return exp_pressure_curve(lam, [beta], n_max, K, beam)[0][1]


def sign_change_bracket(curve: list[tuple[float, PressureEstimate]]) -> tuple[float, float] | None:
    """Adjacent grid points where the midpoint estimate changes sign."""
    for (b1, e1), (b2, e2) in zip(curve, curve[1:]):
        if e1.point_value > 0 >= e2.point_value:
            return b1, b2
    return None


def curve_tsv(curve) -> str:
    lines = ["beta\tlo\tmid\thi"]
    for beta, est in curve:
        lines.append(f"{beta:.15g}\t{est.lo:.15g}\t{est.point_value:.15g}\t{est.hi:.15g}")
    return "\n".join(lines) + "\n"
