"""Brute-force references.

Nothing here touches the transfer-matrix code: iterates are explicit sums
over enumerated preimage paths, periodic sums enumerate closed walks, Perron
data comes from dense power iteration and Moran roots from a plain bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .graph_model import ExplicitFinite, GraphModel
from .potential import Potential
from .symbolic import BasePoint, CylinderFunction, FinitePath

MAX_N = 8


@dataclass(frozen=True)
class OracleResult:
    method: str
    value: float
    instance: str


def _walks(g: GraphModel, start: FinitePath, extra: int):
    """All continuations of ``start`` by exactly ``extra`` edges."""
    stack = [start.edges]
    v_of = {start.edges: start.range}
    out = []
    while stack:
        es = stack.pop()
        if len(es) == len(start.edges) + extra:
            out.append(es)
            continue
        v = v_of[es]
        for e in g.out_edges(v):
            nes = es + (e,)
            v_of[nes] = g.range(e)
            stack.append(nes)
    return sorted(out)


def _phi_sum(phi: Potential, y: tuple[int, ...], n: int) -> float:
    k = phi.depth
    total = 0.0
    for j in range(n):
        total += phi(y[j:j + k])
    return total


def enumerate_Ln(phi: Potential, g: GraphModel, f: CylinderFunction, x: BasePoint, n: int,
                 limit: int = MAX_N) -> float:
    """L^n f(x) as an explicit sum over the preimage paths p with p.x in supp f."""
    if n > limit:
        raise InvalidInput(f"enumeration limited to n <= {limit}")
    k = phi.depth
    xe = x.edges(n + k + f.depth + 1)
    total = 0.0
    for key, w in f.terms.items():
        d = len(key)
        if n < d:
            if key.edges[n:] == xe[:d - n]:
                y = key.edges[:n] + xe
                total += w * math.exp(_phi_sum(phi, y, n))
            continue
        for es in _walks(g, key, n - d):
            end = g.range(es[-1]) if es else key.source
            if end != x.start:
                continue
            y = es + xe
            total += w * math.exp(_phi_sum(phi, y, n))
    return total


def enumerate_periodic(phi: Potential, g: GraphModel, mu: FinitePath | None, n: int,
                       limit: int = 12) -> float:
    """Z_n: sum of e^{phi_n(y)} over y in Z(mu) with sigma^n y = y, by listing closed walks."""
    if n > limit:
        raise InvalidInput(f"enumeration limited to n <= {limit}")
    if mu is None:
        if not isinstance(g, ExplicitFinite):
            raise InvalidInput("all periodic points only for finite graphs")
        starts = [FinitePath.vertex(v) for v in g.vertices()]
    else:
        starts = [FinitePath.vertex(mu.source)]
    k = phi.depth
    total = 0.0
    for st in starts:
        for es in _walks(g, st, n):
            if g.range(es[-1]) != st.source:
                continue
            y = es * (k // n + 2)
            if mu is not None and y[:len(mu)] != mu.edges:
                continue
            total += math.exp(_phi_sum(phi, y, n))
    return total


def perron(matrix, tol: float = 1e-12, max_iter: int = 200000) -> tuple[float, np.ndarray]:
    """Log spectral radius and left Perron vector (sum 1) of a nonnegative irreducible matrix.

    Power iteration runs on (I + A)/2, which is aperiodic with the same Perron
    vector, so periodic matrices need no special treatment.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput("perron needs a square matrix")
    B = 0.5 * (np.eye(A.shape[0]) + A)
    v = np.full(A.shape[0], 1.0 / A.shape[0])
    for _ in range(max_iter):
        w = v @ B
        w /= w.sum()
        if np.max(np.abs(w - v)) < tol * 1e-2:
            v = w
            break
        v = w
    rho = float((v @ A).sum() / v.sum())
    return math.log(rho), v


def moran_solve(rates, tol: float = 1e-12) -> float:
    """The beta with sum_i exp(-beta * rates_i) = 1 (all rates > 0, at least two terms)."""
    rates = [float(r) for r in rates]
    if len(rates) < 2 or min(rates) <= 0:
        raise InvalidInput("need at least two positive rates")

    def F(b):
        return sum(math.exp(-b * r) for r in rates) - 1.0

    lo, hi = 0.0, 1.0
    while F(hi) > 0:
        hi *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if F(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def reference_table() -> list[OracleResult]:
    """The reference values the test suite freezes."""
    from .graph_model import FullShift, Ladder
    from .potential import constant

    out = []
    golden = ExplicitFinite([(0, 0, 0), (1, 0, 1), (2, 1, 0)])
    zero = constant(0.0)
    for n in (1, 2, 3, 4):
        out.append(OracleResult("enumerate_periodic", enumerate_periodic(zero, golden, None, n),
                                f"golden_mean Z_{n} all points"))
    for n in (1, 2, 3, 4):
        out.append(OracleResult("enumerate_periodic",
                                enumerate_periodic(zero, golden, FinitePath.vertex(0), n),
                                f"golden_mean Z_{n} through [0]"))
    lad = Ladder()
    for n in range(1, 9):
        out.append(OracleResult("enumerate_periodic",
                                enumerate_periodic(zero, lad, FinitePath.vertex(0), n),
                                f"ladder loops at 0 length {n}"))
    x0 = BasePoint(lad, 0, (), (1,))
    half = constant(-math.log(2))
    for n in range(0, 7):
        out.append(OracleResult("enumerate_Ln",
                                enumerate_Ln(half.scaled(2.0), lad, CylinderFunction.vertex_indicator(0), x0, n),
                                f"ladder w=1/4 L^{n} 1_[0] at d_0 loop"))
    fs = FullShift(2)
    for n in (1, 2, 3):
        out.append(OracleResult("enumerate_Ln",
                                enumerate_Ln(zero, fs, CylinderFunction.vertex_indicator(0),
                                             BasePoint(fs, 0, (), (0,)), n),
                                f"full_shift L^{n} 1"))
    lr, _ = perron([[1, 1], [1, 0]])
    out.append(OracleResult("perron", lr, "golden_mean log radius"))
    lr, v = perron([[0.5, 0.5], [0.5, 0.5]])
    out.append(OracleResult("perron", lr, "two loops weight 1/2 log radius"))
    out.append(OracleResult("perron", float(v[0]), "two loops weight 1/2 vector[0]"))
    lr, v = perron([[0.0, 2.0], [0.5, 0.0]])
    out.append(OracleResult("perron", lr, "period-2 cycle log radius"))
    out.append(OracleResult("perron", float(v[0]), "period-2 cycle vector[0]"))
    out.append(OracleResult("moran", moran_solve([math.log(2), math.log(4)]), "2^-b + 4^-b = 1"))
    out.append(OracleResult("moran", moran_solve([math.log(2), math.log(2)]), "2 * 2^-b = 1"))
    out.append(OracleResult("moran", moran_solve([1.0, 1.0]), "2 e^-b = 1"))
    return out


def reference_tsv() -> str:
    lines = ["method\tinstance\tvalue"]
    for r in reference_table():
        lines.append(f"{r.method}\t{r.instance}\t{r.value:.17g}")
    return "\n".join(lines) + "\n"
