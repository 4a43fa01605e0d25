"""Command-line front end.

Exit codes: 0 success, 1 malformed input, 2 refused precondition.
Tables go out as TSV, reports as JSON (sorted keys, non-finite floats as strings).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .config import fingerprint, settings
from .errors import InvalidInput, Refused, ThermoError, Undecided
from .graph_model import FINITE
from .symbolic import CylinderFunction, FinitePath, read_measure_tsv


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _json(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> list[float]:
    from .specs import number

    vals = [number(t) for t in text.replace(",", " ").split()]
    if not vals:
        raise InvalidInput("empty list")
    return vals


def _load(args):
    from .specs import graph_from_spec, potential_from_spec

    g = graph_from_spec(args.graph)
    phi = potential_from_spec(args.potential, g) if getattr(args, "potential", None) else None
    return g, phi


def _h(g, text):
    if text is None:
        return CylinderFunction.vertex_indicator(g.reference_vertex())
    return CylinderFunction.indicator(FinitePath.parse(g, text))


def _pressure_row(est):
    return {"p_lo": est.lo, "p_est": est.point_value, "p_hi": est.hi, "method": est.method}


# -- subcommands -------------------------------------------------------------

def cmd_analyze_graph(args):
    g, _ = _load(args)
    report = g.nonwandering(args.radius)
    doc = {"graph": g.to_spec(), "nonwandering": report.case_tag, "period": report.period,
           "cofinal": g.is_cofinal(args.radius)}
    if report.vertices is not None:
        doc["nonwandering_vertices"] = sorted(report.vertices)
    else:
        doc["nonwandering_sample"] = list(report.sample)
    if report.case_tag == FINITE:
        filt = g.h_filtration(args.levels)
        doc["h_filtration"] = [sorted(level) for level in filt.levels]
    return _json(doc)


def cmd_pressure(args):
    from .pressure import pressure_of_beta, pressure_tsv

    g, phi = _load(args)
    mu = FinitePath.parse(g, args.mu) if args.mu else None
    curve = pressure_of_beta(phi, g, [args.beta], args.N, mu)
    return pressure_tsv(curve, args.N)


def cmd_pressure_curve(args):
    from .pressure import pressure_of_beta, pressure_tsv

    g, phi = _load(args)
    mu = FinitePath.parse(g, args.mu) if args.mu else None
    curve = pressure_of_beta(phi, g, _float_list(args.betas), args.N, mu, args.threads)
    if not curve.sandwich_ok:
        pairs = ", ".join(f"({b1:g}, {b2:g})" for b1, b2, _ in curve.sandwich_violations)
        print(f"warning: Lipschitz sandwich violated between {pairs}", file=sys.stderr)
    return pressure_tsv(curve, args.N)


def _construct(args, g, phi):
    from . import conformal
    from .pressure import pressure_estimate

    h = _h(g, args.h)
    method = args.method
    if method == "eigen":
        if args.t is None:
            raise InvalidInput("--method eigen needs --t")
        return conformal.eigenmeasure(phi, args.t, g, h, args.depth, args.eps)
    if args.beta is None:
        raise InvalidInput("--beta is required")
    if method == "auto":
        if g.nonwandering().case_tag == FINITE:
            method = "core"
        else:
            method = "fixed" if pressure_estimate(phi.scaled(-args.beta), g, args.N).hi < 0 else "limit"
    if method == "core":
        return conformal.extend_from_core(g, phi, args.beta, depth=args.depth)
    if method == "fixed":
        res = conformal.construct_fixed(phi.scaled(-args.beta), g, h, depth=args.depth)
        res.beta = args.beta
        return res
    return conformal.construct_limit(phi, args.beta, g, h, args.eps, args.depth)


def cmd_construct(args):
    g, phi = _load(args)
    res = _construct(args, g, phi)
    if args.report:
        r = res.residual
        doc = {
            "fingerprint": fingerprint(),
            "beta": res.beta,
            "target": res.target,
            "params": res.params,
            "pressure": _pressure_row(res.pressure) if res.pressure else None,
            "tail_bound": res.tail_bound,
            "max_spread": max(res.spread.values(), default=0.0),
            "residual": None if r is None else {
                "max_rel": r.max_rel, "mean_rel": r.mean_rel, "checked": r.checked,
                "additivity": r.additivity,
                "worst": r.worst.serialize(g) if r.worst is not None else None,
            },
        }
        with open(args.report, "w") as fh:
            fh.write(_json(doc))
    return res.measure.to_tsv(g)


def cmd_verify(args):
    from .conformal import verify

    g, phi = _load(args)
    try:
        with open(args.measure) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidInput(f"cannot read {args.measure}: {exc.strerror}") from None
    m = read_measure_tsv(g, text)
    r = verify(m, phi, args.beta, g, args.d)
    doc = {"max_rel": r.max_rel, "mean_rel": r.mean_rel, "checked": r.checked,
           "additivity": r.additivity, "worst": r.worst.serialize(g) if r.worst is not None else None,
           "ok": r.max_rel <= args.tol and r.additivity <= settings()["tau_add"]}
    return _json(doc)


def cmd_dissipativity(args):
    from .dissipativity import dissipativity_test

    g, phi = _load(args)
    f = _h(g, args.f) if args.f else None
    rep = dissipativity_test(phi, args.beta, g, f, N=args.N)
    doc = {
        "verdict": rep.verdict,
        "beta": args.beta,
        "pressure": _pressure_row(rep.pressure),
        "decay_ratio": rep.decay_ratio,
        "points": [{"point": p.point, "decay_ratio": p.decay_ratio, "diverging": p.diverging,
                    "log_partial_sum": p.log_partial_sums[-1]} for p in rep.points],
    }
    return _json(doc)


def cmd_kms_region(args):
    from .kms import kms_region

    g, phi = _load(args)
    region = kms_region(phi, g, args.tol, args.N)
    doc = region.to_json()
    if region.searched is not None:
        doc["searched"] = list(region.searched)
    return _json(doc)


def cmd_exp_pressure(args):
    from .exp_family import curve_tsv, exp_pressure_curve

    curve = exp_pressure_curve(args.lam, _float_list(args.beta), args.nmax, args.branches, args.beam)
    return curve_tsv(curve)


def cmd_oracle(args):
    from .oracle import reference_tsv

    return reference_tsv()


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    cfg = settings()
    parser = argparse.ArgumentParser(prog="shiftthermo",
                                     description="Thermodynamic formalism on countable Markov shifts.")
    parser.add_argument("--version", action="version",
                        version=f"shiftthermo {__version__} config {fingerprint(cfg)}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--graph", required=True, help="graph spec (JSON)")
    pot = argparse.ArgumentParser(add_help=False)
    pot.add_argument("--potential", required=True, help="potential spec (JSON)")
    N = argparse.ArgumentParser(add_help=False)
    N.add_argument("--N", type=int, default=cfg["N"], help="number of iterates")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-graph", parents=[common, graph], help="classify the non-wandering set")
    p.add_argument("--radius", type=int, help="exploration radius for explicit graphs")
    p.add_argument("--levels", type=int, default=cfg["D"], help="filtration levels to list")
    p.set_defaults(func=cmd_analyze_graph)

    p = sub.add_parser("pressure", parents=[common, graph, pot, N], help="P(-beta phi) at one beta")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--mu", help="cylinder for the periodic sums, e.g. '[0]' or 'u_0 d_1'")
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("pressure-curve", parents=[common, graph, pot, N], help="P(-beta phi) over a grid")
    p.add_argument("--betas", required=True, help="comma-separated beta values")
    p.add_argument("--mu")
    p.set_defaults(func=cmd_pressure_curve)

    p = sub.add_parser("construct", parents=[common, graph, pot, N], help="build a conformal measure")
    p.add_argument("--beta", type=float)
    p.add_argument("--depth", type=int, default=cfg["D"])
    p.add_argument("--method", choices=["auto", "fixed", "limit", "core", "eigen"], default="auto")
    p.add_argument("--t", type=float, help="eigenvalue exponent for --method eigen")
    p.add_argument("--h", help="cylinder whose indicator normalizes the measure")
    p.add_argument("--eps", type=_float_list, help="eps schedule, e.g. 0.1,0.05,0.025")
    p.add_argument("--report", help="also write a JSON run report here")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", parents=[common, graph, pot], help="check the conformality residuals")
    p.add_argument("--measure", required=True, help="measure TSV")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dissipativity", parents=[common, graph, pot, N], help="dissipativity certificate")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--f", help="cylinder of the test function")
    p.set_defaults(func=cmd_dissipativity)

    p = sub.add_parser("kms-region", parents=[common, graph, pot, N], help="beta region of KMS weights")
    p.add_argument("--tol", type=float, default=cfg["tol"])
    p.set_defaults(func=cmd_kms_region)

    p = sub.add_parser("exp-pressure", parents=[common], help="pressure for z -> lambda e^z")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", required=True, help="comma-separated beta values")
    p.add_argument("--nmax", type=int, default=cfg["exp_nmax"])
    p.add_argument("--branches", type=int, default=cfg["exp_branches"])
    p.add_argument("--beam", type=int, default=cfg["beam_width"])
    p.set_defaults(func=cmd_exp_pressure)

    p = sub.add_parser("oracle", parents=[common], help="dump the brute-force reference values")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here.
        return 0 if not exc.code else 1
    try:
        if getattr(args, "threads", 1) < 1:
            raise InvalidInput("--threads must be positive")
        text = args.func(args)
        _emit(text, args.out)
    except Refused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except Undecided as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return 2
    except (InvalidInput, ThermoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
