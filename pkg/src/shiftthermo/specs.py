"""JSON graph and potential specs.

A graph spec is ``{"kind": ..., "params": {...}}``; a potential spec is either
``{"depth": k, "table": {"e1 e2": value, ...}}`` or ``{"family_rule": {"kind": ..., ...}}``.
Numeric values may be numbers or short expressions such as ``"log(2)"``.
Everything is schema-checked before any graph or potential object is built.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from pathlib import Path

import jsonschema

from .errors import InvalidInput
from .graph_model import CoreWithInwardRays, ExplicitFinite, FullShift, GraphModel, Ladder, ZRay
from .potential import Potential, potential_on, table

VALUE = {"anyOf": [{"type": "number"}, {"type": "string", "maxLength": 200}]}
TRIPLE = {"type": "array", "items": {"type": "integer"}, "minItems": 3, "maxItems": 3}

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["explicit", "ladder", "zray", "core_with_inward_rays", "full_shift"]},
        "params": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "explicit"}}},
         "then": {"required": ["params"], "properties": {"params": {
             "type": "object", "required": ["edges"], "additionalProperties": False,
             "properties": {"edges": {"type": "array", "items": TRIPLE, "minItems": 1},
                            "labels": {"type": "object", "additionalProperties": {"type": "string"}}}}}}},
        {"if": {"properties": {"kind": {"enum": ["ladder", "zray"]}}},
         "then": {"properties": {"params": {"type": "object", "maxProperties": 0}}}},
        {"if": {"properties": {"kind": {"const": "core_with_inward_rays"}}},
         "then": {"properties": {"params": {
             "type": "object", "additionalProperties": False,
             "properties": {"loops": {"type": "integer", "minimum": 1},
                            "rays": {"type": "integer", "minimum": 1},
                            "core_edges": {"type": "array", "items": TRIPLE, "minItems": 1}}}}}},
        {"if": {"properties": {"kind": {"const": "full_shift"}}},
         "then": {"properties": {"params": {
             "type": "object", "additionalProperties": False,
             "properties": {"letters": {"type": "integer", "minimum": 1}}}}}},
    ],
}

POTENTIAL_SCHEMA = {
    "type": "object",
    "oneOf": [
        {"required": ["depth", "table"], "not": {"required": ["family_rule"]}},
        {"required": ["family_rule"], "not": {"anyOf": [{"required": ["depth"]}, {"required": ["table"]}]}},
    ],
    "additionalProperties": False,
    "properties": {
        "depth": {"type": "integer", "minimum": 1},
        "table": {"type": "object", "additionalProperties": VALUE, "minProperties": 1},
        "truncation_error": {"type": "number", "minimum": 0},
        "family_rule": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "ladder_classes", "core_rays"]},
                "value": VALUE,
                "up": VALUE,
                "down": VALUE,
                "core": {"anyOf": [VALUE, {"type": "object", "additionalProperties": VALUE}]},
                "rays": {"type": "array", "items": VALUE, "minItems": 1},
            },
            "additionalProperties": False,
            "allOf": [
                {"if": {"properties": {"kind": {"const": "constant"}}}, "then": {"required": ["value"]}},
                {"if": {"properties": {"kind": {"const": "ladder_classes"}}}, "then": {"required": ["up", "down"]}},
                {"if": {"properties": {"kind": {"const": "core_rays"}}}, "then": {"required": ["core", "rays"]}},
            ],
        },
    },
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"log": math.log, "exp": math.exp, "sqrt": math.sqrt, "log2": math.log2, "log10": math.log10}
_CONSTS = {"pi": math.pi, "e": math.e}


def number(value) -> float:
    """A float from a JSON number or an arithmetic expression like ``"-log(4)/2"``."""
    if isinstance(value, bool):
        raise InvalidInput(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(_eval(ast.parse(value.strip(), mode="eval").body))
        except (SyntaxError, ValueError, ZeroDivisionError, OverflowError, TypeError, RecursionError) as exc:
            raise InvalidInput(f"cannot evaluate {value!r}: {exc}") from None
    else:
        raise InvalidInput(f"not a number: {value!r}")
    if not math.isfinite(out):
        raise InvalidInput(f"value {value!r} is not finite")
    return out


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand))
    if isinstance(node, ast.Name) and node.id in _CONSTS:
        return _CONSTS[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def _validate(doc, schema, what: str):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInput(f"{what} spec invalid at {where}: {exc.message}") from None


def load_json(source) -> object:
    """Parse a path or an already-decoded document."""
    if isinstance(source, (str, Path)):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InvalidInput(f"cannot read {source}: {exc.strerror}") from None
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{source}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return source


def graph_from_spec(source) -> GraphModel:
    doc = load_json(source)
    _validate(doc, GRAPH_SCHEMA, "graph")
    kind, params = doc["kind"], doc.get("params", {})
    if kind == "explicit":
        labels = {}
        for key, lab in params.get("labels", {}).items():
            try:
                labels[int(key)] = lab
            except ValueError:
                raise InvalidInput(f"label key {key!r} is not an edge id") from None
        return ExplicitFinite(params["edges"], labels)
    if kind == "ladder":
        return Ladder()
    if kind == "zray":
        return ZRay()
    if kind == "full_shift":
        return FullShift(params.get("letters", 2))
    core = params.get("core_edges")
    return CoreWithInwardRays(params.get("loops", 2), params.get("rays", 1), core)


def _window(g: GraphModel, key: str) -> tuple[int, ...]:
    out = []
    for tok in key.split():
        try:
            out.append(g.edge_by_label(tok))
        except InvalidInput:
            try:
                out.append(int(tok))
            except ValueError:
                raise InvalidInput(f"unknown edge {tok!r} in table key {key!r}") from None
    return tuple(out)


def potential_from_spec(source, g: GraphModel) -> Potential:
    doc = load_json(source)
    _validate(doc, POTENTIAL_SCHEMA, "potential")
    terr = float(doc.get("truncation_error", 0.0))
    if "table" in doc:
        depth = doc["depth"]
        values = {}
        for key, v in doc["table"].items():
            w = _window(g, key)
            if len(w) != depth:
                raise InvalidInput(f"table key {key!r} has {len(w)} edges, expected {depth}")
            values[w] = number(v)
        return table(g, depth, values, terr)
    rule = dict(doc["family_rule"])
    kind = rule.pop("kind")
    if kind == "constant":
        return potential_on(g, kind, value=number(rule["value"]), truncation_error=terr)
    if kind == "ladder_classes":
        return potential_on(g, kind, up=number(rule["up"]), down=number(rule["down"]), truncation_error=terr)
    core = rule["core"]
    if isinstance(core, dict):
        try:
            core = {int(k): number(v) for k, v in core.items()}
        except ValueError:
            raise InvalidInput("core keys must be edge ids") from None
    else:
        core = number(core)
    return potential_on(g, kind, core=core, rays=[number(v) for v in rule["rays"]], truncation_error=terr)
