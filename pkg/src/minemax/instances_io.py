"""JSON instance files: schema, parsing and byte-stable serialization.

Probabilities are written as decimal strings, and unavailable facility costs
as the string "inf".
"""

from __future__ import annotations

import json
import math

import jsonschema

from .facility_problems import KCenterInstance, UflInstance, metric_from_points
from .graph_problems import Graph, MinCutInstance, MstInstance, SteinerInstance
from .reductions import HybridInstance

VERSION = 1
PROBLEMS = ("ufl", "steiner", "mst", "mincut", "kcenter", "hybrid")


class InstanceFormatError(ValueError):
    pass


_prob = {"type": "string", "pattern": r"^(0(\.[0-9]+)?|1(\.0+)?|[0-9.]+e-[0-9]+)$"}
_num = {"type": "number", "minimum": 0}
_cost = {"oneOf": [_num, {"const": "inf"}]}
_vertex = {"type": "integer", "minimum": 0}
_graph = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "edges"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "edges": {"type": "array", "items": {"type": "array", "prefixItems": [_vertex, _vertex, _num], "minItems": 3, "maxItems": 3}},
    },
}
_probs = {"type": "array", "items": _prob}
_inflation = {"type": "array", "items": _num}
_matrix = {"type": "array", "items": {"type": "array", "items": _num}}
_points = {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}}


def _obj(required, props):
    return {"type": "object", "additionalProperties": False, "required": required, "properties": props}


BODY_SCHEMAS = {
    "mincut": _obj(
        ["graph", "root", "terminals", "inflation", "probs"],
        {"graph": _graph, "root": _vertex, "terminals": {"type": "array", "items": _vertex}, "inflation": _inflation, "probs": _probs},
    ),
    "steiner": _obj(
        ["graph", "root", "scenarios", "inflation", "probs"],
        {
            "graph": _graph,
            "root": _vertex,
            "scenarios": {"type": "array", "items": {"type": "array", "items": _vertex}},
            "inflation": _inflation,
            "probs": _probs,
        },
    ),
    "mst": _obj(["graph", "cost1", "cost2", "probs"], {"graph": _graph, "cost1": {"type": "array", "items": _num}, "cost2": _matrix, "probs": _probs}),
    "ufl": {
        "type": "object",
        "additionalProperties": False,
        "required": ["demands", "f1", "f2", "probs"],
        "oneOf": [{"required": ["distances"]}, {"required": ["facility_points", "client_points"]}],
        "properties": {
            "distances": _matrix,
            "facility_points": _points,
            "client_points": _points,
            "demands": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}},
            "f1": {"type": "array", "items": _cost},
            "f2": {"type": "array", "items": {"type": "array", "items": _cost}},
            "probs": _probs,
        },
    },
    "kcenter": {
        "type": "object",
        "additionalProperties": False,
        "required": ["k", "probs"],
        "oneOf": [{"required": ["distances"]}, {"required": ["points"]}],
        "properties": {"distances": _matrix, "points": _points, "k": {"type": "integer", "minimum": 1}, "probs": _probs},
    },
}
BODY_SCHEMAS["hybrid"] = _obj(
    ["rho", "distribution", "base"],
    {
        "rho": _prob,
        "distribution": _probs,
        "base": {
            "type": "object",
            "additionalProperties": False,
            "required": ["problem", "instance"],
            "properties": {"problem": {"enum": ["mincut", "steiner", "mst"]}, "instance": {"type": "object"}},
        },
    },
)

FILE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "version", "instance"],
    "properties": {
        "problem": {"enum": list(PROBLEMS)},
        "version": {"const": VERSION},
        "id": {"type": "string"},
        "oracle": {"type": "boolean"},
        "instance": {"type": "object"},
    },
}


def fmt_prob(p: float) -> str:
    return repr(float(p))


def _fmt_cost(x: float):
    return "inf" if math.isinf(x) else _plain(x)


def _plain(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def _cost_value(x) -> float:
    return math.inf if x == "inf" else float(x)


def _graph_to_json(g: Graph) -> dict:
    return {"n": g.n, "edges": [[u, v, _plain(c)] for u, v, c in g.edges]}


def _graph_from_json(d: dict) -> Graph:
    return Graph(d["n"], tuple((u, v, c) for u, v, c in d["edges"]))


def body_to_json(inst) -> tuple[str, dict]:
    if isinstance(inst, MinCutInstance):
        return "mincut", {
            "graph": _graph_to_json(inst.graph),
            "root": inst.root,
            "terminals": list(inst.terminals),
            "inflation": [_plain(x) for x in inst.inflation],
            "probs": [fmt_prob(p) for p in inst.probs],
        }
    if isinstance(inst, SteinerInstance):
        return "steiner", {
            "graph": _graph_to_json(inst.graph),
            "root": inst.root,
            "scenarios": [sorted(S) for S in inst.scenarios],
            "inflation": [_plain(x) for x in inst.inflation],
            "probs": [fmt_prob(p) for p in inst.probs],
        }
    if isinstance(inst, MstInstance):
        return "mst", {
            "graph": _graph_to_json(inst.graph),
            "cost1": [_plain(x) for x in inst.cost1],
            "cost2": [[_plain(x) for x in row] for row in inst.cost2],
            "probs": [fmt_prob(p) for p in inst.probs],
        }
    if isinstance(inst, UflInstance):
        return "ufl", {
            "distances": [[_plain(x) for x in row] for row in inst.distances],
            "demands": [list(row) for row in inst.demands],
            "f1": [_fmt_cost(x) for x in inst.f1],
            "f2": [[_fmt_cost(x) for x in row] for row in inst.f2],
            "probs": [fmt_prob(p) for p in inst.probs],
        }
    if isinstance(inst, KCenterInstance):
        return "kcenter", {
            "distances": [[_plain(x) for x in row] for row in inst.distances],
            "k": inst.k,
            "probs": [fmt_prob(p) for p in inst.probs],
        }
    if isinstance(inst, HybridInstance):
        problem, body = body_to_json(inst.base)
        return "hybrid", {
            "rho": fmt_prob(inst.rho),
            "distribution": [fmt_prob(p) for p in inst.dist],
            "base": {"problem": problem, "instance": body},
        }
    raise TypeError(f"cannot serialize {type(inst).__name__}")


def _validate(schema, doc, where):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InstanceFormatError(f"{where}{'/' + path if path else ''}: {exc.message}") from None


def body_from_json(problem: str, body: dict):
    _validate(BODY_SCHEMAS[problem], body, problem)
    probs = lambda key="probs": tuple(float(p) for p in body[key])  # noqa: E731
    try:
        if problem == "mincut":
            return MinCutInstance(_graph_from_json(body["graph"]), body["root"], tuple(body["terminals"]), tuple(body["inflation"]), probs())
        if problem == "steiner":
            return SteinerInstance(
                _graph_from_json(body["graph"]), body["root"], tuple(frozenset(S) for S in body["scenarios"]), tuple(body["inflation"]), probs()
            )
        if problem == "mst":
            return MstInstance(_graph_from_json(body["graph"]), tuple(body["cost1"]), tuple(map(tuple, body["cost2"])), probs())
        if problem == "ufl":
            if "distances" in body:
                dist = body["distances"]
            else:
                import numpy as np

                pts = body["facility_points"] + body["client_points"]
                full = metric_from_points(pts)
                nf = len(body["facility_points"])
                dist = full[:nf, nf:].tolist()
                if np.asarray(full).size and len({len(p) for p in pts}) != 1:
                    raise ValueError("points must share a dimension")
            return UflInstance(
                tuple(map(tuple, dist)),
                tuple(map(tuple, body["demands"])),
                tuple(_cost_value(x) for x in body["f1"]),
                tuple(tuple(_cost_value(x) for x in row) for row in body["f2"]),
                probs(),
            )
        if problem == "kcenter":
            dist = body["distances"] if "distances" in body else metric_from_points(body["points"]).tolist()
            return KCenterInstance(tuple(map(tuple, dist)), body["k"], probs())
        if problem == "hybrid":
            base = body_from_json(body["base"]["problem"], body["base"]["instance"])
            return HybridInstance(base, float(body["rho"]), probs("distribution"))
    except (ValueError, TypeError) as exc:
        raise InstanceFormatError(f"{problem}: {exc}") from None
    raise InstanceFormatError(f"unknown problem {problem!r}")


def to_document(inst, ident: str | None = None, oracle: bool | None = None) -> dict:
    problem, body = body_to_json(inst)
    doc = {"problem": problem, "version": VERSION, "instance": body}
    if ident is not None:
        doc["id"] = ident
    if oracle is not None:
        doc["oracle"] = bool(oracle)
    return doc


def dumps(inst, ident: str | None = None, oracle: bool | None = None) -> str:
    return json.dumps(to_document(inst, ident, oracle), sort_keys=True, indent=1) + "\n"


def from_document(doc) -> tuple[object, dict]:
    """(instance, header) from a parsed JSON document."""
    _validate(FILE_SCHEMA, doc, "file")
    inst = body_from_json(doc["problem"], doc["instance"])
    header = {k: doc[k] for k in ("problem", "version", "id", "oracle") if k in doc}
    return inst, header


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return from_document(doc)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
