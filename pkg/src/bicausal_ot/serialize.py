"""JSON schemas and canonical serialization.

Canonical payloads carry no floats and no timestamps: masses and values are
reduced "num/den" strings, coordinates are decimal strings, slot indices are
integers. Dumps sort object keys and emit lists in canonical order, so equal
values serialize to identical bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from ._util import format_decimal, format_rational, parse_decimal, parse_rational
from .couplings import Coupling
from .errors import SchemaError
from .lifting import AdaptedBijection, LiftResult, RefinementPlan
from .measures import PathMeasure
from .spaces import PathSpace, Point, StepAlphabet

SCHEMA = "bicausal-ot/1"


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def _label_to_json(label):
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return [_label_to_json(part) if not isinstance(part, int) else part for part in label]
    raise SchemaError(f"label {label!r} is not serializable")


def _label_from_json(obj):
    if isinstance(obj, str):
        return obj
    if isinstance(obj, list):
        return tuple(_label_from_json(p) if not isinstance(p, int) else p for p in obj)
    raise SchemaError(f"label {obj!r} is not a string or list")


def dump_space(space: PathSpace) -> dict:
    return {
        "steps": [
            {
                "metric": step.metric,
                "points": [
                    {
                        "label": _label_to_json(p.label),
                        "coord": [format_decimal(c) for c in p.coord],
                    }
                    for p in step.points
                ],
            }
            for step in space.steps
        ]
    }


def parse_space(obj: dict) -> PathSpace:
    if not isinstance(obj, dict) or "steps" not in obj:
        raise SchemaError("space object needs a 'steps' list")
    steps = []
    for step in obj["steps"]:
        points = tuple(
            Point(_label_from_json(p["label"]), tuple(parse_decimal(c) for c in p["coord"]))
            for p in step["points"]
        )
        steps.append(StepAlphabet(points, step.get("metric", "euclidean")))
    return PathSpace(tuple(steps))


def dump_measure(measure: PathMeasure) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "measure",
        **dump_space(measure.space),
        "mass": [
            {"path": [_label_to_json(lab) for lab in path], "value": format_rational(v)}
            for path, v in measure.items()
        ],
    }


def parse_measure(obj: dict) -> PathMeasure:
    if obj.get("kind") not in (None, "measure"):
        raise SchemaError(f"expected a measure, got kind {obj.get('kind')!r}")
    space = parse_space(obj)
    mass: dict = {}
    for row in obj.get("mass", []):
        path = tuple(_label_from_json(lab) for lab in row["path"])
        value = parse_rational(row["value"])
        mass[path] = mass.get(path, Fraction(0)) + value
    return PathMeasure(space, mass)


def dump_coupling(pi: Coupling) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "coupling",
        "left": dump_space(pi.left),
        "right": dump_space(pi.right),
        "mass": [
            {
                "pair": [
                    [_label_to_json(lab) for lab in x],
                    [_label_to_json(lab) for lab in y],
                ],
                "value": format_rational(v),
            }
            for (x, y), v in pi.items()
        ],
    }


def parse_coupling(obj: dict) -> Coupling:
    if obj.get("kind") not in (None, "coupling"):
        raise SchemaError(f"expected a coupling, got kind {obj.get('kind')!r}")
    left = parse_space(obj["left"])
    right = parse_space(obj["right"])
    mass: dict = {}
    for row in obj.get("mass", []):
        xs, ys = row["pair"]
        pair = (
            tuple(_label_from_json(lab) for lab in xs),
            tuple(_label_from_json(lab) for lab in ys),
        )
        mass[pair] = mass.get(pair, Fraction(0)) + parse_rational(row["value"])
    return Coupling(left, right, mass)


def _micro_path_to_json(mp) -> list:
    return [[_label_to_json(lab), k] for lab, k in mp]


def _micro_path_from_json(obj) -> tuple:
    return tuple((_label_from_json(lab), k) for lab, k in obj)


def dump_bijection(bijection: AdaptedBijection) -> dict:
    """Per-step component tables in both directions (prefix, next output)."""
    out = {}
    for direction in ("forward", "inverse"):
        tables = bijection.component_tables(direction)
        out[direction] = [
            [
                {
                    "prefix": _micro_path_to_json(prefix),
                    "out": [_label_to_json(coord[0]), coord[1]],
                }
                for prefix, coord in sorted(table.items())
            ]
            for table in tables
        ]
    return out


def parse_bijection(obj: dict, left_space: PathSpace, right_space: PathSpace) -> AdaptedBijection:
    def walk(tables):
        n = len(tables)
        if n == 0:
            return {}
        lookup = [
            { _micro_path_from_json(e["prefix"]): (_label_from_json(e["out"][0]), e["out"][1]) for e in tables[t] }
            for t in range(n)
        ]
        full = {}
        for prefix in lookup[n - 1]:
            out = []
            for t in range(n):
                out.append(lookup[t][prefix[: t + 1]])
            full[prefix] = tuple(out)
        return full

    forward = walk(obj["forward"])
    inverse = walk(obj["inverse"])
    return AdaptedBijection(left_space, right_space, forward, inverse)


def dump_lift(result: LiftResult, base: Coupling, mode: str) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "lift",
        "mode": mode,
        "plan": list(result.plan.denominators),
        "base": dump_coupling(base),
        "micro_coupling": dump_coupling(result.lifted),
        "bijection": dump_bijection(result.bijection),
    }


def parse_lift(obj: dict):
    """Returns (mode, plan, base coupling, micro coupling, bijection)."""
    if obj.get("kind") != "lift":
        raise SchemaError(f"expected a lift artifact, got kind {obj.get('kind')!r}")
    base = parse_coupling(obj["base"])
    micro = parse_coupling(obj["micro_coupling"])
    bijection = parse_bijection(obj["bijection"], micro.left, micro.right)
    plan = RefinementPlan(tuple(obj["plan"]))
    return obj["mode"], plan, base, micro, bijection


def assert_float_free(obj: Any, where: str = "$") -> None:
    """Canonical payloads must not contain floating-point numbers."""
    if isinstance(obj, float):
        raise SchemaError(f"float found in canonical payload at {where}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            assert_float_free(v, f"{where}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            assert_float_free(v, f"{where}[{i}]")
