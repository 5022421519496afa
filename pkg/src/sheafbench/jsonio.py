"""JSON input formats and report serialization for the command line.

Space descriptions, bars, and relation tables are plain JSON documents;
the loaders here turn them into the library's objects and validate as they
go.  ``jsonable`` converts arbitrary result objects (transcripts, sieves,
reports) into JSON-ready structures with a deterministic layout, so a run
with a fixed seed always serializes byte-identically.
"""
from __future__ import annotations

import dataclasses
import json
from typing import Mapping

from .double import DOpen, DoubleSpace, SingletonOpen, build_double
from .points import Point, eventually_constant_points
from .site import (
    Basis,
    CoveringSystem,
    FormalSpace,
    GeneratedTopology,
    Sieve,
    UnknownElement,
)
from .spaces import Bar, TruncatedSpace, baire_space, bar_from_generators, cantor_space


class InputError(ValueError):
    """A JSON input document that does not describe a valid object."""


def _require(data: Mapping, key: str, where: str):
    if key not in data:
        raise InputError(f"{where}: missing required key {key!r}")
    return data[key]


def _int(data: Mapping, key: str, where: str, default=None, minimum=1) -> int:
    got = data.get(key, default)
    if got is None:
        raise InputError(f"{where}: missing required key {key!r}")
    if not isinstance(got, int) or got < minimum:
        raise InputError(f"{where}: {key} must be an integer >= {minimum}")
    return got


def space_from_json(data: Mapping) -> FormalSpace:
    """Build a space from its JSON description.

    Kinds: ``cantor`` (depth), ``baire`` (branch, depth), ``double``
    (inner space plus ``max_prefix`` for the point family), and ``finite``
    (explicit elements, order pairs, covering families).
    """
    kind = _require(data, "kind", "space")
    if kind == "cantor":
        return cantor_space(_int(data, "depth", "space"))
    if kind == "baire":
        return baire_space(_int(data, "branch", "space"), _int(data, "depth", "space"))
    if kind == "double":
        inner = space_from_json(_require(data, "inner", "space"))
        if not isinstance(inner, TruncatedSpace):
            raise InputError("space: a double needs a tree space inside")
        max_prefix = _int(data, "max_prefix", "space", default=1)
        return build_double(inner, eventually_constant_points(inner.branch, max_prefix))
    if kind == "finite":
        elements = tuple(_require(data, "elements", "space"))
        if len(set(elements)) != len(elements):
            raise InputError("space: elements must be distinct")
        pairs = {(a, b) for a, b in data.get("leq", [])}
        below: dict = {a: {a} for a in elements}
        for a, b in pairs:
            below.setdefault(b, set()).add(a)
        changed = True
        while changed:
            changed = False
            for b in elements:
                extra = set()
                for a in below[b]:
                    extra |= below[a]
                if not extra <= below[b]:
                    below[b] |= extra
                    changed = True
        basis = Basis(elements, lambda x, y: x in below[y])
        table = {
            a: tuple(tuple(fam) for fam in fams)
            for a, fams in data.get("covers", {}).items()
        }
        try:
            system = CoveringSystem(basis, table)
            system.validate()
        except (UnknownElement, ValueError) as exc:
            raise InputError(f"space: {exc}") from None
        return FormalSpace(basis, GeneratedTopology(system), system)
    raise InputError(f"space: unknown kind {kind!r}")


def bar_from_json(data: Mapping) -> Bar:
    """A bar over a tree space, from generators or an explicit member list."""
    space = space_from_json(data.get("space", data))
    if not isinstance(space, TruncatedSpace):
        raise InputError("bar: bars live over tree spaces")
    monotone = bool(data.get("monotone", True))
    inductive = bool(data.get("inductive", False))
    if "generators" in data:
        if not monotone:
            raise InputError("bar: generator form always yields a monotone bar")
        gens = {tuple(g) for g in data["generators"]}
        bar = bar_from_generators(space, gens, monotone=True)
        if inductive:
            bar = Bar(space, bar.predicate, monotone=True, inductive=True)
        return bar
    members = {tuple(m) for m in _require(data, "members", "bar")}
    for m in members:
        try:
            space.basis.require(m)
        except UnknownElement:
            raise InputError(f"bar: member {m!r} is not an element of the space") from None
    return Bar(space, members.__contains__, monotone=monotone, inductive=inductive)


def _point_from_json(data, branch: int) -> Point:
    if isinstance(data, Mapping):
        prefix = tuple(_require(data, "prefix", "point"))
        tail = _require(data, "tail", "point")
    else:
        raise InputError(f"point: expected an object, got {data!r}")
    entries = set(prefix) | {tail}
    if not all(isinstance(e, int) and 0 <= e < branch for e in entries):
        raise InputError(f"point: entries outside branching {branch}")
    return Point(prefix, tail)


def rel_from_json(data: Mapping) -> tuple:
    """A relation table for the continuity pipeline: ``(space, table)``.

    Builtins ``shift``, ``identity``, and ``constant`` generate their
    tables over the declared point family; an explicit ``table`` lists
    ``{"from": point, "to": point}`` entries.
    """
    space = space_from_json(data.get("space", data))
    if not isinstance(space, TruncatedSpace):
        raise InputError("rel: relation tables live over tree spaces")
    branch = space.branch
    max_prefix = _int(data, "max_prefix", "rel", default=space.depth + 1)
    points = eventually_constant_points(branch, max_prefix)
    builtin = data.get("builtin")
    if builtin == "identity":
        return space, {q: q for q in points}
    if builtin == "shift":
        return space, {
            q: (Point(q.prefix[1:], q.tail) if q.prefix else q) for q in points
        }
    if builtin == "constant":
        image = _point_from_json(_require(data, "value", "rel"), branch)
        return space, {q: image for q in points}
    if builtin is not None:
        raise InputError(f"rel: unknown builtin {builtin!r}")
    table = {}
    for entry in _require(data, "table", "rel"):
        source = _point_from_json(_require(entry, "from", "rel"), branch)
        image = _point_from_json(_require(entry, "to", "rel"), branch)
        table[source] = image
    return space, table


def load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def parse_element(space: FormalSpace, text: str):
    """Parse a basic open named on the command line.

    Tree spaces: ``()``, ``(0,1)``, or bare ``0,1``.  Doubles add
    ``D(...)`` for tree opens and ``{0,1|0}`` for singletons (prefix before
    the bar, tail value after).
    """
    raw = text.strip()
    if isinstance(space, DoubleSpace):
        if raw.startswith("D"):
            seq = _parse_seq(raw[1:], "stage")
            stage = DOpen(seq)
        elif raw.startswith("{") and raw.endswith("}"):
            body = raw[1:-1]
            if "|" not in body:
                raise InputError(f"stage: singleton {text!r} needs a | separator")
            head, _, tail = body.partition("|")
            point = Point(_parse_seq(head, "stage"), int(tail))
            if point not in space.points:
                raise InputError(f"stage: {point} is not in the point family")
            stage = SingletonOpen(point)
        else:
            raise InputError(f"stage: {text!r} is not a double-space open")
    else:
        stage = _parse_seq(raw, "stage")
    try:
        space.basis.require(stage)
    except UnknownElement:
        raise InputError(f"stage: {text!r} is not an element of the space") from None
    return stage


def _parse_seq(raw: str, where: str) -> tuple:
    body = raw.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    body = body.strip()
    if not body:
        return ()
    try:
        return tuple(int(part) for part in body.split(","))
    except ValueError:
        raise InputError(f"{where}: cannot read sequence {raw!r}") from None


def jsonable(obj):
    """Deterministic JSON-ready rendering of result objects."""
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, Point):
        return {"prefix": list(obj.prefix), "tail": obj.tail}
    if isinstance(obj, DOpen):
        return {"D": list(obj.seq)}
    if isinstance(obj, SingletonOpen):
        return {"singleton": jsonable(obj.point)}
    if isinstance(obj, Sieve):
        return {"root": jsonable(obj.root), "generators": jsonable(obj.generators)}
    if isinstance(obj, tuple):
        return [jsonable(x) for x in obj]
    if isinstance(obj, list):
        return [jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        rendered = [jsonable(x) for x in obj]
        return sorted(rendered, key=lambda r: json.dumps(r, sort_keys=True))
    if isinstance(obj, Mapping):
        rendered = {}
        for key, value in obj.items():
            name = key if isinstance(key, str) else json.dumps(jsonable(key))
            rendered[name] = jsonable(value)
        return dict(sorted(rendered.items()))
    if isinstance(obj, BaseException):
        return {"error": type(obj).__name__, "detail": str(obj)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for field in dataclasses.fields(obj):
            if field.name.startswith("_") or not field.compare:
                continue
            out[field.name] = jsonable(getattr(obj, field.name))
        return out
    if callable(obj):
        return {"callable": getattr(obj, "__name__", repr(obj))}
    return {"repr": repr(obj)}


def dump_report(report: Mapping) -> str:
    """Canonical report text: sorted keys, two-space indent, final newline."""
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"
