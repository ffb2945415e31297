"""Scenario files: parsing, validation, serialisation, and trace records.

Everything is JSON. Money values are exact rational strings such as ``"-80"``
or ``"41/2"``; floats are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import jsonschema

from . import lattice as L
from .errors import (ElabError, SchemaError, ScenarioSyntaxError, UnknownElement,
                     ValidationError)
from .typesystem import all_draws, build_type_system, make_draw
from .welfare import EXCLUDE, MARGINAL_MODES, ValueTable, build_outcome_spaces

_RATIONAL = {"type": ["string", "integer"],
             "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["agents", "lattice", "types", "outcomes", "values"],
    "properties": {
        "agents": {"type": "array", "minItems": 1, "uniqueItems": True,
                   "items": {"type": "string", "minLength": 1}},
        "lattice": {
            "oneOf": [
                {"type": "object", "required": ["kind", "items"],
                 "properties": {"kind": {"const": "powerset"},
                                "items": {"type": "array", "items": {"type": "string"},
                                          "uniqueItems": True}}},
                {"type": "object", "required": ["kind", "elements"],
                 "properties": {"kind": {"const": "explicit"},
                                "elements": {"type": "array", "minItems": 1,
                                             "items": {"type": "string"}},
                                "order": {"type": "array",
                                          "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                                    "items": {"type": "string"}}}}},
            ]},
        "types": {"type": "object",
                  "additionalProperties": {
                      "type": "object",
                      "additionalProperties": {"type": "array", "minItems": 1,
                                               "items": {"type": "string"}}}},
        "projections": {"type": "array", "items": {
            "type": "object", "required": ["agent", "from_level", "to_level", "map"],
            "properties": {"agent": {"type": "string"}, "from_level": {"type": "string"},
                           "to_level": {"type": "string"},
                           "map": {"type": "object", "additionalProperties": {"type": "string"}}}}},
        "outcomes": {"type": "object", "required": ["levels"],
                     "properties": {
                         "levels": {"type": "object", "additionalProperties": {
                             "type": "array", "items": {"type": "string"}}},
                         "requires_agents": {"type": "object", "additionalProperties": {
                             "type": "array", "items": {"type": "string"}}}}},
        "values": {"type": "object", "additionalProperties": {
            "type": "object", "additionalProperties": {
                "type": "object", "additionalProperties": {
                    "type": "object", "additionalProperties": _RATIONAL}}}},
        "draws": {"oneOf": [
            {"const": "all"},
            {"type": "array", "items": {
                "type": "object", "required": ["true_types", "awareness"],
                "properties": {"true_types": {"type": "object"},
                               "awareness": {"type": "object"}}}}]},
        "scheme": {"type": "object", "properties": {
            "scheme": {"enum": ["clarke", "vcg"]},
            "marginal_mode": {"enum": list(MARGINAL_MODES)},
            "y": {}}},
    },
}


@dataclass(frozen=True)
class TransferConfig:
    scheme: str = "clarke"
    marginal_mode: str = EXCLUDE
    y: object = None           # "zero", a Fraction constant, or an explicit table

    def to_json(self):
        out = {"scheme": self.scheme}
        if self.scheme == "clarke":
            out["marginal_mode"] = self.marginal_mode
        elif isinstance(self.y, dict):
            table = {}
            for (agent, level, opp), v in sorted(self.y.items()):
                table.setdefault(agent, {}).setdefault(level, {})["|".join(opp)] = str(v)
            out["y"] = table
        elif self.y is not None and self.y != "zero":
            out["y"] = str(self.y)
        else:
            out["y"] = "zero"
        return out


@dataclass(frozen=True, eq=False)
class Scenario:
    lattice: L.AwarenessLattice
    types: object
    outcomes: object
    values: ValueTable
    agents: tuple
    draws: object = "all"          # tuple of NatureDraw, or "all"
    scheme: TransferConfig = TransferConfig()
    name: str = ""
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def iter_draws(self):
        if self.draws == "all":
            return all_draws(self.types)
        return iter(self.draws)


def _rational(v, where):
    try:
        return Fraction(str(v).replace(" ", ""))
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"{where}: {v!r} is not an exact rational") from None


def _build_lattice(raw):
    if raw["kind"] == "powerset":
        return L.powerset_lattice(raw["items"])
    return L.build_lattice(raw["elements"], [tuple(p) for p in raw.get("order", [])],
                           source={"kind": "explicit", "elements": list(raw["elements"]),
                                   "order": [list(p) for p in raw.get("order", [])]})


def _parse_scheme(raw):
    if raw is None:
        return TransferConfig()
    scheme = raw.get("scheme", "clarke")
    if scheme == "clarke":
        return TransferConfig("clarke", raw.get("marginal_mode", EXCLUDE))
    y = raw.get("y", "zero")
    if isinstance(y, dict):
        table = {}
        for agent, per_level in y.items():
            for level, entries in per_level.items():
                for key, v in entries.items():
                    opp = tuple(key.split("|")) if key else ()
                    table[agent, level, opp] = _rational(v, f"scheme.y.{agent}.{level}.{key}")
        return TransferConfig("vcg", raw.get("marginal_mode", EXCLUDE), table)
    if y == "zero":
        return TransferConfig("vcg", raw.get("marginal_mode", EXCLUDE), "zero")
    return TransferConfig("vcg", raw.get("marginal_mode", EXCLUDE), _rational(y, "scheme.y"))


def scenario_from_dict(data, name=""):
    """Validate a decoded scenario document and build the Scenario."""
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{path}: {e.message}") from None

    agents = tuple(data["agents"])
    try:
        lat = _build_lattice(data["lattice"])
    except ElabError as e:
        raise ValidationError(f"lattice: {e}") from e

    raw_types = data["types"]
    type_ids = {}
    for agent, per_level in raw_types.items():
        if agent not in agents:
            raise ValidationError(f"types: unknown agent {agent!r}")
        for level, ids in per_level.items():
            if level not in lat:
                raise ValidationError(f"types.{agent}: unknown level {level!r}")
            type_ids[agent, level] = ids
    projections = [(p["agent"], p["from_level"], p["to_level"], p["map"])
                   for p in data.get("projections", [])]
    try:
        ts = build_type_system(lat, agents, type_ids, projections)
    except UnknownElement as e:
        raise ValidationError(f"projections: {e}") from e
    if ts.problems:
        raise ValidationError("type system violates the projection laws", ts.problems)

    outs = data["outcomes"]
    for level in outs["levels"]:
        if level not in lat:
            raise ValidationError(f"outcomes.levels: unknown level {level!r}")
    spaces = build_outcome_spaces(lat, outs["levels"], outs.get("requires_agents"), agents)

    entries = {}
    for agent, per_level in data["values"].items():
        for level, per_type in per_level.items():
            for tid, per_outcome in per_type.items():
                try:
                    ts.get(agent, level, tid)
                except UnknownElement as e:
                    raise ValidationError(f"values: {e}") from None
                for oid, v in per_outcome.items():
                    entries[agent, level, tid, oid] = _rational(
                        v, f"values.{agent}.{level}.{tid}.{oid}")
    values = ValueTable(entries)
    missing = values.missing(ts, spaces)
    if missing:
        shown = [f"{t.agent}:{t}:{oid}" for t, oid in missing[:10]]
        raise ValidationError(f"value table misses {len(missing)} entries, e.g. {shown}")

    raw_draws = data.get("draws", "all")
    if raw_draws == "all":
        draws = "all"
    else:
        draws = []
        for k, d in enumerate(raw_draws):
            try:
                draws.append(make_draw(ts, [d["true_types"][a] for a in agents],
                                       [d["awareness"][a] for a in agents]))
            except (KeyError, UnknownElement) as e:
                raise ValidationError(f"draws[{k}]: {e}") from None
        draws = tuple(draws)

    return Scenario(lat, ts, spaces, values, agents, draws, _parse_scheme(data.get("scheme")),
                    name=name or data.get("name", ""))


def parse_scenario(text, name=""):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return scenario_from_dict(data, name)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), name=str(path))


def scenario_to_dict(sc):
    lat, ts = sc.lattice, sc.types
    out = {"agents": list(sc.agents), "lattice": lat.to_json()}
    out["types"] = {a: {lv: [t.id for t in ts.spaces[a, lv]] for lv in lat.elements}
                    for a in sc.agents}
    projs = []
    for a in sc.agents:
        for lo, hi in sorted(L.covering_pairs(lat)):
            projs.append({"agent": a, "from_level": hi, "to_level": lo,
                          "map": dict(ts.projections[a, hi, lo])})
    out["projections"] = projs
    requires = {o.id: sorted(o.requires_agents)
                for lv in lat.elements for o in sc.outcomes.at(lv) if o.requires_agents}
    out["outcomes"] = {"levels": {lv: [o.id for o in sc.outcomes.at(lv)] for lv in lat.elements},
                       "requires_agents": requires}
    vals = {}
    for (a, lv, tid, oid), v in sorted(sc.values.entries.items()):
        vals.setdefault(a, {}).setdefault(lv, {}).setdefault(tid, {})[oid] = str(v)
    out["values"] = vals
    if sc.draws == "all":
        out["draws"] = "all"
    else:
        out["draws"] = [{"true_types": {a: t.id for a, t in zip(sc.agents, d.true_types)},
                         "awareness": dict(zip(sc.agents, d.awareness))} for d in sc.draws]
    out["scheme"] = sc.scheme.to_json()
    if sc.name:
        out["name"] = sc.name
    return out


def serialize_scenario(sc):
    return json.dumps(scenario_to_dict(sc), indent=1, sort_keys=False, ensure_ascii=False)


def example1_text():
    return resources.files("elabmech.data").joinpath("example1.json").read_text(encoding="utf-8")


def example1():
    """The procurement example: two sellers with item-cost tables and a buyer."""
    return parse_scenario(example1_text(), name="example1")


def trace_records(trace, result=None):
    """JSON-lines records: one per stage, then a terminal summary."""
    recs = []
    for k, (profile, ann) in enumerate(zip(trace.stages, trace.announcements), start=1):
        recs.append({"stage": k,
                     "reports": {a: t.id for a, t in zip(trace.agents, profile)},
                     "levels": {a: t.level for a, t in zip(trace.agents, profile)},
                     "announcement": ann})
    final = {"final_profile": {a: t.id for a, t in zip(trace.agents, trace.final_profile)},
             "final_level": trace.final_level, "stopped": trace.stopped}
    if result is not None:
        final["outcome"] = result.outcome.id
        final["transfers"] = {a: str(v) for a, v in result.transfers.items()}
        final["awareness_bonus"] = {a: str(v) for a, v in result.bonus_term.items()}
        final["revealer"] = result.revealer
        final["surplus"] = str(result.surplus)
    recs.append(final)
    return recs


def dump_trace(trace, result=None):
    return "\n".join(json.dumps(r, ensure_ascii=False) for r in trace_records(trace, result))
