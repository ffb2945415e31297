"""Payoff types indexed by awareness level, and the projections between them."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from . import lattice as L
from .errors import NotComparable, UnknownElement, ValidationError


@dataclass(frozen=True, order=True)
class PayoffType:
    agent: str
    level: str
    id: str

    def __str__(self):
        return f"{self.id}@{self.level}"


@dataclass(frozen=True)
class NatureDraw:
    true_types: tuple[PayoffType, ...]   # one per agent, all at the top level
    awareness: tuple[str, ...]            # initial awareness level per agent


@dataclass(frozen=True)
class AgentState:
    agent: str
    current_awareness: str
    perceived_type: PayoffType


@dataclass(frozen=True, eq=False)
class TypeSystem:
    lattice: L.AwarenessLattice
    agents: tuple[str, ...]
    spaces: dict = field(repr=False)        # (agent, level) -> tuple[PayoffType]
    projections: dict = field(repr=False)   # (agent, from_level, to_level) -> {from_id: to_id}
    problems: tuple = ()                     # projection-law violations found while building

    def space(self, agent, level):
        try:
            return self.spaces[agent, level]
        except KeyError:
            raise UnknownElement(f"no type space for agent {agent!r} at level {level!r}") from None

    def profiles(self, level):
        """All type profiles at one common level, agents in declared order."""
        return product(*(self.spaces[a, level] for a in self.agents))

    def all_types(self, agent):
        return [t for lv in self.lattice.elements for t in self.spaces[agent, lv]]

    def get(self, agent, level, type_id):
        t = PayoffType(agent, level, type_id)
        if t not in self._members:
            raise UnknownElement(f"agent {agent!r} has no type {type_id!r} at level {level!r}")
        return t

    @property
    def _members(self):
        cache = self.__dict__.get("_member_cache")
        if cache is None:
            cache = frozenset(t for ts in self.spaces.values() for t in ts)
            object.__setattr__(self, "_member_cache", cache)
        return cache


def _complete(lat, agent, ids, given):
    """Close the given projection maps under identity, composition and forced
    singleton targets. Returns (maps, conflicts)."""
    maps = {}
    conflicts = []
    for lv in lat.elements:
        maps[lv, lv] = {t: t for t in ids[lv]}
    for (k, l), m in given.items():
        if k == l:
            continue
        maps[k, l] = dict(m)
    comparable = [(k, l) for k in lat.elements for l in lat.elements
                  if k != l and (l, k) in lat.order]
    changed = True
    while changed:
        changed = False
        for k, l in comparable:
            if (k, l) in maps:
                continue
            for m in lat.elements:
                if m in (k, l) or (k, m) not in maps or (m, l) not in maps:
                    continue
                first, second = maps[k, m], maps[m, l]
                if all(first.get(t) in second for t in ids[k]):
                    maps[k, l] = {t: second[first[t]] for t in ids[k]}
                    changed = True
                    break
            else:
                if len(ids[l]) == 1:
                    (only,) = ids[l]
                    maps[k, l] = {t: only for t in ids[k]}
                    changed = True
    for k, l in comparable:
        if (k, l) not in maps:
            conflicts.append(f"agent {agent}: no projection from {k} to {l} (not given and not derivable)")
    return maps, conflicts


def build_type_system(lattice, agents, type_ids, projections=()):
    """Build a type system.

    ``type_ids`` maps ``(agent, level)`` to a list of ids; ``projections`` is an
    iterable of ``(agent, from_level, to_level, {from_id: to_id})``. Missing
    projections are completed by composition (and trivially when the target
    space is a singleton); law violations are recorded in ``problems``.
    """
    agents = tuple(agents)
    spaces = {}
    for a in agents:
        for lv in lattice.elements:
            ids = list(type_ids.get((a, lv), ()))
            if not ids:
                raise ValidationError(f"agent {a!r} has an empty type space at level {lv!r}")
            if len(set(ids)) != len(ids):
                raise ValidationError(f"duplicate type ids for agent {a!r} at level {lv!r}")
            spaces[a, lv] = tuple(PayoffType(a, lv, i) for i in ids)

    given = {a: {} for a in agents}
    problems = []
    for agent, k, l, m in projections:
        if agent not in given:
            raise ValidationError(f"projection for unknown agent {agent!r}")
        lattice.check(k, l)
        if (l, k) not in lattice.order:
            raise ValidationError(f"projection from {k} to {l} for agent {agent}: levels not comparable")
        known_from = {t.id for t in spaces[agent, k]}
        known_to = {t.id for t in spaces[agent, l]}
        for src, dst in m.items():
            if src not in known_from:
                raise ValidationError(f"projection {agent}:{k}->{l} references unknown type id {src!r}")
            if dst not in known_to:
                raise ValidationError(f"projection {agent}:{k}->{l} references unknown type id {dst!r}")
        given[agent][k, l] = dict(m)

    maps = {}
    for a in agents:
        ids = {lv: [t.id for t in spaces[a, lv]] for lv in lattice.elements}
        agent_maps, conflicts = _complete(lattice, a, ids, given[a])
        problems.extend(conflicts)
        for (k, l), m in agent_maps.items():
            maps[a, k, l] = m
    ts = TypeSystem(lattice, agents, spaces, maps, ())
    problems.extend(validate_type_system(ts))
    return TypeSystem(lattice, agents, spaces, maps, tuple(problems))


def validate_type_system(ts):
    """Check totality, surjectivity, identity and composition of every projection.

    Returns a list of violation messages (empty means the system is valid).
    """
    lat = ts.lattice
    bad = []
    for a in ts.agents:
        for k in lat.elements:
            for l in lat.elements:
                if (l, k) not in lat.order:
                    continue
                m = ts.projections.get((a, k, l))
                if m is None:
                    continue
                src = [t.id for t in ts.spaces[a, k]]
                dst = {t.id for t in ts.spaces[a, l]}
                for t in src:
                    if m.get(t) not in dst:
                        bad.append(f"agent {a}: projection {k}->{l} does not map {t} into T^{l}")
                hit = set(m.values())
                for t in sorted(dst - hit):
                    bad.append(f"agent {a}: projection {k}->{l} is not surjective, {t}@{l} has no preimage")
                if k == l and any(m.get(t) != t for t in src):
                    bad.append(f"agent {a}: projection {k}->{k} is not the identity")
        for k, mid, l in product(lat.elements, repeat=3):
            if (mid, k) not in lat.order or (l, mid) not in lat.order:
                continue
            outer = ts.projections.get((a, k, l))
            first = ts.projections.get((a, k, mid))
            second = ts.projections.get((a, mid, l))
            if outer is None or first is None or second is None:
                continue
            for t in ts.spaces[a, k]:
                via = second.get(first.get(t.id))
                if via != outer.get(t.id):
                    bad.append(f"agent {a}: composition fails for {t.id}@{k} via {mid} to {l}: "
                               f"{via} != {outer.get(t.id)}")
    return bad


def project(ts, t, target):
    lat = ts.lattice
    lat.check(target)
    if (target, t.level) not in lat.order:
        raise NotComparable(f"cannot project {t} to {target}: {target} is not below {t.level}")
    if target == t.level:
        return t
    try:
        return PayoffType(t.agent, target, ts.projections[t.agent, t.level, target][t.id])
    except KeyError:
        raise UnknownElement(f"no projection for {t} to {target}") from None


def upset(ts, t, at_or_above=None):
    """Types at levels >= level(t) v at_or_above that project down to ``t``."""
    lat = ts.lattice
    floor = t.level if at_or_above is None else lat.join_table[t.level, at_or_above]
    out = set()
    for lv in lat.elements:
        if (floor, lv) not in lat.order:
            continue
        m = ts.projections[t.agent, lv, t.level]
        out.update(u for u in ts.spaces[t.agent, lv] if m[u.id] == t.id)
    return out


def pooled_awareness(ts, profile):
    lat = ts.lattice
    out = lat.bottom
    for t in profile:
        out = lat.join_table[out, t.level]
    return out


def perceive(ts, draw, agent, at_level=None):
    """State of ``agent`` after its awareness is raised by ``at_level``."""
    k = ts.agents.index(agent)
    lat = ts.lattice
    aw = draw.awareness[k] if at_level is None else lat.join_table[draw.awareness[k], at_level]
    return AgentState(agent, aw, project(ts, draw.true_types[k], aw))


def make_draw(ts, true_ids, awareness):
    """Build a draw from per-agent top-level type ids and awareness levels."""
    top = ts.lattice.top
    types = tuple(ts.get(a, top, true_ids[k]) for k, a in enumerate(ts.agents))
    for lv in awareness:
        ts.lattice.check(lv)
    return NatureDraw(types, tuple(awareness))


def all_draws(ts):
    """Every combination of top-level types and initial awareness levels."""
    top = ts.lattice.top
    tops = [ts.spaces[a, top] for a in ts.agents]
    levels = [ts.lattice.elements] * len(ts.agents)
    for tt in product(*tops):
        for aw in product(*levels):
            yield NatureDraw(tuple(tt), tuple(aw))
