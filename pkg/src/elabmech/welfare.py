"""Outcome spaces, value tables and the (marginal) efficient outcome functions.

All money quantities are :class:`fractions.Fraction`. Argmax ties are broken
by the smallest outcome label, the same rule everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EmptyOutcomeSpace, MissingValue, ValidationError

LITERAL = "literal"
EXCLUDE = "exclude-participation"
MARGINAL_MODES = (LITERAL, EXCLUDE)


@dataclass(frozen=True, order=True)
class Outcome:
    id: str
    requires_agents: frozenset = frozenset()


@dataclass(frozen=True, eq=False)
class OutcomeSpaces:
    by_level: dict = field(repr=False)   # level -> tuple[Outcome] sorted by id

    def at(self, level):
        try:
            return self.by_level[level]
        except KeyError:
            raise EmptyOutcomeSpace(f"no outcome space declared at level {level!r}") from None

    def outcome(self, oid):
        for outs in self.by_level.values():
            for o in outs:
                if o.id == oid:
                    return o
        raise KeyError(oid)


def build_outcome_spaces(lattice, listing, requires=None, agents=None):
    """``listing`` maps level -> iterable of outcome ids; ``requires`` maps id -> agents."""
    requires = requires or {}
    by_level = {}
    for lv in lattice.elements:
        ids = sorted(set(listing.get(lv, ())))
        if not ids:
            raise ValidationError(f"outcome space at level {lv!r} is empty")
        by_level[lv] = tuple(Outcome(i, frozenset(requires.get(i, ()))) for i in ids)
    if agents is not None:
        for oid, req in requires.items():
            extra = set(req) - set(agents)
            if extra:
                raise ValidationError(f"outcome {oid!r} requires unknown agents {sorted(extra)}")
    spaces = OutcomeSpaces(by_level)
    bad = nesting_violations(lattice, spaces)
    if bad:
        raise ValidationError("outcome spaces are not nested", bad)
    return spaces


def nesting_violations(lattice, spaces):
    bad = []
    for lo, hi in lattice.order:
        missing = {o.id for o in spaces.by_level[lo]} - {o.id for o in spaces.by_level[hi]}
        if missing:
            bad.append(f"outcomes {sorted(missing)} available at {lo} but not at {hi}")
    return bad


class ValueTable:
    """v_i(x0, t_i) for every type and every outcome expressible at or below its level."""

    def __init__(self, entries):
        # (agent, level, type_id, outcome_id) -> Fraction
        self.entries = {k: Fraction(v) for k, v in entries.items()}

    def value(self, t, outcome):
        oid = outcome.id if isinstance(outcome, Outcome) else outcome
        try:
            return self.entries[t.agent, t.level, t.id, oid]
        except KeyError:
            raise MissingValue(f"no value for agent {t.agent} type {t} at outcome {oid!r}") from None

    def missing(self, types, spaces):
        """(type, outcome id) pairs the invariant requires but the table lacks."""
        lat = types.lattice
        out = []
        for a in types.agents:
            for lv in lat.elements:
                need = {o.id for o in spaces.at(lv)}
                for t in types.spaces[a, lv]:
                    out.extend((t, oid) for oid in sorted(need)
                               if (a, lv, t.id, oid) not in self.entries)
        return out


def _common_level(profile, level):
    if level is not None:
        return level
    levels = {t.level for t in profile}
    if len(levels) != 1:
        raise ValueError(f"profile mixes awareness levels {sorted(levels)}")
    return levels.pop()


def welfare(values, x0, profile):
    return sum((values.value(t, x0) for t in profile), Fraction(0))


def _argmax(candidates, score):
    if not candidates:
        raise EmptyOutcomeSpace("no feasible outcome")
    best, best_val = None, None
    for o in candidates:          # candidates are sorted by id: first max wins ties
        s = score(o)
        if best_val is None or s > best_val:
            best, best_val = o, s
    return best


def efficient_outcome(values, spaces, profile, level=None):
    """f_0: welfare maximiser over the outcome space at the profile's level."""
    lv = _common_level(profile, level)
    return _argmax(spaces.at(lv), lambda o: welfare(values, o, profile))


def marginal_efficient_outcome(values, spaces, profile, excluded, mode=EXCLUDE, level=None):
    """f^{-i}_0: maximiser of the others' welfare.

    ``excluded`` names the left-out agent. In exclude-participation mode,
    outcomes that require that agent are dropped.
    """
    if mode not in MARGINAL_MODES:
        raise ValueError(f"unknown marginal mode {mode!r}")
    lv = _common_level(profile, level)
    others = [t for t in profile if t.agent != excluded]
    cands = spaces.at(lv)
    if mode == EXCLUDE:
        cands = tuple(o for o in cands if excluded not in o.requires_agents)
        if not cands:
            raise EmptyOutcomeSpace(f"every outcome at {lv} requires agent {excluded}")
    return _argmax(cands, lambda o: welfare(values, o, others))


def utility(values, x0, transfer, t):
    return values.value(t, x0) + Fraction(transfer)
