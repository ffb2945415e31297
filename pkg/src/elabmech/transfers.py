"""Dynamic elaboration VCG transfers, awareness bonuses, and the Clarke family."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapExceeded, MissingValue
from .lattice import strictly_below, topo_ascending
from .welfare import EXCLUDE, efficient_outcome, marginal_efficient_outcome, welfare

ZERO = Fraction(0)


# ---------------------------------------------------------------------------
# Groves families y_i^l(t_{-i})
# ---------------------------------------------------------------------------

class ZeroFamily:
    name = "zero"

    def __call__(self, agent, level, opponents):
        return ZERO


class ConstantFamily:
    def __init__(self, constant):
        self.constant = Fraction(constant)
        self.name = f"constant({self.constant})"

    def __call__(self, agent, level, opponents):
        return self.constant


class TableFamily:
    """Explicit y values keyed by (agent, level, tuple of opponent type ids)."""
    name = "table"

    def __init__(self, table):
        self.table = {k: Fraction(v) for k, v in table.items()}

    def __call__(self, agent, level, opponents):
        key = (agent, level, tuple(t.id for t in opponents))
        try:
            return self.table[key]
        except KeyError:
            raise MissingValue(f"y table has no entry for {key}") from None


class ClarkeFamily:
    """y_i^l(t_{-i}) = -(best welfare the others could reach without agent i at level l)."""

    def __init__(self, scenario, mode=EXCLUDE):
        self.scenario = scenario
        self.mode = mode
        self.name = f"clarke[{mode}]"
        self._cache = {}

    def __call__(self, agent, level, opponents):
        key = (agent, level, opponents)
        hit = self._cache.get(key)
        if hit is None:
            sc = self.scenario
            x = marginal_efficient_outcome(sc.values, sc.outcomes, tuple(opponents), agent,
                                           self.mode, level=level)
            hit = self._cache[key] = -welfare(sc.values, x, opponents)
        return hit


def clarke_family(scenario, mode=EXCLUDE):
    return ClarkeFamily(scenario, mode)


def family_from_config(scenario, config):
    """Resolve a transfer configuration into a Groves family."""
    if config.scheme == "clarke":
        return ClarkeFamily(scenario, config.marginal_mode)
    y = config.y
    if y is None or y == "zero":
        return ZeroFamily()
    if isinstance(y, (int, Fraction)):
        return ConstantFamily(y)
    if isinstance(y, dict):
        return TableFamily(y)
    raise ValueError(f"unrecognised y family {y!r}")


# ---------------------------------------------------------------------------
# f_0 cache and the m recursion
# ---------------------------------------------------------------------------

def f0(scenario, profile):
    """Cached efficient outcome for a common-level profile."""
    cache = scenario.cache.setdefault("f0", {})
    x = cache.get(profile)
    if x is None:
        x = cache[profile] = efficient_outcome(scenario.values, scenario.outcomes, profile)
    return x


def _others(profile, k):
    return profile[:k] + profile[k + 1:]


def m_table(scenario, agent, y, cap=None):
    """Awareness bonus m_i(l) for every level, bottom first.

    The pair maximisation separates: for each own type t_i at the upper level
    the best lower profile and the worst upper completion are found
    independently.
    """
    lat = scenario.lattice
    ts = scenario.types
    vals = scenario.values
    k = scenario.agents.index(agent)
    m = {lat.bottom: ZERO}
    profiles = {lv: list(ts.profiles(lv)) for lv in lat.elements}
    for lv in topo_ascending(lat):
        if lv == lat.bottom:
            continue
        # worst (welfare + y) among upper profiles with a given own type
        floor = {}
        for t in profiles[lv]:
            x = f0(scenario, t)
            s = welfare(vals, x, t) + y(agent, lv, _others(t, k))
            if t[k] not in floor or s < floor[t[k]]:
                floor[t[k]] = s
        best = None
        for low in strictly_below(lat, lv):
            if cap is not None and len(profiles[low]) * len(profiles[lv]) > cap:
                raise CapExceeded(f"m-table pair enumeration {low}->{lv} exceeds cap {cap}")
            gain = None
            for tp in profiles[low]:
                x = f0(scenario, tp)
                opp = _others(tp, k)
                base = welfare(vals, x, opp) + y(agent, low, opp)
                for ti, worst in floor.items():
                    g = vals.value(ti, x) + base - worst
                    if gain is None or g > gain:
                        gain = g
            cand = m[low] + gain
            if best is None or cand > best:
                best = cand
        m[lv] = best
    return m


def bonus_tables(scenario, y, cap=None):
    key = ("bonus", getattr(y, "name", None) or id(y), id(y))
    hit = scenario.cache.get(key)
    if hit is None:
        hit = scenario.cache[key] = {a: m_table(scenario, a, y, cap) for a in scenario.agents}
    return hit


# ---------------------------------------------------------------------------
# trace-level quantities
# ---------------------------------------------------------------------------

def first_full_revealer(trace):
    """The unique agent who first reports at the final pooled level, else None."""
    if not trace.stages:
        return None
    final = trace.announcements[-1]
    for profile in trace.stages:
        hit = [trace.agents[k] for k, t in enumerate(profile) if t.level == final]
        if hit:
            return hit[0] if len(hit) == 1 else None
    return None


def bonus_split(agents, revealer, amount):
    """Revealer gets ``amount``; everybody else pays an equal share of it.

    With a single agent there is nobody to pay, so the bonus is not offset.
    """
    if revealer is None:
        return {a: ZERO for a in agents}
    n = len(agents)
    out = {}
    for a in agents:
        if a == revealer:
            out[a] = Fraction(amount)
        else:
            out[a] = -Fraction(amount) / (n - 1)
    return out


def awareness_adjustment(trace, tables):
    rev = first_full_revealer(trace)
    amount = tables[rev][trace.announcements[-1]] if rev is not None else ZERO
    return bonus_split(trace.agents, rev, amount)


@dataclass(frozen=True)
class TransferResult:
    agents: tuple
    outcome: object
    transfers: dict
    welfare_term: dict = field(repr=False)
    y_term: dict = field(repr=False)
    bonus_term: dict = field(repr=False)
    revealer: object = None

    @property
    def surplus(self):
        return -sum(self.transfers.values(), ZERO)

    def ordered(self):
        return tuple(self.transfers[a] for a in self.agents)


def vcg_transfers(scenario, trace, y, tables=None, with_bonus=True):
    """Transfers paid to each agent at the end of a stopped trace."""
    final = trace.final_profile
    level = trace.announcements[-1]
    x = f0(scenario, final)
    vals = scenario.values
    if with_bonus:
        if tables is None:
            tables = bonus_tables(scenario, y)
        bonus = awareness_adjustment(trace, tables)
    else:
        bonus = {a: ZERO for a in trace.agents}
    if len(trace.agents) > 1 and sum(bonus.values(), ZERO) != 0:
        raise AssertionError(f"awareness bonuses do not cancel: {bonus}")
    w, yy, out = {}, {}, {}
    for k, a in enumerate(trace.agents):
        opp = _others(final, k)
        w[a] = welfare(vals, x, opp)
        yy[a] = y(a, level, opp)
        out[a] = w[a] + yy[a] + bonus[a]
    return TransferResult(tuple(trace.agents), x, out, w, yy, bonus, first_full_revealer(trace))


def surplus(result):
    return result.surplus
