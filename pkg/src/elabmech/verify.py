"""Brute-force checkers for efficiency, conditional dominance, no deficit and
stage bounds, plus an unrolled oracle for the awareness-bonus recursion.

Every checker returns a :class:`VerificationReport`. A failing report always
carries a counterexample that can be fed back through :func:`engine.run` and
:func:`transfers.vcg_transfers`.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from . import lattice as L
from .engine import TableStrategy, TruthTelling, admissible_set, run, stage_cap
from .errors import CapExceeded
from .scenario import Scenario
from .transfers import (ClarkeFamily, ZeroFamily, bonus_split, bonus_tables, f0,
                        family_from_config, vcg_transfers)
from .typesystem import NatureDraw, TypeSystem, project
from .welfare import LITERAL, OutcomeSpaces, ValueTable, welfare

DEFAULT_CAP = 5_000_000
ZERO = Fraction(0)


def default_cap():
    env = os.environ.get("ELABMECH_CAP")
    return int(env) if env else DEFAULT_CAP


@dataclass
class VerificationReport:
    property: str
    status: str = "pass"            # pass | fail | capped
    counterexample: dict = None
    stats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.status == "pass"

    def fail(self, counterexample):
        self.status = "fail"
        self.counterexample = counterexample
        return self

    def to_json(self):
        cx = self.counterexample
        if isinstance(cx, dict):
            cx = {k: v for k, v in cx.items() if not k.startswith("_")}
        return {"property": self.property, "status": self.status,
                "counterexample": _jsonable(cx),
                "stats": _jsonable(self.stats), "notes": list(self.notes)}


def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def _profile_json(profile):
    return [f"{t.agent}:{t.id}@{t.level}" for t in profile]


# ---------------------------------------------------------------------------
# sub-scenarios
# ---------------------------------------------------------------------------

def restrict_scenario(sc, level, draws=None):
    """The game as perceived by an agent whose awareness is ``level``:
    everything at or below ``level``, with ``level`` as the top."""
    sub = L.sublattice(sc.lattice, level)
    keep = set(sub.elements)
    ts = sc.types
    spaces = {(a, lv): v for (a, lv), v in ts.spaces.items() if lv in keep}
    maps = {(a, k, l): m for (a, k, l), m in ts.projections.items() if k in keep and l in keep}
    types = TypeSystem(sub, ts.agents, spaces, maps, ())
    outcomes = OutcomeSpaces({lv: v for lv, v in sc.outcomes.by_level.items() if lv in keep})
    values = ValueTable({k: v for k, v in sc.values.entries.items() if k[1] in keep})
    return Scenario(sub, types, outcomes, values, sc.agents,
                    "all" if draws is None else tuple(draws), sc.scheme,
                    name=f"{sc.name}|{level}")


# ---------------------------------------------------------------------------
# efficiency and pooled implementation
# ---------------------------------------------------------------------------

def check_efficiency(sc, outcome_fn=None, cap=None):
    """Every profile's chosen outcome maximises total value over its level's outcomes."""
    cap = default_cap() if cap is None else cap
    choose = outcome_fn or (lambda p: f0(sc, p))
    rep = VerificationReport("efficiency")
    n = 0
    for lv in sc.lattice.elements:
        feasible = sc.outcomes.at(lv)
        for prof in sc.types.profiles(lv):
            n += 1
            if n > cap:
                rep.status = "capped"
                rep.stats["profiles"] = n - 1
                return rep
            x = choose(prof)
            if x not in feasible:
                return rep.fail({"level": lv, "profile": _profile_json(prof),
                                 "chosen": x.id, "reason": "outcome not available at this level"})
            wx = welfare(sc.values, x, prof)
            for z in feasible:
                wz = welfare(sc.values, z, prof)
                if wz > wx:
                    rep.stats["profiles"] = n
                    return rep.fail({"level": lv, "profile": _profile_json(prof), "chosen": x.id,
                                     "chosen_welfare": wx, "better": z.id, "better_welfare": wz})
    rep.stats["profiles"] = n
    return rep


def pooled_target(sc, draw):
    lat = sc.lattice
    pooled = L.join_all(lat, draw.awareness)
    return tuple(project(sc.types, t, pooled) for t in draw.true_types)


def check_pooled_implementation(sc, draws=None):
    """Truthful play implements f_0 of the true types projected to the pooled awareness."""
    rep = VerificationReport("pooled-implementation")
    draws = sc.iter_draws() if draws is None else draws
    n = 0
    for d in draws:
        n += 1
        tr = run(sc, d, [TruthTelling() for _ in sc.agents])
        got = f0(sc, tr.final_profile)
        want = f0(sc, pooled_target(sc, d))
        if got != want:
            rep.stats["draws"] = n
            return rep.fail({"draw": _draw_json(sc, d), "implemented": got.id, "expected": want.id,
                             "trace": [_profile_json(p) for p in tr.stages]})
    rep.stats["draws"] = n
    return rep


def _draw_json(sc, d):
    return {"true_types": {a: t.id for a, t in zip(sc.agents, d.true_types)},
            "awareness": dict(zip(sc.agents, d.awareness))}


# ---------------------------------------------------------------------------
# compact game-tree machinery shared by the remaining checkers
# ---------------------------------------------------------------------------
# A node is (profile, announcement, revealer, stopped). ``revealer`` tracks who
# first reported at the current announcement: -1 nobody yet, -2 a tie, else the
# agent's position. Levels below the current announcement can never become
# the final pooled level, so nothing else about the history affects transfers.

NOBODY, TIE = -1, -2
ROOT = (None, None, NOBODY, False)


class _Game:
    def __init__(self, sc):
        self.sc = sc
        self.lat = sc.lattice
        self.ts = sc.types
        self.n = len(sc.agents)
        self._adm = {}

    def admissible(self, k, prev, ann, aw):
        key = (k, prev, ann, aw)
        hit = self._adm.get(key)
        if hit is None:
            hit = self._adm[key] = tuple(admissible_set(self.ts, self.sc.agents[k], aw, prev, ann))
        return hit

    def aware(self, own, ann):
        return own if ann is None else self.lat.join_table[own, ann]

    def step(self, node, reports):
        prof, ann, rev, _ = node
        J = self.lat.join_table
        new = reports[0].level
        for t in reports[1:]:
            new = J[new, t.level]
        if new != ann or rev == NOBODY:
            at = [k for k, t in enumerate(reports) if t.level == new]
            rev = NOBODY if not at else (at[0] if len(at) == 1 else TIE)
        return (reports, new, rev, reports == prof)


def _replay_trace(game, reports_seq):
    node = ROOT
    for r in reports_seq:
        node = game.step(node, r)
    return node


# ---------------------------------------------------------------------------
# conditional dominance
# ---------------------------------------------------------------------------

class _DominanceSearch:
    """Best deviation gain for one agent in the game perceived at level ``top``.

    The opponents' strategies are arbitrary, so their behaviour is searched
    existentially, with one constraint: while the truthful path and the
    deviation path have produced identical announcements, every opponent sees
    the same information set on both, and must act identically.
    """

    def __init__(self, game, i, true_type, opp_aw, y, tables, with_bonus, budget, opp_types=None):
        self.g = game
        self.opp_types = opp_types
        self.i = i
        self.t = true_type
        self.top = true_type.level
        self.opp_aw = opp_aw
        self.y = y
        self.tables = tables
        self.with_bonus = with_bonus
        self.budget = budget
        self.maxdev, self.mintruth, self.joint = {}, {}, {}
        self._u = {}
        self.max_stages = 0

    def tick(self):
        self.budget[0] -= 1
        if self.budget[0] < 0:
            raise CapExceeded("dominance search exceeded its node cap")

    def utility(self, node):
        prof, ann, rev, _ = node
        key = (prof, rev)
        hit = self._u.get(key)
        if hit is None:
            sc = self.g.sc
            i = self.i
            x = f0(sc, prof)
            opp = prof[:i] + prof[i + 1:]
            val = sc.values.value(self.t, x) + welfare(sc.values, x, opp) + self.y(sc.agents[i], ann, opp)
            if self.with_bonus and rev >= 0:
                amount = self.tables[sc.agents[rev]][ann]
                split = bonus_split(sc.agents, sc.agents[rev], amount)
                if len(sc.agents) > 1 and sum(split.values(), ZERO) != 0:
                    raise AssertionError(f"awareness bonuses do not cancel: {split}")
                val += split[sc.agents[i]]
            hit = self._u[key] = val
        return hit

    def opp_choices(self, node):
        prof, ann, _, _ = node
        g = self.g
        if self.opp_types is not None:
            return [tuple(project(g.ts, self.opp_types[k], g.aware(self.opp_aw[k], ann))
                          for k in range(g.n) if k != self.i)]
        sets = []
        for k in range(g.n):
            if k == self.i:
                continue
            aw = g.aware(self.opp_aw[k], ann)
            sets.append(g.admissible(k, prof[k] if prof else None, ann, aw))
        return product(*sets)

    def own_choices(self, node, aw):
        prof, ann, _, _ = node
        return self.g.admissible(self.i, prof[self.i] if prof else None, ann, aw)

    def truth(self, aw):
        return project(self.g.ts, self.t, aw)

    def full(self, own, opp):
        i = self.i
        return opp[:i] + (own,) + opp[i:]

    def value_of(self, node, table, fn):
        return self.utility(node) if node[3] else fn(node)

    # --- single-path optimisation after the two paths have separated -------

    def best_dev(self, node):
        hit = self.maxdev.get(node)
        if hit is not None:
            return hit
        self.tick()
        best = None
        for opp in self.opp_choices(node):
            for d in self.own_choices(node, self.top):
                nxt = self.g.step(node, self.full(d, opp))
                v = self.utility(nxt) if nxt[3] else self.best_dev(nxt)
                if best is None or v > best:
                    best = v
        self.maxdev[node] = best
        return best

    def worst_truth(self, node):
        hit = self.mintruth.get(node)
        if hit is not None:
            return hit
        self.tick()
        own = self.truth(self.top)
        worst = None
        for opp in self.opp_choices(node):
            nxt = self.g.step(node, self.full(own, opp))
            v = self.utility(nxt) if nxt[3] else self.worst_truth(nxt)
            if worst is None or v < worst:
                worst = v
        self.mintruth[node] = worst
        return worst

    # --- coupled search from the information set onwards -------------------

    def _split_value(self, nt, nd):
        dev = self.utility(nd) if nd[3] else self.best_dev(nd)
        tru = self.utility(nt) if nt[3] else self.worst_truth(nt)
        return dev - tru

    def gain(self, nt, nd):
        key = (nt, nd)
        hit = self.joint.get(key)
        if hit is not None:
            return hit
        self.tick()
        own = self.truth(self.top)
        best = None
        for opp in self.opp_choices(nt):
            a = self.g.step(nt, self.full(own, opp))
            for d in self.own_choices(nd, self.top):
                b = self.g.step(nd, self.full(d, opp))
                if a[3] or b[3] or a[1] != b[1]:
                    v = self._split_value(a, b)
                else:
                    v = self.gain(a, b)
                if best is None or v > best:
                    best = v
        self.joint[key] = best
        return best

    # --- witness reconstruction --------------------------------------------

    def _follow(self, node, pick):
        path = []
        while not node[3]:
            node = pick(node)
            path.append(node)
        return path

    def _pick_dev(self, node):
        target = self.best_dev(node)
        for opp in self.opp_choices(node):
            for d in self.own_choices(node, self.top):
                nxt = self.g.step(node, self.full(d, opp))
                if (self.utility(nxt) if nxt[3] else self.best_dev(nxt)) == target:
                    return nxt
        raise AssertionError("inconsistent memo")

    def _pick_truth(self, node):
        target = self.worst_truth(node)
        own = self.truth(self.top)
        for opp in self.opp_choices(node):
            nxt = self.g.step(node, self.full(own, opp))
            if (self.utility(nxt) if nxt[3] else self.worst_truth(nxt)) == target:
                return nxt
        raise AssertionError("inconsistent memo")

    def witness(self, nt, nd):
        """(truth continuation, deviation continuation) realising gain(nt, nd)."""
        target = self.gain(nt, nd)
        own = self.truth(self.top)
        for opp in self.opp_choices(nt):
            a = self.g.step(nt, self.full(own, opp))
            for d in self.own_choices(nd, self.top):
                b = self.g.step(nd, self.full(d, opp))
                if a[3] or b[3] or a[1] != b[1]:
                    if self._split_value(a, b) == target:
                        ta = [a] + (self._follow(a, self._pick_truth) if not a[3] else [])
                        tb = [b] + (self._follow(b, self._pick_dev) if not b[3] else [])
                        return ta, tb
                elif self.gain(a, b) == target:
                    ta, tb = self.witness(a, b)
                    return [a] + ta, [b] + tb
        raise AssertionError("inconsistent memo")


def _prefix_gain(search, node, own_aw, memo):
    """Max deviation gain over the agent's information sets at full awareness
    that truthful play can reach from ``node``. Returns (gain, node at h_i) or None."""
    if node in memo:
        return memo[node]
    g = search.g
    aw = g.aware(own_aw, node[1])
    if aw == search.top:
        res = (search.gain(node, node), node)
    else:
        search.tick()
        res = None
        own = search.truth(aw)
        for opp in search.opp_choices(node):
            nxt = g.step(node, search.full(own, opp))
            if nxt[3]:
                continue
            sub = _prefix_gain(search, nxt, own_aw, memo)
            if sub is not None and (res is None or sub[0] > res[0]):
                res = sub
    memo[node] = res
    return res


def _prefix_path(search, node, own_aw, target, memo):
    """Truthful-play nodes from ``node`` to the information set ``target``."""
    if node == target:
        return []
    g = search.g
    aw = g.aware(own_aw, node[1])
    own = search.truth(aw)
    for opp in search.opp_choices(node):
        nxt = g.step(node, search.full(own, opp))
        if nxt[3]:
            continue
        if nxt == target:
            return [nxt]
        sub = memo.get(nxt)
        if sub is not None and sub[1] == target:
            rest = _prefix_path(search, nxt, own_aw, target, memo)
            if rest is not None:
                return [nxt] + rest
    return None


def _strategies_from_paths(sub, draw, i, truth_nodes, dev_nodes):
    """Explicit table strategies for opponents (and the deviator) that reproduce
    both paths when replayed through the engine."""
    from .engine import initial_state, step as engine_step

    n = len(sub.agents)
    opp_tables = [dict() for _ in range(n)]
    dev_table = {}
    for nodes, record_dev in ((truth_nodes, False), (dev_nodes, True)):
        state = initial_state(sub, draw)
        for node in nodes:
            prof = node[0]
            for k in range(n):
                h = state.information_set(k)
                if k == i:
                    if record_dev:
                        dev_table[h] = prof[k]
                    continue
                prior = opp_tables[k].get(h)
                if prior is not None and prior != prof[k]:
                    raise AssertionError("opponent strategy would be inconsistent")
                opp_tables[k][h] = prof[k]
            state = engine_step(state, prof)
    opp = [TableStrategy(t) for t in opp_tables]
    truthful = list(opp)
    truthful[i] = TruthTelling()
    deviating = list(opp)
    deviating[i] = TableStrategy(dev_table)
    return truthful, deviating


def _utility_after(sub, trace, i, eval_type, y, with_bonus):
    res = vcg_transfers(sub, trace, y, with_bonus=with_bonus)
    a = sub.agents[i]
    return sub.values.value(eval_type, res.outcome) + res.transfers[a], res


ANY, TRUTHFUL = "any", "truthful"


def _opponent_cases(sc, i, top, down, opponents, exhaustive_awareness):
    """(opponent awareness, opponent true types or None) pairs to search."""
    n = len(sc.agents)
    others = [k for k in range(n) if k != i]
    if opponents == ANY and not exhaustive_awareness:
        yield [top] * n, None
        return
    for aws in product(down, repeat=n - 1):
        opp_aw = [top] * n
        for k, a in zip(others, aws):
            opp_aw[k] = a
        if opponents == ANY:
            yield opp_aw, None
            continue
        for ts in product(*(sc.types.spaces[sc.agents[k], top] for k in others)):
            opp_types = [None] * n
            for k, t in zip(others, ts):
                opp_types[k] = t
            yield opp_aw, opp_types


def check_conditional_dominance(sc, y=None, with_bonus=True, cap=None,
                                exhaustive_awareness=False, agents=None, opponents=ANY,
                                first_only=True):
    """Truth-telling is weakly best at every reachable information set against
    every opponent behaviour, in the game as perceived at that information set.

    Perceived draws are enumerated per (agent, awareness level A, own type at
    A, own initial awareness below A). Opponents' types never constrain their
    behaviour, and giving an opponent more awareness only enlarges its
    admissible reports, so by default opponents are taken fully aware at A;
    ``exhaustive_awareness`` enumerates every opponent awareness profile instead.

    ``opponents="truthful"`` restricts opponents to truth-telling and
    enumerates their types and awareness instead (an ex post equilibrium
    check, weaker than dominance).

    With ``first_only=False`` the search keeps going after the first
    counterexample, so ``stats`` count every violating case and ``max_gain``
    is the global maximum.
    """
    if opponents not in (ANY, TRUTHFUL):
        raise ValueError(f"unknown opponent family {opponents!r}")
    y = family_from_config(sc, sc.scheme) if y is None else y
    cap = default_cap() if cap is None else cap
    rep = VerificationReport("conditional-dominance" if opponents == ANY else "ex-post-truthful")
    rep.stats.update(family=getattr(y, "name", repr(y)), with_bonus=with_bonus,
                     opponents=opponents, cases=0, violating_cases=0, nodes=0,
                     opponent_awareness=("exhaustive" if exhaustive_awareness or opponents == TRUTHFUL
                                         else "fully-aware"))
    tables = bonus_tables(sc, y) if with_bonus else None
    lat = sc.lattice
    budget = [cap]
    who = range(len(sc.agents)) if agents is None else [sc.agents.index(a) for a in agents]
    game_cache = {}
    best_gain = None
    try:
        for i in who:
            for top in lat.elements:
                sub = game_cache.get(top)
                if sub is None:
                    sub = game_cache[top] = _Game(restrict_scenario(sc, top))
                down = sorted(L.down_set(lat, top), key=lat.elements.index)
                for t in sc.types.spaces[sc.agents[i], top]:
                    for opp_aw, opp_types in _opponent_cases(sc, i, top, down, opponents,
                                                             exhaustive_awareness):
                        search = _DominanceSearch(sub, i, t, opp_aw, y, tables, with_bonus,
                                                  budget, opp_types)
                        for own_aw in down:
                            rep.stats["cases"] += 1
                            memo = {}
                            res = _prefix_gain(search, ROOT, own_aw, memo)
                            if res is None:
                                continue
                            gain, h_node = res
                            if best_gain is None or gain > best_gain:
                                best_gain = gain
                            if gain <= 0:
                                continue
                            rep.stats["violating_cases"] += 1
                            if rep.counterexample is None:
                                rep.fail(_dominance_witness(
                                    sc, sub, search, i, t, own_aw, opp_aw, memo, h_node, y,
                                    with_bonus, opp_types))
                            if first_only:
                                rep.stats["nodes"] = cap - budget[0]
                                rep.stats["max_gain"] = gain
                                return rep
    except CapExceeded:
        if rep.status != "fail":
            rep.status = "capped"
        rep.notes.append(f"node cap {cap} reached; truncated the opponent-behaviour quantifier "
                         f"after {rep.stats['cases']} perceived draws")
    rep.stats["nodes"] = cap - budget[0]
    rep.stats["max_gain"] = best_gain
    return rep


def _dominance_witness(sc, game, search, i, t, own_aw, opp_aw, memo, h_node, y, with_bonus,
                       opp_types=None):
    sub = game.sc
    prefix = _prefix_path(search, ROOT, own_aw, h_node, memo)
    ta, tb = search.witness(h_node, h_node)
    truth_nodes = prefix + ta
    dev_nodes = prefix + tb
    top = t.level
    others = opp_types or [sub.types.spaces[a, top][0] for a in sub.agents]
    true_types = tuple(t if k == i else others[k] for k in range(len(sub.agents)))
    aw = tuple(own_aw if k == i else opp_aw[k] for k in range(len(sub.agents)))
    draw = NatureDraw(true_types, aw)
    sub = Scenario(sub.lattice, sub.types, sub.outcomes, sub.values, sub.agents,
                   (draw,), sub.scheme, name=sub.name)
    truthful, deviating = _strategies_from_paths(sub, draw, i, truth_nodes, dev_nodes)
    tr_t = run(sub, draw, truthful)
    tr_d = run(sub, draw, deviating)
    u_t, res_t = _utility_after(sub, tr_t, i, t, y, with_bonus)
    u_d, res_d = _utility_after(sub, tr_d, i, t, y, with_bonus)
    if not u_d > u_t:
        raise AssertionError("dominance witness does not replay")
    return {
        "agent": sc.agents[i],
        "perceived_level": top,
        "draw": _draw_json(sub, draw),
        "information_set_stage": len(prefix) + 1,
        "truthful_trace": [_profile_json(p) for p in tr_t.stages],
        "deviation_trace": [_profile_json(p) for p in tr_d.stages],
        "truthful_utility": u_t, "deviation_utility": u_d,
        "truthful_transfers": res_t.transfers, "deviation_transfers": res_d.transfers,
        "truthful_bonus": res_t.bonus_term, "deviation_bonus": res_d.bonus_term,
        "_replay": (sub, draw, truthful, deviating),
    }


# ---------------------------------------------------------------------------
# no deficit
# ---------------------------------------------------------------------------

def _deviation_endings(game, i, own_aw, others_truth, budget):
    """All (final node, stages) reachable when agent ``i`` plays any strategy
    and everyone else plays truthfully. Others' truthful reports depend only
    on their awareness and the announcement."""
    memo = {}

    def truthful_others(node):
        ann = node[1]
        out = []
        for k, (t, aw0) in enumerate(others_truth):
            if k == i:
                out.append(None)
            else:
                out.append(project(game.ts, t, game.aware(aw0, ann)))
        return out

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded("deviation enumeration exceeded its cap")
        prof, ann = node[0], node[1]
        reports = truthful_others(node)
        aw = game.aware(own_aw, ann)
        ends = {}
        for d in game.admissible(i, prof[i] if prof else None, ann, aw):
            reports[i] = d
            nxt = game.step(node, tuple(reports))
            if nxt[3]:
                key = (nxt[0], nxt[2])
                ends.setdefault(key, (nxt, [nxt]))
            else:
                for key, (end, path) in walk(nxt).items():
                    if key not in ends or len(path) + 1 > len(ends[key][1]):
                        ends[key] = (end, [nxt] + path)
        memo[node] = ends
        return ends

    return walk(ROOT)


def _trace_from_nodes(sc, nodes):
    from .engine import Trace
    return Trace(tuple(sc.agents), tuple(n[0] for n in nodes), tuple(n[1] for n in nodes),
                 nodes[-1][3])


def enumerate_traces(sc, draws=None, deviations=True, cap=None):
    """Truthful traces for every draw plus, for each agent, every trace produced
    by a unilateral deviation from truth-telling. Deduplicated by (final profile,
    first revealer), which determines all transfers."""
    cap = default_cap() if cap is None else cap
    game = _Game(sc)
    budget = [cap]
    out = {}
    draws = sc.iter_draws() if draws is None else draws
    seen_ctx = set()
    for d in draws:
        tr = run(sc, d, [TruthTelling() for _ in sc.agents])
        node = _replay_trace(game, tr.stages)
        out.setdefault((node[0], node[2]), tr)
        if not deviations:
            continue
        others = list(zip(d.true_types, d.awareness))
        for i in range(len(sc.agents)):
            ctx = (i, d.awareness[i], tuple(o for k, o in enumerate(others) if k != i))
            if ctx in seen_ctx:
                continue
            seen_ctx.add(ctx)
            for key, (end, nodes) in _deviation_endings(game, i, d.awareness[i], others, budget).items():
                if key not in out:
                    out[key] = _trace_from_nodes(sc, nodes)
    return list(out.values())


def check_no_deficit(sc, y=None, traces=None, cap=None):
    """Sum of transfers is at most zero on every supplied (or enumerated) trace."""
    y = ClarkeFamily(sc, LITERAL) if y is None else y
    rep = VerificationReport("no-deficit")
    rep.stats["family"] = getattr(y, "name", repr(y))
    try:
        traces = enumerate_traces(sc, cap=cap) if traces is None else traces
    except CapExceeded as e:
        rep.status = "capped"
        rep.notes.append(str(e))
        return rep
    worst = None
    for k, tr in enumerate(traces):
        res = vcg_transfers(sc, tr, y)
        total = -res.surplus
        if worst is None or total > worst:
            worst = total
        if total > 0:
            rep.stats.update(traces=k + 1, max_total_transfer=total)
            return rep.fail({"trace": [_profile_json(p) for p in tr.stages],
                             "transfers": res.transfers, "total": total, "_trace": tr})
    rep.stats.update(traces=len(traces), max_total_transfer=worst)
    return rep


# ---------------------------------------------------------------------------
# stage bounds
# ---------------------------------------------------------------------------

def longest_run(sc, awareness=None, cap=None):
    """Most stages any strategy profile can take (all agents fully aware by default;
    more awareness only enlarges every admissible set)."""
    cap = default_cap() if cap is None else cap
    game = _Game(sc)
    aw0 = tuple(awareness) if awareness else (sc.lattice.top,) * len(sc.agents)
    memo = {}
    budget = [cap]

    def longest(node):
        key = (node[0], node[1])
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded("stage-bound enumeration exceeded its cap")
        prof, ann = node[0], node[1]
        sets = [game.admissible(k, prof[k] if prof else None, ann, game.aware(aw0[k], ann))
                for k in range(game.n)]
        best = 0
        for reports in product(*sets):
            nxt = game.step(node, reports)
            best = max(best, 1 if nxt[3] else 1 + longest(nxt))
        memo[key] = best
        return best

    return longest(ROOT)


def check_stage_bound(sc, draws=None, bound=3, any_strategy=True, cap=None):
    """Truthful runs stop within ``bound`` stages; any run within 2 + |I|*height."""
    rep = VerificationReport("stage-bound")
    draws = sc.iter_draws() if draws is None else draws
    worst = 0
    n = 0
    for d in draws:
        n += 1
        tr = run(sc, d, [TruthTelling() for _ in sc.agents])
        worst = max(worst, len(tr))
        if len(tr) > bound:
            rep.stats.update(draws=n, truthful_max_stages=worst)
            return rep.fail({"draw": _draw_json(sc, d), "stages": len(tr),
                             "trace": [_profile_json(p) for p in tr.stages]})
    rep.stats.update(draws=n, truthful_max_stages=worst)
    if any_strategy:
        limit = 2 + len(sc.agents) * sc.lattice.height
        try:
            longest = longest_run(sc, cap=cap)
        except CapExceeded as e:
            rep.status = "capped"
            rep.notes.append(str(e))
            return rep
        rep.stats.update(any_strategy_max_stages=longest, any_strategy_limit=limit)
        if longest > limit:
            return rep.fail({"longest_run": longest, "limit": limit})
    return rep


# ---------------------------------------------------------------------------
# unrolled oracle for the bonus recursion
# ---------------------------------------------------------------------------

def _brute_argmax(sc, profile, level):
    best, best_w = None, None
    for x in sorted(sc.outcomes.at(level), key=lambda o: o.id):
        w = sum((sc.values.value(t, x) for t in profile), ZERO)
        if best_w is None or w > best_w:
            best, best_w = x, w
    return best


def _descending_chains(lat, level):
    if level == lat.bottom:
        yield (level,)
        return
    for lower in lat.elements:
        if lower != level and (lower, level) in lat.order:
            for rest in _descending_chains(lat, lower):
                yield (level,) + rest


def oracle_m(sc, agent, y, level, cap=None):
    """Maximum over strictly descending chains from ``level`` to bottom of the
    summed per-step bracket, each step maximised over all profile pairs."""
    cap = default_cap() if cap is None else cap
    lat, ts, vals = sc.lattice, sc.types, sc.values
    k = sc.agents.index(agent)
    step_best = {}
    work = 0

    def step_value(upper, lower):
        nonlocal work
        if (upper, lower) in step_best:
            return step_best[upper, lower]
        best = None
        uppers = list(ts.profiles(upper))
        lowers = list(ts.profiles(lower))
        work += len(uppers) * len(lowers)
        if work > cap:
            raise CapExceeded("oracle pair enumeration exceeded its cap")
        for tp in lowers:
            xp = _brute_argmax(sc, tp, lower)
            for t in uppers:
                x = _brute_argmax(sc, t, upper)
                val = (vals.value(t[k], xp)
                       + sum((vals.value(tp[j], xp) for j in range(len(tp)) if j != k), ZERO)
                       + y(agent, lower, tuple(tp[j] for j in range(len(tp)) if j != k))
                       - sum((vals.value(tj, x) for tj in t), ZERO)
                       - y(agent, upper, tuple(t[j] for j in range(len(t)) if j != k)))
                if best is None or val > best:
                    best = val
        step_best[upper, lower] = best
        return best

    best = None
    for chain in _descending_chains(lat, level):
        total = sum((step_value(a, b) for a, b in zip(chain, chain[1:])), ZERO)
        if best is None or total > best:
            best = total
    return best


def check_m_oracle(sc, y=None, cap=None):
    from .transfers import m_table
    y = family_from_config(sc, sc.scheme) if y is None else y
    rep = VerificationReport("m-oracle")
    rep.stats["family"] = getattr(y, "name", repr(y))
    n = 0
    for a in sc.agents:
        table = m_table(sc, a, y)
        for lv in sc.lattice.elements:
            n += 1
            want = oracle_m(sc, a, y, lv, cap)
            if table[lv] != want:
                rep.stats["entries"] = n
                return rep.fail({"agent": a, "level": lv, "recursion": table[lv], "oracle": want})
    rep.stats["entries"] = n
    return rep


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------

PROPERTIES = ("efficiency", "pooled", "dominance", "nodeficit", "stages", "m-oracle")


def suite_families(sc):
    """Groves families a sweep exercises: y = 0 and the scenario's own scheme."""
    fams = [ZeroFamily()]
    own = family_from_config(sc, sc.scheme)
    if not isinstance(own, ZeroFamily):
        fams.append(own)
    return fams


def run_properties(sc, properties=PROPERTIES, cap=None):
    """Run the named checks on one scenario; dominance and m-oracle once per family."""
    out = []
    for prop in properties:
        if prop == "efficiency":
            out.append(check_efficiency(sc, cap=cap))
        elif prop == "pooled":
            out.append(check_pooled_implementation(sc))
        elif prop == "stages":
            out.append(check_stage_bound(sc, cap=cap))
        elif prop == "nodeficit":
            out.append(check_no_deficit(sc, cap=cap))
        elif prop == "dominance":
            out.extend(check_conditional_dominance(sc, y, cap=cap) for y in suite_families(sc))
        elif prop == "m-oracle":
            out.extend(check_m_oracle(sc, y, cap=cap) for y in suite_families(sc))
        else:
            raise ValueError(f"unknown property {prop!r}")
    return out


def _suite_worker(args):
    sc, properties, cap = args
    reps = run_properties(sc, properties, cap)
    for r in reps:
        if isinstance(r.counterexample, dict):
            r.counterexample = {k: v for k, v in r.counterexample.items() if not k.startswith("_")}
    return sc.name, reps


def run_suite(scenarios, properties=PROPERTIES, cap=None, jobs=1):
    """[(scenario name, reports)] for every scenario, optionally across processes.
    Results come back in input order regardless of ``jobs``."""
    work = [(sc, tuple(properties), cap) for sc in scenarios]
    if jobs <= 1:
        return [_suite_worker(w) for w in work]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_suite_worker, work))
