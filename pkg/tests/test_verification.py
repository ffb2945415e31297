from dataclasses import replace
from fractions import Fraction
from itertools import product

import pytest

from elabmech import lattice as L
from elabmech.engine import admissible_reports, initial_state, run, step, truth_telling
from elabmech.generate import Bounds, generate_instances, parse_bounds
from elabmech.scenario import TransferConfig, scenario_to_dict
from elabmech.transfers import ClarkeFamily, ConstantFamily, ZeroFamily, m_table, vcg_transfers
from elabmech.typesystem import NatureDraw, make_draw, project, validate_type_system
from elabmech.verify import (check_conditional_dominance, check_efficiency, check_m_oracle,
                             check_no_deficit, check_pooled_implementation, check_stage_bound,
                             enumerate_traces, longest_run, oracle_m, restrict_scenario, run_suite)
from elabmech.welfare import LITERAL, ValueTable

from builders import costly_revelation, one_level, tiny_chain


# --- brute-force dominance oracle, built only on the engine --------------------------

def _payoff(sc, tr, i, t, y, with_bonus):
    res = vcg_transfers(sc, tr, y, with_bonus=with_bonus)
    return sc.values.value(t, res.outcome) + res.transfers[sc.agents[i]]


def _play(sc, state, i, assign, own_choice):
    """Yield (final state, assignment) over all opponent choices not yet fixed by
    ``assign``; agent i's report comes from ``own_choice(state)`` (a list)."""
    if state.trace.stopped:
        yield state, assign
        return
    n = len(sc.agents)
    hs = [state.information_set(k) for k in range(n)]
    options = []
    for k in range(n):
        if k == i:
            options.append(own_choice(state))
        elif hs[k] in assign:
            options.append([assign[hs[k]]])
        else:
            options.append(admissible_reports(state, k))
    for reports in product(*options):
        new = dict(assign)
        for k in range(n):
            if k != i:
                new[hs[k]] = reports[k]
        yield from _play(sc, step(state, reports), i, new, own_choice)


def brute_gain(sc, i, t, own_aw, opp_aw, y, with_bonus=True):
    """Largest deviation gain at i's first information set with full awareness."""
    others = [sc.types.spaces[a, sc.lattice.top][0] for a in sc.agents]
    types = tuple(t if k == i else others[k] for k in range(len(sc.agents)))
    draw = NatureDraw(types, tuple(own_aw if k == i else opp_aw[k] for k in range(len(sc.agents))))
    top = sc.lattice.top
    truthful = lambda st: [st.information_set(i).own_perceived_type]
    best = None

    def prefix(state, assign):
        """Truthful play until i is fully aware; yields (state at h_i, assignment)."""
        if state.trace.stopped:
            return
        if state.awareness(i) == top:
            yield state, assign
            return
        n = len(sc.agents)
        hs = [state.information_set(k) for k in range(n)]
        options = [truthful(state) if k == i else
                   ([assign[hs[k]]] if hs[k] in assign else admissible_reports(state, k))
                   for k in range(n)]
        for reports in product(*options):
            new = dict(assign)
            new.update({hs[k]: reports[k] for k in range(n) if k != i})
            yield from prefix(step(state, reports), new)

    for h_state, assign in prefix(initial_state(sc, draw), {}):
        for end_t, assign_t in _play(sc, h_state, i, assign, truthful):
            u_t = _payoff(sc, end_t.trace, i, t, y, with_bonus)
            for end_d, _ in _play(sc, h_state, i, assign_t, lambda st: admissible_reports(st, i)):
                g = _payoff(sc, end_d.trace, i, t, y, with_bonus) - u_t
                if best is None or g > best:
                    best = g
    return best


def brute_max_gain(sc, y, with_bonus=True):
    best = None
    for i in range(len(sc.agents)):
        for top in sc.lattice.elements:
            sub = restrict_scenario(sc, top)
            down = sorted(L.down_set(sc.lattice, top))
            for t in sc.types.spaces[sc.agents[i], top]:
                for own in down:
                    for opp in product(down, repeat=len(sc.agents)):
                        g = brute_gain(sub, i, t, own, list(opp), y, with_bonus)
                        if g is not None and (best is None or g > best):
                            best = g
    return best


def tiny_instances():
    b = parse_bounds("agents=2,levels=2,types=2,outcomes=1,values=20")
    return [sc for sc in generate_instances(11, b, 6)] + [tiny_chain(), costly_revelation()]


@pytest.mark.parametrize("k", range(8))
def test_dominance_checker_agrees_with_brute_force(k):
    sc = tiny_instances()[k]
    for y in (ZeroFamily(), ClarkeFamily(sc)):
        for with_bonus in (True, False):
            want = brute_max_gain(sc, y, with_bonus)
            for exhaustive in (False, True):
                rep = check_conditional_dominance(sc, y, with_bonus=with_bonus,
                                                  exhaustive_awareness=exhaustive)
                assert rep.status == ("fail" if want > 0 else "pass")
                if rep.status == "fail":
                    assert 0 < rep.stats["max_gain"] <= want
                else:
                    assert rep.stats["max_gain"] == want


# --- dominance ----------------------------------------------------------------------

def test_one_level_certifies_static_vcg():
    for sc in [one_level(2), one_level(3)]:
        for y in (ZeroFamily(), ClarkeFamily(sc, LITERAL), ClarkeFamily(sc)):
            rep = check_conditional_dominance(sc, y)
            assert rep.passed and rep.stats["max_gain"] == 0


def test_bonus_is_load_bearing():
    sc = costly_revelation()
    on = check_conditional_dominance(sc, ZeroFamily(), opponents="truthful")
    off = check_conditional_dominance(sc, ZeroFamily(), opponents="truthful", with_bonus=False)
    assert on.passed
    assert off.status == "fail" and off.stats["max_gain"] == 61
    cx = off.counterexample
    assert cx["deviation_utility"] - cx["truthful_utility"] == 61


def test_fail_report_replays(ex1):
    rep = check_conditional_dominance(ex1, ZeroFamily())
    assert rep.status == "fail"
    sub, draw, truthful, deviating = rep.counterexample["_replay"]
    i = sub.agents.index(rep.counterexample["agent"])
    t = draw.true_types[i]
    u_t = _payoff(sub, run(sub, draw, truthful), i, t, ZeroFamily(), True)
    u_d = _payoff(sub, run(sub, draw, deviating), i, t, ZeroFamily(), True)
    assert (u_t, u_d) == (rep.counterexample["truthful_utility"], rep.counterexample["deviation_utility"])
    assert u_d > u_t


def test_example1_negative_bonus_is_escaped_by_a_tie(ex1):
    rep = check_conditional_dominance(ex1, ZeroFamily())
    cx = rep.counterexample
    assert cx["agent"] == "1" and cx["perceived_level"] == "{a}"
    assert cx["truthful_bonus"]["1"] == -4 and cx["deviation_bonus"]["1"] == 0


def test_truthful_opponents_pass_when_bonuses_nonnegative(instances):
    for sc in instances:
        for y in (ZeroFamily(), ClarkeFamily(sc)):
            tables = [m_table(sc, a, y) for a in sc.agents]
            rep = check_conditional_dominance(sc, y, opponents="truthful")
            if all(v >= 0 for tb in tables for v in tb.values()):
                assert rep.passed, sc.name
            else:
                assert rep.status == "fail", sc.name


def test_dominance_cap_downgrades(ex1):
    rep = check_conditional_dominance(one_level(3), ZeroFamily(), cap=3)
    assert rep.status == "capped" and rep.notes


def test_unknown_opponent_family(ex1):
    with pytest.raises(ValueError):
        check_conditional_dominance(ex1, opponents="nobody")


# --- efficiency and pooled implementation --------------------------------------------

def test_efficiency_example1(ex1):
    rep = check_efficiency(ex1)
    assert rep.passed and rep.stats["profiles"] == sum(
        len(list(ex1.types.profiles(lv))) for lv in ex1.lattice.elements)


def test_efficiency_detects_corrupted_outcome_map(ex1):
    worst = lambda p: ex1.outcomes.outcome("agent2_produces")
    rep = check_efficiency(ex1, outcome_fn=worst)
    assert rep.status == "fail"
    cx = rep.counterexample
    assert cx["better_welfare"] > cx["chosen_welfare"]


def test_efficiency_singleton_outcome_space():
    sc = one_level(2)
    only = {k: v for k, v in sc.values.entries.items() if k[3] == "skip"}
    from elabmech.welfare import build_outcome_spaces
    sc = replace(sc, outcomes=build_outcome_spaces(sc.lattice, {"only": ["skip"]}),
                 values=ValueTable(only), cache={})
    assert check_efficiency(sc).passed


def test_pooled_example1(ex1):
    rep = check_pooled_implementation(ex1)
    assert rep.passed and rep.stats["draws"] == 1


def test_pooled_all_draws_tiny_chain():
    assert check_pooled_implementation(tiny_chain()).passed


def test_pooled_extreme_awareness(ex1):
    ts, top, bot = ex1.types, ex1.lattice.top, ex1.lattice.bottom
    d_top = make_draw(ts, ["t1''", "t2'", "t3"], [top] * 3)
    d_bot = make_draw(ts, ["t1''", "t2'", "t3"], [bot] * 3)
    assert check_pooled_implementation(ex1, [d_top, d_bot]).passed


# --- stages --------------------------------------------------------------------------

def test_stage_bound_example1(ex1):
    rep = check_stage_bound(ex1)
    assert rep.passed and rep.stats["truthful_max_stages"] == 3
    assert rep.stats["any_strategy_max_stages"] <= 2 + 3 * 3


def test_all_aware_two_stages_and_incomparable_three(ex1):
    ts, top = ex1.types, ex1.lattice.top
    rep = check_stage_bound(ex1, [make_draw(ts, ["t1'", "t2'", "t3"], [top] * 3)], any_strategy=False)
    assert rep.stats["truthful_max_stages"] == 2
    d = make_draw(ts, ["t1'", "t2'", "t3"], ["{a}", "{c}", "{}"])
    rep = check_stage_bound(ex1, [d], any_strategy=False)
    assert rep.stats["truthful_max_stages"] == 3


def test_stage_bound_detects_tight_limit(ex1):
    rep = check_stage_bound(ex1, bound=2, any_strategy=False)
    assert rep.status == "fail" and rep.counterexample["stages"] == 3


def test_longest_run_chain():
    # a lone agent climbs at most one level per stage before the final repeat
    sc = generate_instances(5, parse_bounds("agents=1,levels=4"), 10)
    for s in sc:
        assert longest_run(s) <= 2 + s.lattice.height


# --- no deficit ----------------------------------------------------------------------

def test_no_deficit_example1(ex1):
    rep = check_no_deficit(ex1)
    assert rep.passed and rep.stats["max_total_transfer"] <= -80


def test_no_deficit_all_zero_values(ex1):
    zero = ValueTable({k: 0 for k in ex1.values.entries})
    sc = replace(ex1, values=zero, cache={})
    rep = check_no_deficit(sc)
    assert rep.passed and rep.stats["max_total_transfer"] == 0


def test_no_deficit_fails_for_large_constant_y(ex1):
    rep = check_no_deficit(ex1, y=ConstantFamily(1000))
    assert rep.status == "fail" and rep.counterexample["total"] > 0


def test_enumerated_traces_are_distinct_and_stopped(ex1):
    traces = enumerate_traces(ex1)
    keys = {(tr.final_profile, tr.stages) for tr in traces}
    assert len(keys) == len(traces) and all(tr.stopped for tr in traces)


# --- oracle_m ------------------------------------------------------------------------

def test_oracle_bottom_is_zero(ex1):
    assert oracle_m(ex1, "1", ZeroFamily(), "{}") == 0


def test_oracle_two_level_chain_by_hand():
    sc = tiny_chain()
    assert oracle_m(sc, "1", ZeroFamily(), "l1") == -3
    assert oracle_m(sc, "2", ZeroFamily(), "l1") == 6


def test_oracle_powerset_two_items_two_types():
    import random
    from elabmech.scenario import scenario_from_dict
    rng = random.Random(5)
    levels = ["{}", "{a}", "{b}", "{a,b}"]
    doc = {"agents": ["1", "2"], "lattice": {"kind": "powerset", "items": ["a", "b"]},
           "types": {a: {lv: ["x", "y"] for lv in levels} for a in ("1", "2")},
           "projections": [{"agent": a, "from_level": hi, "to_level": lo, "map": {"x": "x", "y": "y"}}
                           for a in ("1", "2") for lo, hi in
                           [("{}", "{a}"), ("{}", "{b}"), ("{a}", "{a,b}"), ("{b}", "{a,b}")]],
           "outcomes": {"levels": {"{}": ["o"], "{a}": ["o", "oa"], "{b}": ["o", "ob"],
                                   "{a,b}": ["o", "oa", "ob", "oab"]}}}
    doc["values"] = {a: {lv: {t: {o: str(rng.randint(-100, 100)) for o in doc["outcomes"]["levels"][lv]}
                              for t in ("x", "y")} for lv in levels} for a in ("1", "2")}
    sc = scenario_from_dict(doc)
    for y in (ZeroFamily(), ClarkeFamily(sc), ClarkeFamily(sc, LITERAL)):
        for a in sc.agents:
            table = m_table(sc, a, y)
            assert [oracle_m(sc, a, y, lv) for lv in levels] == [table[lv] for lv in levels]


def test_m_oracle_detects_wrong_table(ex1, monkeypatch):
    import elabmech.transfers as T
    real = T.m_table
    monkeypatch.setattr(T, "m_table", lambda *a, **k: {lv: v + 1 for lv, v in real(*a, **k).items()})
    assert check_m_oracle(ex1).status == "fail"


# --- generator and suite -------------------------------------------------------------

def test_generator_is_deterministic():
    a = [scenario_to_dict(s) for s in generate_instances(42)]
    b = [scenario_to_dict(s) for s in generate_instances(42)]
    assert a == b
    assert a != [scenario_to_dict(s) for s in generate_instances(43)]


def test_generator_respects_bounds():
    for sc in generate_instances(9):
        assert 2 <= len(sc.agents) <= 3
        assert len(sc.lattice.elements) <= 4
        assert validate_type_system(sc.types) == []
        for (a, lv), space in sc.types.spaces.items():
            assert len(space) <= 3
        assert all(len(sc.outcomes.at(lv)) <= 4 for lv in sc.lattice.elements)
        assert all(-100 <= v <= 100 and v.denominator == 1 for v in sc.values.entries.values())


def test_degenerate_bounds():
    for sc in generate_instances(1, parse_bounds("agents=1,levels=1"), 5):
        assert len(sc.agents) == 1 and len(sc.lattice.elements) == 1
        assert check_efficiency(sc).passed


def test_bad_bound_name():
    with pytest.raises(ValueError):
        parse_bounds("colour=3")


def test_suite_parallel_matches_serial():
    scs = generate_instances(8, count=4)
    serial = run_suite(scs, ("efficiency", "stages", "dominance"), jobs=1)
    parallel = run_suite(scs, ("efficiency", "stages", "dominance"), jobs=2)
    assert [(n, [r.to_json() for r in rs]) for n, rs in serial] == \
           [(n, [r.to_json() for r in rs]) for n, rs in parallel]
