from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from elabmech import lattice as L
from elabmech.errors import EmptyOutcomeSpace, MissingValue, ValidationError
from elabmech.typesystem import build_type_system
from elabmech.welfare import (EXCLUDE, LITERAL, ValueTable, build_outcome_spaces,
                              efficient_outcome, marginal_efficient_outcome, utility, welfare)


def final_profile(sc):
    ts = sc.types
    return (ts.get("1", "{a,b,c}", "t1'"), ts.get("2", "{a,b,c}", "t2'"), ts.get("3", "{a,b,c}", "t3"))


def test_example1_efficient_outcome(ex1):
    prof = final_profile(ex1)
    x = efficient_outcome(ex1.values, ex1.outcomes, prof)
    assert x.id == "agent1_produces"
    assert welfare(ex1.values, x, prof) == 20


def test_example1_marginal_outcomes_literal(ex1):
    prof = final_profile(ex1)
    pick = lambda a: marginal_efficient_outcome(ex1.values, ex1.outcomes, prof, a, LITERAL).id
    assert pick("1") == "agent1_produces"
    assert pick("2") == "agent2_produces"
    assert pick("3") == "none"


def test_example1_marginal_outcomes_excluding_participation(ex1):
    prof = final_profile(ex1)
    pick = lambda a: marginal_efficient_outcome(ex1.values, ex1.outcomes, prof, a, EXCLUDE).id
    assert pick("1") == "agent2_produces"
    assert pick("2") == "agent1_produces"
    assert pick("3") == "none"


def small():
    lat = L.chain_lattice(["only"])
    ts = build_type_system(lat, ["1", "2"], {("1", "only"): ["a"], ("2", "only"): ["b"]})
    return lat, ts


def test_ties_go_to_smaller_label():
    lat, ts = small()
    spaces = build_outcome_spaces(lat, {"only": ["zeta", "alpha", "mid"]})
    vals = ValueTable({("1", "only", "a", o): 5 for o in ("zeta", "alpha", "mid")}
                      | {("2", "only", "b", o): 0 for o in ("zeta", "alpha", "mid")})
    prof = tuple(ts.profiles("only"))[0]
    assert efficient_outcome(vals, spaces, prof).id == "alpha"


def test_exclude_mode_can_empty_the_space():
    lat, ts = small()
    spaces = build_outcome_spaces(lat, {"only": ["x"]}, {"x": ["1"]}, ["1", "2"])
    vals = ValueTable({("1", "only", "a", "x"): 1, ("2", "only", "b", "x"): 1})
    prof = tuple(ts.profiles("only"))[0]
    with pytest.raises(EmptyOutcomeSpace):
        marginal_efficient_outcome(vals, spaces, prof, "1", EXCLUDE)
    assert marginal_efficient_outcome(vals, spaces, prof, "1", LITERAL).id == "x"


def test_outcome_spaces_must_nest():
    lat = L.chain_lattice(["lo", "hi"])
    with pytest.raises(ValidationError, match="not nested"):
        build_outcome_spaces(lat, {"lo": ["x", "y"], "hi": ["x"]})


def test_empty_outcome_space_rejected():
    with pytest.raises(ValidationError):
        build_outcome_spaces(L.chain_lattice(["lo", "hi"]), {"hi": ["x"]})


def test_requires_unknown_agent():
    with pytest.raises(ValidationError, match="unknown agents"):
        build_outcome_spaces(L.chain_lattice(["o"]), {"o": ["x"]}, {"x": ["9"]}, ["1"])


def test_missing_value():
    lat, ts = small()
    vals = ValueTable({})
    with pytest.raises(MissingValue):
        vals.value(ts.get("1", "only", "a"), "x")


def test_mixed_level_profile_needs_explicit_level(ex1):
    ts = ex1.types
    prof = (ts.get("1", "{a}", "a23"), ts.get("2", "{}", "blank"), ts.get("3", "{}", "t3"))
    with pytest.raises(ValueError):
        efficient_outcome(ex1.values, ex1.outcomes, prof)


def test_utility_is_quasi_linear(ex1):
    t = final_profile(ex1)[0]
    assert utility(ex1.values, "agent1_produces", "80", t) == 0
    assert utility(ex1.values, "none", Fraction(1, 3), t) == Fraction(1, 3)


@given(st.lists(st.integers(-50, 50), min_size=3, max_size=3),
       st.lists(st.integers(-50, 50), min_size=3, max_size=3),
       st.integers(-1000, 1000))
def test_argmax_matches_brute_force_and_ignores_constant_shift(v1, v2, shift):
    lat, ts = small()
    outs = ["x", "y", "z"]
    spaces = build_outcome_spaces(lat, {"only": outs})
    base = {("1", "only", "a", o): v for o, v in zip(outs, v1)}
    base |= {("2", "only", "b", o): v for o, v in zip(outs, v2)}
    prof = tuple(ts.profiles("only"))[0]
    got = efficient_outcome(ValueTable(base), spaces, prof).id
    totals = {o: a + b for o, a, b in zip(outs, v1, v2)}
    assert got == min(o for o in outs if totals[o] == max(totals.values()))
    shifted = dict(base)
    for o in outs:
        shifted["1", "only", "a", o] += shift
    assert efficient_outcome(ValueTable(shifted), spaces, prof).id == got
