"""Small hand-written scenarios shared by the tests."""
from elabmech.scenario import scenario_from_dict


def chain_doc(levels, types, values, outcomes, projections=None, requires=None,
              draws="all", scheme=None, agents=None):
    """Scenario document on an explicit chain. ``types``: agent -> level -> ids."""
    agents = agents or sorted(types)
    doc = {
        "agents": agents,
        "lattice": {"kind": "explicit", "elements": list(levels),
                    "order": [[a, b] for a, b in zip(levels, levels[1:])]},
        "types": types,
        "projections": projections or [],
        "outcomes": {"levels": outcomes, "requires_agents": requires or {}},
        "values": values,
        "draws": draws,
    }
    if scheme:
        doc["scheme"] = scheme
    return doc


def tiny_chain():
    """Two agents on l0 < l1. Agent 1 refines u into p/q, agent 2 keeps one type.

    By hand, with y = 0: m_1(l1) = -3 and m_2(l1) = 6.
    """
    return scenario_from_dict(chain_doc(
        ["l0", "l1"],
        {"1": {"l0": ["u"], "l1": ["p", "q"]}, "2": {"l0": ["s"], "l1": ["r"]}},
        {"1": {"l0": {"u": {"x0": "0", "x1": "4"}},
               "l1": {"p": {"x0": "0", "x1": "5"}, "q": {"x0": "0", "x1": "-3"}}},
         "2": {"l0": {"s": {"x0": "0", "x1": "-1"}},
               "l1": {"r": {"x0": "0", "x1": "2"}}}},
        {"l0": ["x0", "x1"], "l1": ["x0", "x1"]},
        scheme={"scheme": "vcg", "y": "zero"}), name="tiny-chain")


def costly_revelation(scheme=None):
    """Agent 1 alone knows a contingency that lowers agent 2's value for x1.

    Hiding it keeps x1 cheap in agent 2's eyes, so without the awareness bonus
    agent 1 gains 88 - 27 = 61 by staying silent; m_1(top) = 61 exactly.
    """
    return scenario_from_dict(chain_doc(
        ["base", "full"],
        {"1": {"base": ["k"], "full": ["k"]}, "2": {"base": ["j"], "full": ["j"]}},
        {"1": {"base": {"k": {"x0": "-26", "x1": "98"}},
               "full": {"k": {"x0": "4", "x1": "66"}}},
         "2": {"base": {"j": {"x0": "-49", "x1": "22"}},
               "full": {"j": {"x0": "-49", "x1": "-39"}}}},
        {"base": ["x0", "x1"], "full": ["x0", "x1"]},
        scheme=scheme or {"scheme": "vcg", "y": "zero"}), name="costly-revelation")


def one_level(n_agents=2):
    """Static public-good style instance on a single level."""
    agents = [str(k + 1) for k in range(n_agents)]
    types = {a: {"only": ["lo", "hi"]} for a in agents}
    values = {a: {"only": {"lo": {"build": "-3", "skip": "0"},
                           "hi": {"build": str(2 + k), "skip": "0"}}}
              for k, a in enumerate(agents)}
    return scenario_from_dict(chain_doc(["only"], types, values, {"only": ["build", "skip"]},
                                        scheme={"scheme": "clarke", "marginal_mode": "literal"},
                                        agents=agents), name="one-level")


def single_agent():
    return scenario_from_dict(chain_doc(
        ["only"], {"1": {"only": ["t"]}}, {"1": {"only": {"t": {"x": "1"}}}},
        {"only": ["x"]}, scheme={"scheme": "vcg", "y": "zero"}), name="single")
