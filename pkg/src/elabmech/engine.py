"""The dynamic direct elaboration mechanism as a deterministic state machine.

Each stage every agent reports a payoff type; the mediator announces the
pooled awareness level of the profile; every agent's awareness is raised by
the announcement; from stage 2 on a report must elaborate the agent's
previous report at or above the last announcement. The run stops as soon as
a profile repeats.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CapExceeded, InadmissibleReport, StageOverflow
from .typesystem import pooled_awareness, project


@dataclass(frozen=True)
class InformationSet:
    agent: str
    stage: int
    own_awareness: str
    own_perceived_type: object
    own_past_reports: tuple = ()
    announcements_seen: tuple = ()


@dataclass(frozen=True)
class Trace:
    agents: tuple
    stages: tuple            # tuple of profiles, each a tuple of PayoffType in agent order
    announcements: tuple     # pooled awareness after each stage
    stopped: bool = False

    @property
    def final_profile(self):
        return self.stages[-1] if self.stages else None

    @property
    def final_level(self):
        return self.announcements[-1] if self.announcements else None

    def __len__(self):
        return len(self.stages)


@dataclass(frozen=True)
class MechanismState:
    """Everything the mediator knows after some stages, plus the draw it needs for perception."""
    scenario: object = field(repr=False)
    draw: object
    trace: Trace

    @property
    def stage(self):
        """Index of the next stage to be played (1-based)."""
        return len(self.trace.stages) + 1

    def awareness(self, k):
        lat = self.scenario.lattice
        own = self.draw.awareness[k]
        if not self.trace.announcements:
            return own
        return lat.join_table[own, self.trace.announcements[-1]]

    def information_set(self, k):
        sc = self.scenario
        agent = sc.agents[k]
        aw = self.awareness(k)
        return InformationSet(
            agent=agent,
            stage=self.stage,
            own_awareness=aw,
            own_perceived_type=project(sc.types, self.draw.true_types[k], aw),
            own_past_reports=tuple(p[k] for p in self.trace.stages),
            announcements_seen=self.trace.announcements,
        )


def initial_state(scenario, draw):
    return MechanismState(scenario, draw, Trace(tuple(scenario.agents), (), (), False))


def admissible_set(types, agent, awareness, previous=None, announcement=None):
    """Reports open to an agent with the given awareness.

    Stage 1 (``previous`` is None): every type at a level the agent is aware of.
    Later: types at a level between the last announcement and the agent's
    awareness that project onto the previous report.
    """
    lat = types.lattice
    out = []
    for lv in lat.elements:
        if (lv, awareness) not in lat.order:
            continue
        if previous is None:
            out.extend(types.spaces[agent, lv])
            continue
        if (announcement, lv) not in lat.order:
            continue
        m = types.projections[agent, lv, previous.level]
        out.extend(t for t in types.spaces[agent, lv] if m[t.id] == previous.id)
    return out


def admissible_reports(state, k):
    sc = state.scenario
    prev = state.trace.stages[-1][k] if state.trace.stages else None
    ann = state.trace.announcements[-1] if state.trace.announcements else None
    return admissible_set(sc.types, sc.agents[k], state.awareness(k), prev, ann)


def _why_inadmissible(state, k, report):
    sc = state.scenario
    lat = sc.lattice
    agent = sc.agents[k]
    if report.agent != agent:
        return f"type belongs to agent {report.agent}"
    if report not in sc.types._members:
        return "unknown type"
    aw = state.awareness(k)
    if (report.level, aw) not in lat.order:
        return f"level {report.level} exceeds awareness {aw}"
    if not state.trace.stages:
        return None
    prev = state.trace.stages[-1][k]
    ann = state.trace.announcements[-1]
    if (ann, report.level) not in lat.order:
        return f"level {report.level} is not at or above the announced level {ann}"
    if project(sc.types, report, prev.level) != prev:
        return f"does not project onto previous report {prev}"
    return None


def step(state, reports):
    """Play one stage with the given profile of reports (agent order)."""
    if state.trace.stopped:
        raise StageOverflow("mechanism already stopped")
    reports = tuple(reports)
    for k, r in enumerate(reports):
        why = _why_inadmissible(state, k, r)
        if why:
            raise InadmissibleReport(state.scenario.agents[k], r, why)
    tr = state.trace
    ann = pooled_awareness(state.scenario.types, reports)
    stopped = bool(tr.stages) and tr.stages[-1] == reports
    trace = Trace(tr.agents, tr.stages + (reports,), tr.announcements + (ann,), stopped)
    return MechanismState(state.scenario, state.draw, trace)


def stage_cap(scenario):
    return 2 + len(scenario.agents) * scenario.lattice.height + 1


def run(scenario, draw, strategies, max_stages=None):
    """Play the mechanism to the stop rule. ``strategies`` holds one callable per agent."""
    cap = stage_cap(scenario) if max_stages is None else max_stages
    state = initial_state(scenario, draw)
    while not state.trace.stopped:
        if len(state.trace.stages) >= cap:
            raise StageOverflow(f"no stop after {cap} stages")
        reports = [strategies[k](state.information_set(k)) for k in range(len(scenario.agents))]
        state = step(state, reports)
    return state.trace


class TruthTelling:
    """Report the perceived true type at the current awareness."""

    def __call__(self, h):
        return h.own_perceived_type

    def __repr__(self):
        return "TruthTelling()"


def truth_telling(scenario, draw=None):
    return [TruthTelling() for _ in scenario.agents]


class TableStrategy:
    """Deterministic strategy given as an explicit map from information sets to reports.

    Information sets missing from the table fall back to ``default`` (if given).
    """

    def __init__(self, table, default=None):
        self.table = dict(table)
        self.default = default

    def __call__(self, h):
        if h in self.table:
            return self.table[h]
        if self.default is None:
            raise KeyError(f"strategy undefined at {h}")
        return self.default(h)


def enumerate_information_sets(scenario, draw, strategies, agent, cap=100_000):
    """Information sets of ``agent`` reachable for some choice of its own reports,
    with the other agents following ``strategies`` (the agent's own entry is ignored)."""
    k = scenario.agents.index(agent)
    found = set()
    budget = [cap]

    def visit(state):
        if state.trace.stopped:
            return
        budget[0] -= 1
        if budget[0] < 0:
            raise CapExceeded(f"more than {cap} nodes while enumerating information sets",
                              explored=len(found))
        h = state.information_set(k)
        found.add(h)
        others = [strategies[j](state.information_set(j)) if j != k else None
                  for j in range(len(scenario.agents))]
        for own in admissible_reports(state, k):
            others[k] = own
            visit(step(state, others))

    visit(initial_state(scenario, draw))
    return found
