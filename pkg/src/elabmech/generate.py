"""Seeded random scenarios small enough for exhaustive verification."""
from __future__ import annotations

import random
from dataclasses import dataclass

from . import lattice as L
from .scenario import Scenario, TransferConfig
from .typesystem import build_type_system
from .welfare import EXCLUDE, ValueTable, build_outcome_spaces


@dataclass(frozen=True)
class Bounds:
    min_agents: int = 2
    max_agents: int = 3
    max_levels: int = 4
    max_top_types: int = 3
    max_outcomes: int = 3
    value_range: int = 100


def parse_bounds(text):
    """``"agents=2-3,levels=4,types=3,outcomes=3,values=100"`` -> Bounds."""
    b = Bounds()
    kw = {}
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        key, _, val = part.partition("=")
        key = key.strip()
        if key == "agents":
            lo, _, hi = val.partition("-")
            kw["min_agents"] = int(lo)
            kw["max_agents"] = int(hi or lo)
        elif key in ("levels", "types", "outcomes", "values"):
            kw[{"levels": "max_levels", "types": "max_top_types",
                "outcomes": "max_outcomes", "values": "value_range"}[key]] = int(val)
        else:
            raise ValueError(f"unknown bound {key!r}")
    return Bounds(**{**b.__dict__, **kw})


def _random_lattice(rng, max_levels):
    shapes = [("chain", 1), ("chain", 2), ("powerset", 1), ("chain", 3),
              ("chain", 4), ("powerset", 2), ("diamond", 4)]
    sizes = {"chain": lambda k: k, "powerset": lambda k: 2 ** k, "diamond": lambda k: 4}
    shapes = [s for s in shapes if sizes[s[0]](s[1]) <= max_levels]
    kind, size = rng.choice(shapes)
    if kind == "powerset":
        return L.powerset_lattice("ab"[:size])
    if kind == "diamond":
        return L.build_lattice(["0", "p", "q", "1"],
                               [("0", "p"), ("0", "q"), ("p", "1"), ("q", "1")])
    return L.chain_lattice([f"l{k}" for k in range(size)])


def _coarsen(rng, blocks):
    """Randomly merge some blocks of a partition (list of frozensets)."""
    blocks = list(blocks)
    rng.shuffle(blocks)
    out = []
    for b in blocks:
        if out and rng.random() < 0.4:
            out[-1] = out[-1] | b
        else:
            out.append(b)
    return out


def _nested_partitions(rng, lat, tops):
    """A partition of the top types at every level, finer above coarser.

    A level's partition must be coarser than every partition above it, so we
    start from the blocks of its covers merged wherever they overlap, then
    merge a few more at random.
    """
    part = {lat.top: [frozenset([t]) for t in tops]}
    for lv in reversed(L.topo_ascending(lat)):
        if lv == lat.top:
            continue
        covers = [hi for lo, hi in L.covering_pairs(lat) if lo == lv]
        parent = {t: t for t in tops}

        def find(t):
            while parent[t] != t:
                parent[t] = parent[parent[t]]
                t = parent[t]
            return t

        for hi in covers:
            for block in part[hi]:
                first, *rest = sorted(block)
                for t in rest:
                    parent[find(t)] = find(first)
        groups = {}
        for t in tops:
            groups.setdefault(find(t), set()).add(t)
        blocks = [frozenset(g) for g in groups.values()]
        if lv == lat.bottom and rng.random() < 0.5:
            blocks = [frozenset(tops)]
        else:
            blocks = _coarsen(rng, blocks)
        part[lv] = sorted(blocks, key=lambda b: sorted(b))
    return part


def _label(block):
    return "+".join(sorted(block))


def random_scenario(rng, bounds=Bounds(), name=""):
    lat = _random_lattice(rng, bounds.max_levels)
    n = rng.randint(bounds.min_agents, bounds.max_agents)
    agents = tuple(str(k + 1) for k in range(n))
    type_ids, projections = {}, []
    for a in agents:
        k = rng.randint(1, bounds.max_top_types)
        tops = [f"t{a}{chr(ord('a') + j)}" for j in range(k)]
        part = _nested_partitions(rng, lat, tops)
        for lv in lat.elements:
            type_ids[a, lv] = [_label(b) for b in part[lv]]
        for lo, hi in L.covering_pairs(lat):
            mapping = {}
            for b in part[hi]:
                owner = next(c for c in part[lo] if b <= c)
                mapping[_label(b)] = _label(owner)
            projections.append((a, hi, lo, mapping))
    ts = build_type_system(lat, agents, type_ids, projections)
    if ts.problems:
        raise AssertionError(f"generator produced an invalid type system: {ts.problems}")

    # outcome x becomes available at a random level and stays available above it
    n_out = rng.randint(1, bounds.max_outcomes)
    listing = {lv: ["x0"] for lv in lat.elements}
    requires = {}
    for j in range(1, n_out + 1):
        oid = f"x{j}"
        base = rng.choice(lat.elements)
        for lv in L.up_set(lat, base):
            listing[lv].append(oid)
        if rng.random() < 0.5:
            requires[oid] = [rng.choice(agents)]
    spaces = build_outcome_spaces(lat, listing, requires, agents)

    vr = bounds.value_range
    entries = {}
    for a in agents:
        for lv in lat.elements:
            for t in ts.spaces[a, lv]:
                for o in spaces.at(lv):
                    entries[a, lv, t.id, o.id] = rng.randint(-vr, vr)
    return Scenario(lat, ts, spaces, ValueTable(entries), agents, "all",
                    TransferConfig("clarke", EXCLUDE), name=name)


def generate_instances(seed, bounds=Bounds(), count=50):
    """``count`` reproducible random scenarios."""
    rng = random.Random(seed)
    return [random_scenario(rng, bounds, name=f"gen-{seed}-{k}") for k in range(count)]
