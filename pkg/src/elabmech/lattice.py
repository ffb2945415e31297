"""Finite lattices of awareness levels.

Levels are opaque string labels. A lattice is built once from an explicit
order (or from the powerset generator) and validated; every later query is
a table lookup.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations, product

from .errors import NotALattice, NotAPartialOrder, UnknownElement

AwarenessLevel = str


@dataclass(frozen=True, eq=False)
class AwarenessLattice:
    elements: tuple[AwarenessLevel, ...]
    order: frozenset[tuple[AwarenessLevel, AwarenessLevel]]
    join_table: dict = field(repr=False)
    meet_table: dict = field(repr=False)
    top: AwarenessLevel
    bottom: AwarenessLevel
    rank: dict = field(repr=False)
    source: dict = field(default=None, repr=False, compare=False)

    def __contains__(self, level):
        return level in self.rank

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def check(self, *levels):
        for lv in levels:
            if lv not in self.rank:
                raise UnknownElement(f"unknown awareness level {lv!r}")

    @property
    def height(self):
        """Number of edges in the longest chain."""
        return self.rank[self.top]

    def to_json(self):
        if self.source is not None:
            return dict(self.source)
        covers = sorted(covering_pairs(self))
        return {"kind": "explicit", "elements": list(self.elements),
                "order": [list(p) for p in covers]}


def _closure(elements, pairs):
    idx = {e: k for k, e in enumerate(elements)}
    n = len(elements)
    le = [[i == j for j in range(n)] for i in range(n)]
    for lo, hi in pairs:
        le[idx[lo]][idx[hi]] = True
    for k in range(n):
        for i in range(n):
            if le[i][k]:
                row_k = le[k]
                row_i = le[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return {(elements[i], elements[j]) for i in range(n) for j in range(n) if le[i][j]}


def _bound(elements, order, a, b, upper):
    if upper:
        cands = [c for c in elements if (a, c) in order and (b, c) in order]
        best = [c for c in cands if all((c, d) in order for d in cands)]
    else:
        cands = [c for c in elements if (c, a) in order and (c, b) in order]
        best = [c for c in cands if all((d, c) in order for d in cands)]
    return cands, best


def build_lattice(elements, order_pairs, source=None):
    """Validate a finite poset given by ``(lower, upper)`` pairs and tabulate join/meet."""
    elements = list(dict.fromkeys(elements))
    if not elements:
        raise NotALattice("a lattice needs at least one element")
    known = set(elements)
    for lo, hi in order_pairs:
        for e in (lo, hi):
            if e not in known:
                raise UnknownElement(f"order pair ({lo!r}, {hi!r}) references undeclared element {e!r}")
    order = _closure(elements, order_pairs)
    for a, b in combinations(elements, 2):
        if (a, b) in order and (b, a) in order:
            raise NotAPartialOrder(f"antisymmetry violated: {a!r} and {b!r} lie on a cycle")

    join_table, meet_table = {}, {}
    for a, b in product(elements, repeat=2):
        if (a, b) in join_table:
            continue
        for upper, table, name in ((True, join_table, "join"), (False, meet_table, "meet")):
            cands, best = _bound(elements, order, a, b, upper)
            if len(best) != 1:
                kind = "no common bound" if not cands else f"{len(best)} incomparable minimal bounds"
                raise NotALattice(f"pair ({a!r}, {b!r}) has no unique {name}: {kind}")
            table[a, b] = table[b, a] = best[0]

    top = reduce(lambda x, y: join_table[x, y], elements)
    bottom = reduce(lambda x, y: meet_table[x, y], elements)

    # longest-chain rank from bottom; strict order is acyclic
    below = {e: [d for d in elements if (d, e) in order and d != e] for e in elements}
    rank = {}

    def _rank(e):
        if e not in rank:
            rank[e] = 1 + max((_rank(d) for d in below[e]), default=-1)
        return rank[e]

    for e in elements:
        _rank(e)
    ordered = tuple(sorted(elements, key=lambda e: (rank[e], e)))
    return AwarenessLattice(ordered, frozenset(order), join_table, meet_table,
                            top, bottom, rank, source)


def powerset_label(subset, items):
    members = [x for x in items if x in subset]
    return "{" + ",".join(members) + "}"


def powerset_lattice(items):
    """Lattice of all subsets of ``items`` ordered by inclusion; labels look like ``{a,b}``."""
    items = list(dict.fromkeys(items))
    subsets = [frozenset(c) for r in range(len(items) + 1) for c in combinations(items, r)]
    label = {s: powerset_label(s, items) for s in subsets}
    pairs = [(label[s], label[s | {x}]) for s in subsets for x in items if x not in s]
    return build_lattice([label[s] for s in subsets], pairs,
                         source={"kind": "powerset", "items": items})


def chain_lattice(labels):
    labels = list(labels)
    return build_lattice(labels, list(zip(labels, labels[1:])),
                         source={"kind": "explicit", "elements": labels,
                                 "order": [[a, b] for a, b in zip(labels, labels[1:])]})


def leq(lat, a, b):
    lat.check(a, b)
    return (a, b) in lat.order


def join(lat, a, b):
    lat.check(a, b)
    return lat.join_table[a, b]


def meet(lat, a, b):
    lat.check(a, b)
    return lat.meet_table[a, b]


def join_all(lat, levels):
    return reduce(lambda x, y: join(lat, x, y), levels, lat.bottom)


def down_set(lat, level):
    lat.check(level)
    return frozenset(e for e in lat.elements if (e, level) in lat.order)


def up_set(lat, level):
    lat.check(level)
    return frozenset(e for e in lat.elements if (level, e) in lat.order)


def strictly_below(lat, level):
    return down_set(lat, level) - {level}


def topo_ascending(lat):
    """Linear extension of the order: by chain rank from bottom, then label."""
    return list(lat.elements)


def covering_pairs(lat):
    """Pairs ``(lo, hi)`` with ``lo < hi`` and nothing strictly between."""
    out = set()
    for lo, hi in lat.order:
        if lo == hi:
            continue
        if not any((lo, m) in lat.order and (m, hi) in lat.order and m not in (lo, hi)
                   for m in lat.elements):
            out.add((lo, hi))
    return out


def sublattice(lat, level):
    """The down-set of ``level`` as a lattice in its own right (top = ``level``)."""
    keep = [e for e in lat.elements if (e, level) in lat.order]
    pairs = [(a, b) for a, b in covering_pairs(lat) if a in keep and b in keep]
    return build_lattice(keep, pairs)


def lattice_law_violations(lat):
    """Exhaustively check bound properties and lattice laws; return a list of messages."""
    bad = []
    els = lat.elements
    J, M, le = lat.join_table, lat.meet_table, lat.order
    for a, b in product(els, repeat=2):
        j, m = J[a, b], M[a, b]
        if (a, j) not in le or (b, j) not in le:
            bad.append(f"join({a},{b})={j} is not an upper bound")
        if (m, a) not in le or (m, b) not in le:
            bad.append(f"meet({a},{b})={m} is not a lower bound")
        for c in els:
            if (a, c) in le and (b, c) in le and (j, c) not in le:
                bad.append(f"join({a},{b})={j} not below upper bound {c}")
            if (c, a) in le and (c, b) in le and (c, m) not in le:
                bad.append(f"meet({a},{b})={m} not above lower bound {c}")
        if J[a, b] != J[b, a] or M[a, b] != M[b, a]:
            bad.append(f"commutativity fails at ({a},{b})")
        if J[a, M[a, b]] != a or M[a, J[a, b]] != a:
            bad.append(f"absorption fails at ({a},{b})")
    for a in els:
        if J[a, a] != a or M[a, a] != a:
            bad.append(f"idempotence fails at {a}")
    for a, b, c in product(els, repeat=3):
        if J[J[a, b], c] != J[a, J[b, c]] or M[M[a, b], c] != M[a, M[b, c]]:
            bad.append(f"associativity fails at ({a},{b},{c})")
    if J[lat.bottom, lat.top] != lat.top or any((lat.bottom, e) not in le or (e, lat.top) not in le for e in els):
        bad.append("top/bottom are not extremal")
    return bad
