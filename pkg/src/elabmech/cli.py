"""Command-line entry point: validate, run, verify, example1."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction

from .engine import TruthTelling, run
from .errors import ElabError, ValidationError
from .generate import generate_instances, parse_bounds
from .scenario import TransferConfig, dump_trace, example1, load_scenario
from .transfers import family_from_config, vcg_transfers
from .verify import PROPERTIES, default_cap, run_suite
from .welfare import MARGINAL_MODES

# published numbers for the procurement example
EXAMPLE1_EXPECTED = {
    "announcements": ("{a,b,c}", "{a,b,c}", "{a,b,c}"),
    "stages": 3,
    "outcome": "agent1_produces",
    "transfers": (Fraction(0), Fraction(0), Fraction(-80)),
    "surplus": Fraction(80),
    "bonus": (Fraction(0), Fraction(0), Fraction(0)),
    "revealer": None,
}


def _load(path):
    return example1() if path == "example1" else load_scenario(path)


def _with_scheme(sc, args):
    if args.scheme is None and args.marginal_mode is None and args.y is None:
        return sc
    scheme = args.scheme or sc.scheme.scheme
    mode = args.marginal_mode or sc.scheme.marginal_mode
    if scheme == "clarke":
        cfg = TransferConfig("clarke", mode)
    else:
        y = args.y if args.y is not None else (sc.scheme.y if sc.scheme.scheme == "vcg" else "zero")
        if isinstance(y, str) and y != "zero":
            y = Fraction(y)
        cfg = TransferConfig("vcg", mode, y)
    return replace(sc, scheme=cfg, cache={})


def cmd_validate(args, out):
    sc = _load(args.file)
    print(f"ok: {len(sc.agents)} agents, {len(sc.lattice.elements)} levels, "
          f"height {sc.lattice.height}", file=out)
    return 0


def cmd_run(args, out):
    sc = _with_scheme(_load(args.file), args)
    draws = list(sc.iter_draws())
    picked = range(len(draws)) if args.draw == "all" else [int(args.draw)]
    y = family_from_config(sc, sc.scheme)
    for k in picked:
        if not 0 <= k < len(draws):
            raise ValidationError(f"draw index {k} out of range (scenario has {len(draws)})")
        tr = run(sc, draws[k], [TruthTelling() for _ in sc.agents])
        print(dump_trace(tr, vcg_transfers(sc, tr, y)), file=out)
    return 0


def _scenarios_for_verify(args):
    if args.generate:
        seed, _, bounds = args.generate.partition(",")
        bounds = "" if bounds in ("", "default") else bounds
        return generate_instances(int(seed), parse_bounds(bounds), args.count)
    if not args.file:
        raise ValidationError("verify needs a scenario file or --generate SEED,BOUNDS")
    return [_load(args.file)]


def cmd_verify(args, out):
    props = PROPERTIES if args.property == "all" else (args.property,)
    cap = args.cap if args.cap is not None else default_cap()
    results = run_suite(_scenarios_for_verify(args), props, cap, args.jobs)
    doc = [{"scenario": name, "reports": [r.to_json() for r in reps]} for name, reps in results]
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    else:
        print(json.dumps(doc), file=out)
    tally = {}
    for _, reps in results:
        for r in reps:
            key = (r.property, r.stats.get("family", ""))
            tally.setdefault(key, {"pass": 0, "fail": 0, "capped": 0})[r.status] += 1
    print(f"{'property':<24} {'family':<32} {'pass':>5} {'fail':>5} {'capped':>7}", file=out)
    for (prop, fam), c in sorted(tally.items()):
        print(f"{prop:<24} {fam:<32} {c['pass']:>5} {c['fail']:>5} {c['capped']:>7}", file=out)
    bad = any(c["fail"] for c in tally.values())
    return 1 if bad else 0


def example1_summary(marginal_mode=None):
    sc = example1()
    if marginal_mode:
        sc = replace(sc, scheme=TransferConfig("clarke", marginal_mode), cache={})
    draw = next(sc.iter_draws())
    tr = run(sc, draw, [TruthTelling() for _ in sc.agents])
    res = vcg_transfers(sc, tr, family_from_config(sc, sc.scheme))
    return sc, tr, res, {
        "announcements": tuple(tr.announcements),
        "stages": len(tr),
        "outcome": res.outcome.id,
        "transfers": res.ordered(),
        "surplus": res.surplus,
        "bonus": tuple(res.bonus_term[a] for a in sc.agents),
        "revealer": res.revealer,
    }


def cmd_example1(args, out):
    sc, tr, res, got = example1_summary(args.marginal_mode)
    print(dump_trace(tr, res), file=out)
    mismatches = 0
    for key, want in EXAMPLE1_EXPECTED.items():
        have = got[key]
        ok = have == want
        mismatches += not ok
        show = (lambda v: "(" + ", ".join(str(x) for x in v) + ")") if isinstance(want, tuple) else str
        print(f"{'ok  ' if ok else 'DIFF'} {key:<14} computed {show(have)}  published {show(want)}",
              file=out)
    return 1 if mismatches else 0


def build_parser():
    p = argparse.ArgumentParser(prog="elabmech",
                                description="Dynamic direct elaboration mechanisms under asymmetric awareness.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="play truthful runs and print JSON-lines traces")
    r.add_argument("file", help="scenario JSON, or 'example1'")
    r.add_argument("--draw", default="0", help="draw index or 'all' (default 0)")
    r.add_argument("--scheme", choices=["clarke", "vcg"])
    r.add_argument("--marginal-mode", choices=MARGINAL_MODES)
    r.add_argument("--y", help="constant y for the vcg scheme, or 'zero'")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("verify", help="run the brute-force property checkers")
    c.add_argument("file", nargs="?")
    c.add_argument("--generate", metavar="SEED,BOUNDS",
                   help="verify generated instances, e.g. 42,default or 7,agents=2-3,levels=4")
    c.add_argument("--count", type=int, default=50)
    c.add_argument("--property", default="all", choices=("all",) + PROPERTIES)
    c.add_argument("--cap", type=int, help="node cap (default: ELABMECH_CAP or built-in)")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--report", help="write the JSON report here instead of stdout")
    c.set_defaults(func=cmd_verify)

    e = sub.add_parser("example1", help="run the built-in procurement example and compare")
    e.add_argument("--marginal-mode", choices=MARGINAL_MODES)
    e.set_defaults(func=cmd_example1)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ElabError as e:
        print(f"error: {e}", file=sys.stderr)
        for problem in getattr(e, "problems", None) or ():
            print(f"  {problem}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
