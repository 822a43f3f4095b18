"""Command-line driver: solve, verify against brute force, and join benchmarks."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import joins, oracle
from .dpengine import (PRESET_NAMES, SideSet, SigmaRhoSpec, SolveReport, Variant,
                       build_label_set, presets, solve)
from .graphio import GraphParseError, TdError, min_fill_heuristic, parse_graph, parse_td
from .modring import choose_prime

VARIANT_ALIASES = {
    "existence": Variant.EXISTENCE,
    "min": Variant.MIN, "minimise": Variant.MIN, "minimize": Variant.MIN,
    "max": Variant.MAX, "maximise": Variant.MAX, "maximize": Variant.MAX,
    "count": Variant.COUNT,
    "count_min": Variant.COUNT_MIN, "count_max": Variant.COUNT_MAX,
}


def parse_side(text: str) -> SideSet:
    """`0,1` is the finite set {0,1}; `cofinite:0,1` lists the complement."""
    text = text.strip()
    if text.startswith("cofinite:"):
        rest = text[len("cofinite:"):]
        vals = [int(x) for x in rest.split(",") if x != ""]
        return SideSet.cofinite_from_complement(vals)
    vals = [int(x) for x in text.split(",") if x != ""]
    return SideSet.finite(vals)


def parse_problem(text: str) -> SigmaRhoSpec:
    """Preset name, `name(p)` for parameterized presets, or explicit
    `sigma=<set> rho=<set>` with sets per parse_side."""
    text = text.strip()
    if "sigma=" in text or "rho=" in text:
        sigma = rho = None
        for tok in text.replace(";", " ").split():
            if tok.startswith("sigma="):
                sigma = parse_side(tok[len("sigma="):])
            elif tok.startswith("rho="):
                rho = parse_side(tok[len("rho="):])
            else:
                raise ValueError(f"unrecognized problem token {tok!r}")
        if sigma is None or rho is None:
            raise ValueError("explicit problems need both sigma= and rho=")
        return build_label_set(sigma, rho, name=text)
    if "(" in text and text.endswith(")"):
        name, arg = text[:-1].split("(", 1)
        return presets(name.strip(), int(arg))
    return presets(text)


def _format_answer(variant: Variant, answer) -> str:
    if answer is None:
        return "infeasible"
    if variant is Variant.EXISTENCE:
        return "true" if answer else "false"
    if variant in (Variant.COUNT_MIN, Variant.COUNT_MAX):
        return f"{answer[0]} {answer[1]}"
    return str(answer)


def _json_answer(variant: Variant, answer):
    if answer is None or variant is Variant.EXISTENCE or variant is Variant.COUNT:
        return answer
    if variant in (Variant.COUNT_MIN, Variant.COUNT_MAX):
        return {"size": answer[0], "count": answer[1]}
    return answer


def _load_instance(args):
    with open(args.graph) as fh:
        g = parse_graph(fh.read())
    td = None
    if args.td:
        with open(args.td) as fh:
            td = parse_td(fh.read(), g)
    return g, td


def _strategies(name: str) -> str:
    return {"naive": "naive", "fast": "fast_general", "auto": "auto"}[name]


def cmd_solve(args) -> int:
    spec = parse_problem(args.problem)
    variant = VARIANT_ALIASES[args.variant]
    g, td = _load_instance(args)
    report = SolveReport()
    answer = solve(g, spec, variant, td=td, join_strategy=_strategies(args.join),
                   use_replacement=args.replacement, report=report)
    if args.format == "json":
        doc = {
            "answer": _json_answer(variant, answer),
            "problem": spec.name or args.problem,
            "sigma": spec.sigma.describe(),
            "rho": spec.rho.describe(),
            "variant": variant.value,
            "width": report.width,
            "nice_nodes": report.nice_nodes,
            "join_nodes": report.join_nodes,
            "strategy": report.strategy,
            "primes": list(report.primes),
            "ops": report.ops or {},
        }
        print(json.dumps(doc))
    else:
        print(_format_answer(variant, answer))
        print(f"width: {report.width}", file=sys.stderr)
        print(f"nice nodes: {report.nice_nodes} (joins: {report.join_nodes})",
              file=sys.stderr)
        print(f"strategy: {report.strategy}", file=sys.stderr)
        print(f"primes: {list(report.primes)}", file=sys.stderr)
        if report.ops:
            print(f"field multiplications: {report.ops['mul']}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    spec = parse_problem(args.problem)
    variant = VARIANT_ALIASES[args.variant]
    g, td = _load_instance(args)
    expected = oracle.brute_force_solve(g, spec, variant)
    failures = 0
    for strategy in ("naive", "fast_general"):
        got = solve(g, spec, variant, td=td, join_strategy=strategy,
                    use_replacement=args.replacement)
        ok = got == expected
        failures += not ok
        tag = "PASS" if ok else "FAIL"
        print(f"{tag} {strategy}: dp={_format_answer(variant, got)} "
              f"brute_force={_format_answer(variant, expected)}")
    return 2 if failures else 0


def cmd_bench(args) -> int:
    """Field-multiplication counts of one join per (bag size, strategy)."""
    spec = parse_problem(args.problem)
    variant = VARIANT_ALIASES[args.variant]
    if variant is not Variant.COUNT:
        raise SystemExit("bench measures the counting join")
    rng = np.random.default_rng(args.seed)
    print("k,strategy,mults")
    from .dpengine import MemoTable

    for k in range(args.kmin, args.kmax + 1):
        orders = joins.needed_orders(spec, k, args.kmax + 2, False)
        cells = spec.s ** k
        for strategy in ("naive", "fast"):
            field = choose_prime(orders, 1 << 24)
            left = MemoTable(tuple(range(k)), variant,
                             rng.integers(0, field.p, cells, dtype=np.int64))
            right = MemoTable(tuple(range(k)), variant,
                              rng.integers(0, field.p, cells, dtype=np.int64))
            field.ops.reset()
            if strategy == "naive":
                joins.naive_join(left, right, spec, variant, field)
            else:
                joins.fast_join_general(left, right, spec, variant, field)
            print(f"{k},{strategy},{field.ops.mul}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="sigmarho",
        description="Exact [sigma,rho]-domination solving on tree decompositions")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, graph=True):
        p.add_argument("--problem", required=True,
                       help="preset name, name(p), or 'sigma=... rho=...' "
                            f"(presets: {', '.join(PRESET_NAMES)})")
        p.add_argument("--variant", default="min", choices=sorted(VARIANT_ALIASES))
        if graph:
            p.add_argument("--graph", required=True, help="PACE .gr file")
            p.add_argument("--td", help="PACE .td file (default: min-fill heuristic)")
        p.add_argument("--replacement", default="auto", choices=["auto", "on", "off"])

    ps = sub.add_parser("solve", help="solve one instance")
    common(ps)
    ps.add_argument("--join", default="auto", choices=["naive", "fast", "auto"])
    ps.add_argument("--format", default="plain", choices=["plain", "json"])
    ps.set_defaults(fn=cmd_solve)

    pv = sub.add_parser("verify", help="cross-check DP against brute force")
    common(pv)
    pv.set_defaults(fn=cmd_verify)

    pb = sub.add_parser("bench", help="join operation-count scaling (CSV)")
    common(pb, graph=False)
    pb.add_argument("--kmin", type=int, default=8)
    pb.add_argument("--kmax", type=int, default=12)
    pb.add_argument("--seed", type=int, default=7)
    pb.set_defaults(fn=cmd_bench)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (GraphParseError, TdError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
