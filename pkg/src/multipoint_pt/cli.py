"""Command-line entry point ``mpt``."""

from __future__ import annotations

import argparse
import contextlib
import sys
from typing import Optional, Sequence

from . import bench, checks
from .errors import MultipointError


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--M", type=int, default=None, help="planewave cutoff (default 30)")
    p.add_argument("--k", type=int, default=None, help="eigenvalue level, 1-based (default 1)")
    p.add_argument("--mu", type=float, default=None, help="energy norm shift (default 1)")
    p.add_argument("--kappa", type=float, default=None, help="energy norm exponent (default 1)")
    p.add_argument("--config", default=None, help="YAML configuration (packaged default if omitted)")
    p.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    p.add_argument("--seed", type=int, default=0, help="seed for the random instances of verify")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpt", description="Multipoint perturbation theory experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run identity and oracle checks; nonzero exit on failure")
    _common(p)

    p = sub.add_parser("converge", help="convergence sweeps as CSV")
    _common(p)
    p.add_argument("--kind", choices=bench.KINDS, required=True)
    p.add_argument("--rule", choices=["fair", "by_norm"], default=None, help="reference choice for P_l")

    p = sub.add_parser("heatmap", help="errors over an (alpha_1, alpha_2) grid as CSV")
    _common(p)
    p.add_argument("--rule", choices=["fair", "by_norm"], default=None)
    p.add_argument("--chained", action="store_true", help="add the fitted D_2 + standard order-2 rows (C2)")

    p = sub.add_parser("complexity", help="symbolic cost tables")
    _common(p)
    p.add_argument("--n", type=int, default=None, help="number of reference points (symbolic if omitted)")
    for name in ("m", "p", "q"):
        p.add_argument(f"--cost-{name}", type=float, default=None, help=f"numeric value of {name} for the crossover tests")
    return parser


def _config(args) -> bench.ExperimentConfig:
    return bench.ExperimentConfig.load(
        args.config,
        M=args.M,
        k=args.k,
        mu=args.mu,
        kappa=args.kappa,
        closest_rule=getattr(args, "rule", None),
    )


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _verify(args) -> int:
    failed = 0
    for result in checks.run_all(args.seed):
        print(result.line())
        failed += not result.passed
    print(f"{failed} check(s) failed" if failed else "all checks passed")
    return 1 if failed else 0


def _converge(args) -> int:
    config = _config(args)
    records = bench.run_convergence(args.kind, config)
    with _output(args.out) as fh:
        bench.write_csv(records, fh)
    if args.kind == "affine":
        for method in ("P0", "P1", "P2", "P3", "D0", "D1", "D2"):
            try:
                slope = bench.fit_slope(bench.series(records, method), config.noise_floor, config.preasymptotic_cutoff)
                print(f"slope {method}: {slope:.3f}", file=sys.stderr)
            except MultipointError as exc:
                print(f"slope {method}: {exc}", file=sys.stderr)
    return 0


def _heatmap(args) -> int:
    records = bench.run_heatmap(_config(args), chained=args.chained or None)
    with _output(args.out) as fh:
        bench.write_csv(records, fh)
    return 0


def _complexity(args) -> int:
    standard, multipoint = bench.complexity_tables(args.n)
    lines = ["table,order,offline,online"]
    lines += [f"standard,{c.order},{c.offline},{c.online}" for c in standard]
    lines += [f"multipoint,{c.order},{c.offline},{c.online}" for c in multipoint]
    for name, pred in bench.crossover_predicates(args.n).items():
        lines.append(f"crossover,{name},,{pred}")
    costs = (args.cost_m, args.cost_p, args.cost_q)
    if args.n is not None and None not in costs:
        for name, ok in bench.evaluate_predicates(args.n, *costs).items():
            lines.append(f"crossover_at_costs,{name},,{ok}")
    with _output(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"verify": _verify, "converge": _converge, "heatmap": _heatmap, "complexity": _complexity}
    try:
        return handler[args.command](args)
    except MultipointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
