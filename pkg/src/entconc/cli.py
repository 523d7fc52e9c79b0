"""Command-line entry point: ``entconc run | verify | export``.

Exit codes: 0 success, 1 invalid input, 2 verification failure.
Relative ``--output`` paths are resolved against ``$ENTCONC_OUTPUT_DIR`` when
that variable is set.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import circuits, combinat, protocol, verify
from .analysis import YieldTable
from .errors import ContractViolation

OUTPUT_DIR_ENV = "ENTCONC_OUTPUT_DIR"
DEFAULT_ALPHA = 0.70710678118654757  # 1/sqrt(2)

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    alpha: float = DEFAULT_ALPHA
    n: int = 3
    trials: int = 1000
    seed: int = 0
    engine: str = protocol.MIRRORED
    output_format: str = "table"
    output_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise UsageError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if self.n < 1:
            raise UsageError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}")


def _resolve(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
        return
    path = _resolve(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def format_table(table: YieldTable) -> str:
    head = f"{'j':>3} {'P(j)':>12} {'k':>3} {'E[pairs|j]':>12} {'k-2':>4} {'empirical':>10} {'trials':>7}"
    lines = [f"alpha={table.alpha!r} n={table.n} engine={table.engine} seed={table.base_seed}",
             head, "-" * len(head)]
    for r in table.rows:
        emp = "" if r.empirical_mean is None else f"{r.empirical_mean:.4f}"
        lines.append(f"{r.j:>3} {r.prob_j:>12.6g} {r.k:>3} {float(r.expected_pairs_exact):>12.6f} "
                     f"{r.lower_bound_k_minus_2:>4} {emp:>10} {r.trials:>7}")
    lines.append("")
    lines.append(f"expected pairs (exact)      {table.analytic_expected_pairs:.6f}")
    if table.trials:
        var = table.empirical_variance or 0.0
        se = math.sqrt(var / table.trials)
        lines.append(f"empirical mean pairs        {table.empirical_mean:.6f} +/- {se:.6f} "
                     f"({table.trials} trials)")
    lines.append(f"lower bound sum (k-2)       {table.lower_bound:.6f} "
                 f"(clamped at 0: {table.lower_bound_clamped:.6f})")
    lines.append(f"concentrated entropy        {table.concentrated_entropy:.6f}")
    lines.append(f"entropy ceiling nH(a^2)     {table.entropy_ceiling:.6f}")
    if table.min_fidelity is not None:
        lines.append(f"minimum fidelity            {table.min_fidelity:.12f}")
    return "\n".join(lines) + "\n"


def cmd_run(cfg: RunConfig) -> int:
    p = protocol.PairParams(cfg.alpha, cfg.n)
    if cfg.trials == 1 and cfg.output_format == "table":
        o = protocol.run_protocol(p, cfg.seed, cfg.engine)
        print(f"j={o.j} k={o.k} l={o.l} pairs={o.pairs} fidelity={o.fidelity_vs_ideal:.12f}")
    table = protocol.run_trials(p, cfg.trials, cfg.seed, cfg.engine, workers=cfg.workers)
    if cfg.output_format == "csv":
        text = table.to_csv()
    elif cfg.output_format == "json":
        text = table.to_json()
    else:
        text = format_table(table)
    _emit(text, cfg.output_path)
    return EXIT_OK


def cmd_verify(scope: str = "all") -> int:
    ok = True
    for sc, name, passed, detail in verify.run_checks(scope):
        print(f"[{'PASS' if passed else 'FAIL'}] {sc}: {name} -- {detail}", flush=True)
        ok &= passed
    return EXIT_OK if ok else EXIT_VERIFY


def build_netlist(network: str, n: int, j: int | None = None,
                  direction: str = circuits.INVERSE) -> str:
    if network == "hamming":
        return circuits.build_hamming_network(n).netlist()
    if j is None:
        raise UsageError(f"--j is required for the {network} network")
    if not 0 <= j <= n:
        raise UsageError(f"need 0 <= j <= n, got n={n}, j={j}")
    if network == "perm":
        return circuits.build_perm_network(n, j, direction).netlist()
    exp = combinat.binomial_expansion(n, j)
    header = f"# expansion C({n},{j})={exp.value} x={exp.bits}\n"
    return header + circuits.build_cascade_network(exp.k).netlist()


def cmd_export(network: str, n: int, j: int | None, direction: str, output: str | None) -> int:
    _emit(build_netlist(network, n, j, direction), output)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entconc", description="Entanglement concentration simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the protocol and tabulate pair yields")
    run.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                     help="amplitude of |00> in each pair (default 0.70710678118654757)")
    run.add_argument("--n", type=int, default=3, help="number of shared pairs")
    run.add_argument("--trials", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--engine", choices=protocol.ENGINES, default=protocol.MIRRORED)
    run.add_argument("--format", choices=("table", "csv", "json"), default="table")
    run.add_argument("--output", help="write to this file instead of stdout")
    run.add_argument("--workers", type=int, default=1, help="worker processes for trials")

    ver = sub.add_parser("verify", help="run exhaustive and oracle checks")
    ver.add_argument("scope", nargs="?", default="all", choices=("all", *verify.SCOPES))

    exp = sub.add_parser("export", help="write a network as a text netlist")
    exp.add_argument("network", choices=("hamming", "perm", "cascade"))
    exp.add_argument("--n", type=int, required=True)
    exp.add_argument("--j", type=int)
    exp.add_argument("--direction", choices=(circuits.INVERSE, circuits.FORWARD),
                     default=circuits.INVERSE, help="perm network direction")
    exp.add_argument("--output")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = RunConfig(args.alpha, args.n, args.trials, args.seed, args.engine,
                            args.format, args.output, args.workers)
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(args.scope)
        if args.n < 1:
            raise UsageError(f"n must be >= 1, got {args.n}")
        return cmd_export(args.network, args.n, args.j, args.direction, args.output)
    except (UsageError, ContractViolation) as exc:
        print(f"entconc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"entconc: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
