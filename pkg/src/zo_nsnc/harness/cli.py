"""``zo-nsnc`` command line: run, compare, bench, verify.

Exit status: 0 success, 1 a run or check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from .config import ConfigError, load_config, parse_overrides, parse_value
from .experiment import ExperimentSpec, bench, compare, format_failure, run_experiment
from .output import ratio_row, table_row, write_history, write_table

DEFAULT_GAMMA_KINDS = "constant,sqrt_decay,linear_decay"
DEFAULT_A_VALUES = "0.01,0.1,1.0"


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="CSV table path (stdout when omitted)")
    p.add_argument("--plot-data", dest="plot_data", help="long-format convergence history CSV")
    p.add_argument("--figures", help="directory for PNG convergence figures")
    p.add_argument("--jobs", type=int, default=1, help="replications run in parallel")
    p.add_argument("--quiet", action="store_true", help="silence solver warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zo-nsnc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replicated runs of one algorithm")
    run.add_argument("--config", required=True)
    _common(run)

    cmp_ = sub.add_parser("compare", help="two configurations under one budget")
    cmp_.add_argument("configs", nargs="+", metavar="CONFIG",
                      help="two config files, or one file run with both algorithms")
    _common(cmp_)

    bn = sub.add_parser("bench", help="grid over stepsize kinds and batch slopes")
    bn.add_argument("--config", required=True)
    bn.add_argument("--gamma-kinds", dest="gamma_kinds", default=DEFAULT_GAMMA_KINDS)
    bn.add_argument("--a-values", dest="a_values", default=DEFAULT_A_VALUES)
    _common(bn)

    vf = sub.add_parser("verify", help="run the invariant self-checks")
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--scale", type=float, default=1.0, help="multiplier on sample counts")
    return parser


def _load(path: str, overrides: dict) -> dict:
    raw = load_config(path)
    raw.update(overrides)
    return raw


def _emit(args, rows, reports) -> None:
    write_table(args.out if args.out else sys.stdout, rows)
    if args.plot_data:
        write_history(args.plot_data, reports)
    if args.figures:
        from .plotting import render_figures

        for path in render_figures(reports, args.figures):
            print(f"wrote {path}", file=sys.stderr)


def _report_failures(reports) -> int:
    status = 0
    for rep in reports:
        for res in rep.failed:
            print(format_failure(res), file=sys.stderr)
            status = 1
    return status


def cmd_run(args, overrides) -> int:
    spec = ExperimentSpec.from_raw(_load(args.config, overrides))
    report = run_experiment(spec, args.jobs)
    _emit(args, [table_row(report)], [report])
    return _report_failures([report])


def cmd_compare(args, overrides) -> int:
    if len(args.configs) == 1:
        base = _load(args.configs[0], overrides)
        raw_a, raw_b = dict(base, algo="vrsqn"), dict(base, algo="vrg")
    elif len(args.configs) == 2:
        raw_a, raw_b = _load(args.configs[0], overrides), _load(args.configs[1], overrides)
    else:
        raise ConfigError("compare takes one or two config files")
    ra, rb, rat = compare(ExperimentSpec.from_raw(raw_a), ExperimentSpec.from_raw(raw_b), args.jobs)
    _emit(args, [table_row(ra), table_row(rb), ratio_row(ra, rb, rat)], [ra, rb])
    return _report_failures([ra, rb])


def _list(text: str, kind=str):
    return [kind(parse_value(t)) if kind is not str else t.strip() for t in text.split(",") if t.strip()]


def cmd_bench(args, overrides) -> int:
    base = _load(args.config, overrides)
    reports = bench(base, _list(args.gamma_kinds), _list(args.a_values, float), args.jobs)
    _emit(args, [table_row(r) for r in reports], reports)
    return _report_failures(reports)


def cmd_verify(args) -> int:
    from .verify import run_checks

    status = 0
    for res in run_checks(args.seed, args.scale):
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        status |= not res.passed
    return int(status)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "verify":
            if extra:
                raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
            return cmd_verify(args)
        overrides = parse_overrides(extra)
        if args.quiet:
            warnings.simplefilter("ignore")
        handler = {"run": cmd_run, "compare": cmd_compare, "bench": cmd_bench}[args.command]
        return handler(args, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
