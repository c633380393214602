"""Command-line front end.

Subcommands: ``query`` (single run), ``bench`` (grid experiment), ``verify``
(claim suite), ``filter-info`` (build and report a filter).  Exit codes:
0 success, 1 acceptance failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

from .filters import FilterBuildError, build_filter, load_filter, save_filter
from .harness import (
    ConfigError,
    ExperimentConfig,
    records_to_jsonl,
    run_experiment,
    run_verification_suite,
    summary_to_csv,
)

EXIT_OK = 0
EXIT_ACCEPTANCE_FAILURE = 1
EXIT_BAD_CONFIG = 2


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _add_run_flags(sub: argparse.ArgumentParser, grid: bool) -> None:
    if grid:
        sub.add_argument("--n", type=_int_list, default=[1024, 4096])
        sub.add_argument("--k", type=_int_list, default=[4, 8, 16])
        sub.add_argument("--eps", type=_float_list, default=[0.25, 0.5])
    else:
        sub.add_argument("--n", type=int, default=4096)
        sub.add_argument("--k", type=int, default=8)
        sub.add_argument("--eps", type=float, default=0.5)
    sub.add_argument("--delta", type=float, default=1e-3)
    sub.add_argument("--gamma", type=float, default=0.25)
    sub.add_argument("--const-c", type=float, default=4.0)
    sub.add_argument("--alpha-const", type=float, default=200.0)
    sub.add_argument("--trials", type=int, default=1 if not grid else 3)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--signal-model", default="sparse-plus-gaussian",
                     choices=["planted-sparse", "sparse-plus-gaussian",
                              "adversarial-near-bucket"])
    sub.add_argument("--noise-sigma", type=float, default=0.01)
    sub.add_argument("--query-model", default="superset",
                     choices=["exact-support", "superset", "disjoint"])
    sub.add_argument("--out", default=None, help="write output here instead of stdout")
    sub.add_argument("--format", default="jsonl", choices=["jsonl", "csv"])
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--no-timing", action="store_true",
                     help="omit wall times for byte-identical reruns")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _config_from_args(args, n: int, k: int, eps: float, trials: int) -> ExperimentConfig:
    return ExperimentConfig(
        n=n, k=k, eps=eps, delta=args.delta, gamma=args.gamma,
        const_c=args.const_c, alpha_const=args.alpha_const, trials=trials,
        seed=args.seed, signal_model=args.signal_model,
        noise_sigma=args.noise_sigma, query_model=args.query_model,
        threads=args.threads, include_timing=not args.no_timing,
    )


def _cmd_query(args) -> int:
    config = _config_from_args(args, args.n, args.k, args.eps, args.trials)
    result = run_experiment(config)
    if args.format == "csv":
        _emit(summary_to_csv([result.summary]), args.out)
    else:
        _emit(records_to_jsonl(result.records, result.summary), args.out)
    return EXIT_OK


def _cmd_bench(args) -> int:
    lines: list[str] = []
    summaries: list[dict] = []
    failed = False
    for n in args.n:
        for k in args.k:
            for eps in args.eps:
                config = _config_from_args(args, n, k, eps, args.trials)
                result = run_experiment(config)
                summaries.append(result.summary)
                if args.format == "jsonl":
                    lines.append(
                        records_to_jsonl(result.records, result.summary).rstrip("\n")
                    )
                if args.require_success_rate is not None:
                    if result.summary["success_rate_proof"] < args.require_success_rate:
                        failed = True
    if args.format == "csv":
        _emit(summary_to_csv(summaries), args.out)
    else:
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_ACCEPTANCE_FAILURE if failed else EXIT_OK


def _cmd_verify(args) -> int:
    checks = run_verification_suite(
        n=args.n, trials=args.trials, seed=args.seed, filter_delta=args.delta
    )
    report = "\n".join(c.line() for c in checks) + "\n"
    _emit(report, args.out)
    if not all(c.passed for c in checks):
        return EXIT_ACCEPTANCE_FAILURE
    return EXIT_OK


def _cmd_filter_info(args) -> int:
    try:
        if args.load:
            fp = load_filter(args.load)
        else:
            fp = build_filter(args.n, args.b, args.delta, args.alpha)
    except FilterBuildError as exc:
        sys.stderr.write(f"filter build failed: {exc}\n")
        return EXIT_ACCEPTANCE_FAILURE
    if args.save:
        save_filter(fp, args.save)
    info = {
        "n": fp.n,
        "buckets": fp.buckets,
        "delta": fp.delta,
        "alpha": fp.alpha,
        "support": fp.support_size,
        "support_constant": fp.support_constant,
        "leakage": fp.leakage,
        "flat_radius": fp.flat_radius,
        "stop_radius": fp.stop_radius,
    }
    _emit(json.dumps(info, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setquery",
        description="Estimate Fourier coefficients on a query set from few samples.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    q = subs.add_parser("query", help="run one experiment config")
    _add_run_flags(q, grid=False)
    q.set_defaults(func=_cmd_query)

    b = subs.add_parser("bench", help="run a (n, k, eps) grid of experiments")
    _add_run_flags(b, grid=True)
    b.add_argument("--require-success-rate", type=float, default=None,
                   help="exit 1 if any grid point's proof-form rate is lower")
    b.set_defaults(func=_cmd_bench)

    v = subs.add_parser("verify", help="run the probabilistic claim suite")
    v.add_argument("--n", type=int, default=1024)
    v.add_argument("--trials", type=int, default=10**4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--delta", type=float, default=1e-3)
    v.add_argument("--out", default=None)
    v.set_defaults(func=_cmd_verify)

    f = subs.add_parser("filter-info", help="build or load a filter and report it")
    f.add_argument("--n", type=int, default=1024)
    f.add_argument("--b", type=int, default=32)
    f.add_argument("--delta", type=float, default=1e-3)
    f.add_argument("--alpha", type=float, default=0.25)
    f.add_argument("--save", default=None, help="write binary filter cache here")
    f.add_argument("--load", default=None, help="read filter from a cache file")
    f.add_argument("--out", default=None)
    f.set_defaults(func=_cmd_filter_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
