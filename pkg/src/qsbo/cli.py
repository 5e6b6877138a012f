"""Run the QS-BO vs Random Search benchmark matrix and write report files.

Example::

    qsbo --function branin --runs 20 --out results/
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .acquisition import ACQUISITIONS, AcquisitionSpec
from .benchmarks import BENCHMARKS, get_benchmark
from .errors import DegenerateDataError, InvalidInputError, RunError
from .optimizer import OptimizerConfig, RunResult, qsbo_run, random_search_run
from .stats import (
    SummaryStats,
    TestResult,
    paired_t_test,
    summarize,
    two_sample_t_test,
    wilcoxon_signed_rank,
)
from .surrogate import KERNEL_FAMILIES

log = logging.getLogger("qsbo")

METHODS = ("qsbo", "random")
T_TESTS = ("paired", "welch", "student")


@dataclass(frozen=True)
class ExperimentPlan:
    functions: tuple = tuple(BENCHMARKS)
    methods: tuple = METHODS
    n_runs: int = 20
    base_seed: int = 0
    n_init: int = 5
    n_iter: int = 30
    n_candidates: int = 5000
    acquisition: str = "ei"
    kernel: str = "se"
    t_test: str = "paired"
    out_dir: str = "results"

    def __post_init__(self):
        if self.n_runs < 1:
            raise InvalidInputError("n_runs must be at least 1")
        for name in self.functions:
            get_benchmark(name)
        for m in self.methods:
            if m not in METHODS:
                raise InvalidInputError(f"unknown method {m!r}")
        if self.t_test not in T_TESTS:
            raise InvalidInputError(f"unknown t-test variant {self.t_test!r}")
        if self.base_seed < 0:
            raise InvalidInputError("seed must be nonnegative")
        self.optimizer_config(self.base_seed)

    @property
    def budget(self) -> int:
        return self.n_init + self.n_iter

    def optimizer_config(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(
            n_init=self.n_init,
            n_iter=self.n_iter,
            n_candidates=self.n_candidates,
            acquisition=AcquisitionSpec(self.acquisition),
            kernel=self.kernel,
            seed=seed,
        )

    def jobs(self):
        """(function, method, seed) for every planned run, in report order."""
        return [
            (f, m, self.base_seed + i)
            for f in self.functions
            for m in self.methods
            for i in range(self.n_runs)
        ]


@dataclass
class CellReport:
    function: str
    method: str
    seeds: list
    finals: list
    summary: Optional[SummaryStats]
    complete: bool
    errors: list = field(default_factory=list)


@dataclass
class ComparisonReport:
    plan: ExperimentPlan
    cells: list
    tests: dict
    results: list = field(default_factory=list, repr=False)

    @property
    def complete(self) -> bool:
        return all(c.complete for c in self.cells)

    def cell(self, function: str, method: str) -> CellReport:
        for c in self.cells:
            if c.function == function and c.method == method:
                return c
        raise KeyError((function, method))

    def to_dict(self) -> dict:
        # the output location does not affect results, so it stays out of the record
        plan = {k: v for k, v in asdict(self.plan).items() if k != "out_dir"}
        return {
            "plan": plan,
            "complete": self.complete,
            "cells": [asdict(c) for c in self.cells],
            "tests": {
                f: {k: (asdict(v) if v is not None else None) for k, v in tests.items()}
                for f, tests in self.tests.items()
            },
            "runs": [
                dict(function=f, error=err, **(r.to_dict() if r is not None else {}))
                for f, r, err in self.results
            ],
        }


def _execute(plan: ExperimentPlan, job):
    function, method, seed = job
    bench = get_benchmark(function)
    try:
        if method == "qsbo":
            result = qsbo_run(bench, bench.domain, plan.optimizer_config(seed))
        else:
            result = random_search_run(bench, bench.domain, plan.budget, seed)
        return result, None
    except RunError as exc:
        return exc.partial, str(exc)


def _t_test(plan: ExperimentPlan, a, b) -> TestResult:
    if plan.t_test == "paired":
        return paired_t_test(a, b)
    return two_sample_t_test(a, b, equal_var=plan.t_test == "student")


def run_experiment(plan: ExperimentPlan, workers: int = 1) -> ComparisonReport:
    """Execute every planned run and assemble the comparison report.

    Run ``i`` of every method uses seed ``base_seed + i`` so that the two
    methods can be compared pairwise.
    """
    jobs = plan.jobs()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute, [plan] * len(jobs), jobs))
    else:
        outcomes = []
        for job in jobs:
            outcomes.append(_execute(plan, job))
            log.info("%s/%s seed=%d done", *job)

    results = []
    by_cell = {}
    for (function, method, seed), (result, error) in zip(jobs, outcomes):
        results.append((function, result, error))
        by_cell.setdefault((function, method), []).append((seed, result, error))

    cells = []
    for (function, method), runs in by_cell.items():
        errors = [f"seed {s}: {e}" for s, _, e in runs if e is not None]
        finals = [r.final_best for s, r, e in runs if e is None]
        cells.append(CellReport(
            function=function,
            method=method,
            seeds=[s for s, _, e in runs if e is None],
            finals=finals,
            summary=summarize(finals) if finals else None,
            complete=not errors,
            errors=errors,
        ))

    tests = {}
    if set(METHODS) <= set(plan.methods) and plan.n_runs >= 2:
        for function in plan.functions:
            pair = {m: next(c for c in cells if c.function == function and c.method == m)
                    for m in METHODS}
            if not all(pair[m].complete for m in METHODS):
                continue
            a, b = pair["qsbo"].finals, pair["random"].finals
            entry = {}
            for key, test in (("t_test", lambda: _t_test(plan, a, b)),
                              ("wilcoxon", lambda: wilcoxon_signed_rank(a, b))):
                try:
                    entry[key] = test()
                except DegenerateDataError as exc:
                    log.warning("%s %s skipped: %s", function, key, exc)
                    entry[key] = None
            tests[function] = entry
    return ComparisonReport(plan=plan, cells=cells, tests=tests, results=results)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, str)):
        return str(value)
    return format(float(value), ".10g")


def emit_reports(report: ComparisonReport, results=None, directory=None) -> list:
    """Write summary, significance, finals, convergence and JSON report files."""
    results = report.results if results is None else results
    out = Path(directory if directory is not None else report.plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write_rows(name, header, rows):
        path = out / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[_fmt(v) for v in row] for row in rows])
        written.append(path)

    write_rows(
        "summary.csv",
        ["function", "method", "mean", "median", "std", "min", "max"],
        [
            [c.function, c.method] + (
                [c.summary.mean, c.summary.median, c.summary.std_dev, c.summary.min, c.summary.max]
                if c.summary else [None] * 5
            )
            for c in report.cells
        ],
    )

    sig_rows = []
    for function, t in report.tests.items():
        tt, wx = t.get("t_test"), t.get("wilcoxon")
        sig_rows.append([
            function,
            tt.statistic if tt else None, tt.p_value if tt else None,
            wx.statistic if wx else None, wx.p_value if wx else None,
        ])
    write_rows("significance.csv", ["function", "t_stat", "p_t", "W", "p_wilcoxon"], sig_rows)

    for function in report.plan.functions:
        cols = [report.cell(function, m) for m in report.plan.methods]
        depth = max(len(c.finals) for c in cols)
        write_rows(
            f"finals_{function}.csv",
            [c.method for c in cols],
            [[c.finals[i] if i < len(c.finals) else None for c in cols] for i in range(depth)],
        )
        for method in report.plan.methods:
            runs = [r for f, r, e in results if f == function and r is not None
                    and r.method == method and e is None]
            write_rows(
                f"convergence_{function}_{method}.csv",
                [f"seed_{r.seed}" for r in runs],
                [[r.best_curve[k] for r in runs] for k in range(report.plan.budget)] if runs else [],
            )

    path = out / "report.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsbo",
        description="Benchmark rank-based Bayesian optimization against random search.",
    )
    parser.add_argument("--function", action="append", choices=sorted(BENCHMARKS),
                        help="test function (repeatable; default: all)")
    parser.add_argument("--method", action="append", choices=METHODS,
                        help="method (repeatable; default: both)")
    parser.add_argument("--runs", type=_positive_int, default=20)
    parser.add_argument("--seed", type=_nonnegative_int, default=0, help="base seed")
    parser.add_argument("--n-init", type=_positive_int, default=5)
    parser.add_argument("--n-iter", type=_nonnegative_int, default=30)
    parser.add_argument("--candidates", type=_positive_int, default=5000)
    parser.add_argument("--acquisition", choices=ACQUISITIONS, default="ei")
    parser.add_argument("--kernel", choices=KERNEL_FAMILIES, default="se")
    parser.add_argument("--t-test", choices=T_TESTS, default="paired",
                        help="t-test variant for significance.csv")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_args(argv=None) -> ExperimentPlan:
    return _parse(argv)[0]


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    functions = tuple(dict.fromkeys(args.function)) if args.function else tuple(BENCHMARKS)
    methods = tuple(m for m in METHODS if m in args.method) if args.method else METHODS
    plan = ExperimentPlan(
        functions=functions,
        methods=methods,
        n_runs=args.runs,
        base_seed=args.seed,
        n_init=args.n_init,
        n_iter=args.n_iter,
        n_candidates=args.candidates,
        acquisition=args.acquisition,
        kernel=args.kernel,
        t_test=args.t_test,
        out_dir=args.out,
    )
    return plan, args


def main(argv=None) -> int:
    plan, args = _parse(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    report = run_experiment(plan, workers=args.jobs)
    for path in emit_reports(report):
        print(path)
    if not report.complete:
        for cell in report.cells:
            for err in cell.errors:
                print(f"error: {cell.function}/{cell.method} {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
