"""Command-line entry point: ``powerbias --suite NAME`` or ``powerbias --transform NAME --dist D``.

Exit status is 0 when every subtest passes, 1 on any statistical failure and
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from powerbias import transforms
from powerbias.dist import DistributionError, DistSpec
from powerbias.metrics import DEFAULT_ALPHA, CheckReport
from powerbias.suites import (
    DEFAULT_CHUNKS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    SUITE_NAMES,
    UsageError,
    resolve_candidate,
    run_suite,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# name -> (function, whether it takes a numeric argument)
TRANSFORMS = {
    "power-bias": (transforms.power_bias, True),
    "zero-bias": (transforms.zero_bias_rep, False),
    "equilibrium": (transforms.equilibrium_rep, False),
    "power": (transforms.power_of, True),
    "scale": (transforms.scale, True),
}

CSV_FIELDS = ["suite", "seed", "samples", "chunks", "name", "statistic", "threshold", "expect", "pass",
              "threshold_bonferroni", "pass_bonferroni"]


def render_json(report: CheckReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def render_csv(report: CheckReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in report.subtests:
        writer.writerow({"suite": report.suite, "seed": report.seed, "samples": report.n, "chunks": report.chunks,
                         **row.to_dict()})
    return buf.getvalue()


def emit(report: CheckReport, out_path: str | Path | None, fmt: str = "json") -> str:
    """Serialize ``report``; write it to ``out_path`` or return the text when None."""
    if fmt not in ("json", "csv"):
        raise UsageError(f"unknown format {fmt!r}")
    text = render_json(report) if fmt == "json" else render_csv(report)
    if out_path is not None:
        path = Path(out_path)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return text


def write_plot_data(report: CheckReport, directory: str | Path) -> list[Path]:
    """One CSV per subtest carrying ECDF data, columns ``x, ecdf, reference``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rows = [(report.suite, s) for s in report.subtests]
    for suite, sub in rows:
        if not sub.plot:
            continue
        stem = "".join(ch if ch.isalnum() else "_" for ch in f"{suite}_{sub.name}").strip("_")
        path = out / f"{stem}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "ecdf", "reference"])
            w.writerows([[repr(a), repr(b), repr(c)] for a, b, c in sub.plot])
        written.append(path)
    return written


def parse_param(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise UsageError(f"parameter {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="powerbias", description="Run Monte Carlo and numeric verification suites.")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--suite", choices=SUITE_NAMES)
    mode.add_argument("--transform", choices=sorted(TRANSFORMS),
                      help="print the transformed --dist as JSON instead of running a suite")
    p.add_argument("--dist", default=None, help="distribution for --transform: a candidate name or JSON object")
    p.add_argument("--arg", type=float, default=None, help="exponent or scale factor for --transform")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--chunks", type=int, default=DEFAULT_CHUNKS,
                   help="independent substreams per draw; part of the result (default %(default)s)")
    p.add_argument("--workers", type=int, default=None,
                   help="threads used to fill chunks; never changes the result")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE",
                   help="suite parameter; VALUE is parsed as JSON when possible")
    p.add_argument("--plot-data", default=None, metavar="DIR", help="write ECDF tables for KS subtests")
    return p


def apply_transform(name: str, dist: str | None, arg: float | None) -> DistSpec:
    fn, takes_arg = TRANSFORMS[name]
    if dist is None:
        raise UsageError("--transform needs --dist")
    if takes_arg == (arg is None):
        raise UsageError(f"transform {name!r} {'needs' if takes_arg else 'takes no'} --arg")
    d = resolve_candidate(dist, 0)
    try:
        return fn(d, arg) if takes_arg else fn(d)
    except DistributionError as exc:
        raise UsageError(f"{name} of {d!r}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.transform is not None:
        try:
            result = apply_transform(args.transform, args.dist, args.arg)
        except UsageError as exc:
            print(f"powerbias: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        sys.stdout.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
        return EXIT_PASS
    try:
        params = dict(parse_param(t) for t in args.param)
        report = run_suite(args.suite, params, args.seed, args.samples, args.chunks, alpha=args.alpha,
                           workers=args.workers, plot=args.plot_data is not None)
    except UsageError as exc:
        print(f"powerbias: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = emit(report, args.out, args.format)
    if args.out is None:
        sys.stdout.write(text)
    if args.plot_data is not None:
        write_plot_data(report, args.plot_data)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
