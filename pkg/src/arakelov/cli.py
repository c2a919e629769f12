"""Command-line interface.

Every command builds a :class:`~arakelov.records.JobSpec`, runs it (or
replays it from the cache) and writes JSON, CSV and SVG files to ``--out``.
Exit codes: 0 success, 1 output files could not be written, 2 parse
error, 3 budget exceeded, 4 precision failure, 5 an inequality check found a
violation (the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

from .jobs import load_json_arg, run_job
from .lattice import DEFAULT_BUDGET, BudgetExceeded
from .logreal import PrecisionError
from .norms import NormError
from .numring import RingError
from .records import JobSpec, SpecError, canonical_json, emit_outputs
from .volume import VolumeError

EXIT_OK = 0
EXIT_OUTPUT = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_PRECISION = 4
EXIT_VIOLATION = 5

_ALIASES = {
    ("curve", "volume"): "curve-volume",
    ("curve", "degree"): "curve-degree",
    ("curve", "continuity"): "curve-continuity",
    ("curve", "prop37"): "prop37",
    ("curve", "bigness"): "bigness",
    ("p1", "hs"): "p1-hs",
    ("p1", "gromov"): "p1-gromov",
    ("p1", "count"): "p1-count",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for stochastic steps (default 0)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="cap on lattice points examined per enumeration")
    p.add_argument("--out", default=".", help="directory for the JSON/CSV/SVG outputs (default: current directory)")
    p.add_argument("--format", default="json,csv,svg", help="comma-separated subset of json,csv,svg")
    p.add_argument("--cache-dir", default=None, help="cache directory (default: $ARAKELOV_CACHE or ~/.cache/arakelov)")
    p.add_argument("--no-cache", action="store_true", help="recompute even when a cached record exists")
    p.add_argument("--quiet", action="store_true", help="do not print the JSON summary")


def _module_cmd(sub, name, help_text):
    p = sub.add_parser(name, help=help_text)
    p.add_argument("module", help="module JSON: inline text or a file path")
    _common(p)
    return p


def _curve_args(p, *keys):
    for key in keys:
        p.add_argument(f"--{key}", required=key in ("L", "A"), help=f"normed invertible module {key} as JSON text or path")


def _add_curve_commands(sub, prefix: str):
    """Register the curve commands as ``<prefix>name`` (flat) or under a group."""
    p = sub.add_parser(f"{prefix}volume", help="h0(mL + N) series and its slope")
    _curve_args(p, "L", "N")
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--count-cap", type=int, default=None, help="stop before the first m whose count exceeds this (default 1e6 when --m-max is absent)")
    _common(p)
    p = sub.add_parser(f"{prefix}degree", help="arithmetic degree: the sum of the weights")
    _curve_args(p, "L")
    _common(p)
    p = sub.add_parser(f"{prefix}continuity", help="volume of L + eps A against adeg L + eps adeg A")
    _curve_args(p, "L", "A")
    p.add_argument("--eps", type=_floats, default=[0.2, 0.1, 0.05])
    p.add_argument("--m", type=int, default=30)
    _common(p)


def _add_p1_commands(sub, prefix: str):
    p = sub.add_parser(f"{prefix}hs", help="2 h0(m)/m^2 and 2 chi(m)/m^2 for the sup-norm")
    p.add_argument("--m-max", type=int, default=5)
    p.add_argument("--samples", type=int, default=200_000)
    _p1_common(p)
    p = sub.add_parser(f"{prefix}gromov", help="max sup^2 / ((m+1)^2 L2^2) over random integer forms")
    p.add_argument("--m-max", type=int, default=10)
    p.add_argument("--trials", type=int, default=200)
    _p1_common(p)
    p = sub.add_parser(f"{prefix}count", help="number of integer forms of norm at most one")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--kind", choices=("sup", "l2"), default="sup")
    _p1_common(p)


def _p1_common(p):
    p.add_argument("--grid", type=int, default=None, help="sup-search grid points per chart direction")
    p.add_argument("--tol", type=float, default=1e-10, help="sup refinement tolerance")
    _common(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arakelov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = _module_cmd(sub, "hzero", "log of the number of points of norm at most one, plus log of the torsion order")
    p.add_argument("--points", default=None, help="also stream the points to this file (one per line; bypasses the cache)")
    p = _module_cmd(sub, "hone", "h0 of the dual module")
    p.add_argument("--method", choices=("dual", "polar"), default="dual")
    p = _module_cmd(sub, "chi", "log volume of the unit ball plus log of the torsion order")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--rel-ci", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--monte-carlo", action="store_true", help="estimate the volume even when a closed form exists")
    _module_cmd(sub, "dual", "the dual module as JSON")

    p = sub.add_parser("gs-check", help="run the inequality harness over a module suite")
    p.add_argument("--suite", default=None, help="JSON list of modules (default: the bundled rank <= 3 suite)")
    p.add_argument("--a-values", type=_floats, default=[1.5, 2, 3])
    p.add_argument("--lambdas", type=_floats, default=[0.1, 0.5, 1, 2])
    _common(p)

    _add_curve_commands(sub, "curve-")
    p = sub.add_parser("prop37", help="check the rank-one comparison bound over 0 <= c <= b <= a <= a_max")
    _curve_args(p, "L", "A")
    p.add_argument("--s", required=True, help="the section s as a JSON list of integer coordinates")
    p.add_argument("--a-max", type=int, default=12)
    _common(p)
    p = sub.add_parser("bigness", help="classify L as big or not big")
    _curve_args(p, "L")
    p.add_argument("--m-probe", type=int, default=10)
    _common(p)
    _add_p1_commands(sub, "p1-")

    group = sub.add_parser("curve", help="arithmetic-curve commands")
    gsub = group.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    _add_curve_commands(gsub, "")
    p = gsub.add_parser("prop37", help="same as the top-level prop37 command")
    _curve_args(p, "L", "A")
    p.add_argument("--s", required=True)
    p.add_argument("--a-max", type=int, default=12)
    _common(p)
    p = gsub.add_parser("bigness", help="same as the top-level bigness command")
    _curve_args(p, "L")
    p.add_argument("--m-probe", type=int, default=10)
    _common(p)

    group = sub.add_parser("p1", help="projective-line commands")
    gsub = group.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    _add_p1_commands(gsub, "")
    return parser


def spec_from_args(args) -> JobSpec:
    command = args.command
    if command in ("curve", "p1"):
        command = _ALIASES[(command, args.subcommand)]
    inputs: dict = {}
    options: dict = {}
    a = vars(args)
    if command in ("hzero", "hone", "chi", "dual"):
        inputs["module"] = load_json_arg(args.module)
    for key in ("L", "A", "N"):
        if a.get(key) is not None:
            inputs[key] = load_json_arg(a[key])
    if a.get("s") is not None:
        inputs["s"] = load_json_arg(args.s)
    if command == "gs-check" and args.suite is not None:
        inputs["suite"] = load_json_arg(args.suite)
    option_keys = {
        "hzero": ("points",),
        "hone": ("method",),
        "chi": ("samples", "rel_ci", "workers", "monte_carlo"),
        "gs-check": ("a_values", "lambdas"),
        "curve-volume": ("m_max", "count_cap"),
        "curve-continuity": ("eps", "m"),
        "prop37": ("a_max",),
        "bigness": ("m_probe",),
        "p1-hs": ("m_max", "samples", "grid", "tol"),
        "p1-gromov": ("m_max", "trials", "grid", "tol"),
        "p1-count": ("m", "kind", "grid", "tol"),
    }.get(command, ())
    for key in option_keys:
        v = a.get(key)
        if v is not None and v is not False:
            options[key] = v
    return JobSpec(command, inputs, args.seed, args.budget, options)


def _writes_points(args) -> bool:
    return bool(getattr(args, "points", None))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        record = run_job(spec, cache_dir=args.cache_dir, use_cache=not (args.no_cache or _writes_points(args)))
    except (SpecError, NormError, RingError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PrecisionError, VolumeError) as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    try:
        emit_outputs(record, args.out, formats)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    if not args.quiet:
        summary = record.to_json()
        summary["payload"] = {k: v for k, v in summary["payload"].items() if k not in ("tables", "plots")}
        print(canonical_json(summary))
    if record.violations:
        print(f"{record.violations} violation(s) found", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
