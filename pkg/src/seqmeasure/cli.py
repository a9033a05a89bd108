"""Command-line entry point: density, build, converge, separate, verify, selftest."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from typing import Sequence

from . import hierarchy, separators
from .errors import ResourceLimitError, SeqMeasureError, TermParseError
from .measure import FinSuppMeasure, LevelMeasure, measure_from_json
from .natset import config, density_report, term_from_json

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_RESOURCE, EXIT_LEVEL = 0, 1, 2, 3, 4


class LevelOutOfRange(SeqMeasureError):
    pass


def rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc
    return value


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def fmt(x: Fraction | None) -> str:
    return "unknown" if x is None else f"{x.numerator}/{x.denominator}"


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise TermParseError(f"{path}: invalid JSON ({exc})") from exc


def _load_fixture(name: str):
    try:
        text = resources.files("seqmeasure.fixtures").joinpath(f"{name}.json").read_text("utf-8")
    except FileNotFoundError as exc:
        raise TermParseError(f"no packaged fixture named {name!r}") from exc
    return json.loads(text)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_level(level: int, max_level: int) -> None:
    if not 1 <= level <= max_level:
        raise LevelOutOfRange(f"level {level} outside 1..{max_level}")


# -- commands ----------------------------------------------------------------------

def cmd_density(args) -> int:
    t = term_from_json(_load_json(args.term))
    rep = density_report(t, args.N, args.max_prefix)
    if rep.kind == "unknown" and args.N is None:
        rep = density_report(t, min(1 << 16, config.max_prefix if args.max_prefix is None else args.max_prefix))
    if args.format == "json":
        _emit(json.dumps(rep.to_json()) + "\n", args.out)
    else:
        _emit(str(rep) + "\n", args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    _check_level(args.level, args.max_level)
    b = hierarchy.preset_build(args.level, args.k_max, args.max_level)
    rows = []
    for (gid, t), lam in zip(b.generators, b.lambdas):
        v = b.measure.eval(t)
        rows.append({"generator_id": gid, "value": fmt(v), "dyadic_mass": fmt(lam), "match": v == lam})
    if args.format == "json":
        _emit(json.dumps({"build": b.to_json(), "generators": rows}, indent=1) + "\n", args.out)
    else:
        lines = [f"# build {json.dumps(b.to_json())}", "generator_id,value,dyadic_mass,match"]
        lines += [f"{r['generator_id']},{r['value']},{r['dyadic_mass']},{int(r['match'])}" for r in rows]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_converge(args) -> int:
    _check_level(args.level, args.max_level)
    b = hierarchy.preset_build(args.level, args.k_max, args.max_level)
    rep = hierarchy.converge_check(b.stream(), b.measure, b.generators, args.tol, args.horizon,
                                   keep_values=args.format == "csv")
    verdict = (
        f"# verdict {'pass' if rep.passed else 'fail'} settle={rep.settle} "
        f"tol={fmt(rep.tol)} horizon={args.horizon} final_distance={fmt(rep.distances[-1])}\n"
    )
    if args.format == "json":
        _emit(json.dumps(rep.to_json()) + "\n", args.out)
    elif args.out:
        _emit(rep.to_csv(), args.out)
        sys.stdout.write(verdict)
    else:
        sys.stdout.write(rep.to_csv() + verdict)
    return EXIT_OK


def _separate(mode: str, data: dict, delta: Fraction | None) -> separators.Certificate:
    target = measure_from_json(data.get("target", {"level": 1, "tower": "uniform"}))
    if not isinstance(target, LevelMeasure):
        raise TermParseError("the target must be a level measure")
    if delta is None:
        delta = Fraction(data["delta"][0], data["delta"][1]) if "delta" in data else Fraction(1, 10)
    if mode == "finsupp":
        nu = measure_from_json(data["nu"])
        if not isinstance(nu, FinSuppMeasure):
            raise TermParseError("nu must be finitely supported")
        return separators.separate_finsupp(target, nu, delta)
    if mode == "claim3":
        stream = [(measure_from_json(e["measure"]), term_from_json(e["V"])) for e in data["stream"]]
        return separators.claim3_separator(target, stream, delta)
    if mode == "claim4":
        stream = [measure_from_json(m) for m in data["stream"]]
        if data.get("oracle", "dyadic") != "dyadic":
            raise TermParseError("only the dyadic oracle can be described in a file")
        oracle = separators.dyadic_oracle(stream, target.level - 1)
        return separators.claim4_separator(target, stream, oracle, delta)
    if mode == "nullunion":
        return separators.null_union([term_from_json(t) for t in data["terms"]], target)
    raise TermParseError(f"unknown separation mode {mode!r}")


def cmd_separate(args) -> int:
    if args.fixture:
        data = _load_fixture(args.fixture)
    elif args.inputs:
        data = _load_json(args.inputs)
    else:
        raise TermParseError("give --inputs FILE or --fixture NAME")
    try:
        cert = _separate(args.mode, data, args.delta)
    except (KeyError, TypeError, IndexError) as exc:
        raise TermParseError(f"malformed separation input: {exc}") from exc
    res = separators.verify(cert)
    _emit(json.dumps(cert.to_json(), indent=1) + "\n", args.out)
    if not res.ok:
        sys.stderr.write(f"verify failed: {res.diagnostic}\n")
        return EXIT_FAIL
    sys.stderr.write("verify ok\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    cert = separators.Certificate.from_json(_load_json(args.certificate))
    res = separators.verify(cert)
    sys.stdout.write("ok\n" if res.ok else f"fail: {res.diagnostic}\n")
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    report = run_selftest(args.seed, inject_fault=args.inject_fault)
    _emit(report.render(), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqmeasure", description=__doc__)
    p.add_argument("--max-prefix", type=positive_int, default=None,
                   help="largest prefix any command may enumerate (default 2^20)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="json"):
        sp.add_argument("--format", choices=["csv", "json"], default=fmt_default)
        sp.add_argument("--out", default=None, help="write the main output here")

    def level_opts(sp):
        sp.add_argument("--level", type=int, required=True)
        sp.add_argument("--max-level", type=int, default=hierarchy.DEFAULT_MAX_LEVEL)
        sp.add_argument("--k-max", type=positive_int, default=hierarchy.DEFAULT_K_MAX,
                        help="deepest dyadic generator level")

    sp = sub.add_parser("density", help="exact density or prefix estimate of a term")
    sp.add_argument("--term", required=True)
    sp.add_argument("--N", type=positive_int, default=None, help="prefix length for estimates")
    common(sp, "csv")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("build", help="level measure on the generator preset")
    level_opts(sp)
    common(sp, "csv")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("converge", help="witness-stream convergence table")
    level_opts(sp)
    sp.add_argument("--horizon", type=positive_int, default=hierarchy.DEFAULT_HORIZON)
    sp.add_argument("--tol", type=rational, default=hierarchy.DEFAULT_TOL)
    common(sp, "csv")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("separate", help="build and verify a separation certificate")
    sp.add_argument("mode", choices=["finsupp", "claim3", "claim4", "nullunion"])
    sp.add_argument("--inputs", default=None)
    sp.add_argument("--fixture", default=None, help="use a packaged input file")
    sp.add_argument("--delta", type=rational, default=None)
    common(sp)
    sp.set_defaults(func=cmd_separate)

    sp = sub.add_parser("verify", help="re-check a certificate file")
    sp.add_argument("certificate")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("selftest", help="run the invariant suites")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", None) is not None and not 0 < args.tol < 1:
        parser.error("--tol must lie strictly between 0 and 1")
    if getattr(args, "delta", None) is not None and args.delta <= 0:
        parser.error("--delta must be positive")
    saved = config.max_prefix
    if args.max_prefix is not None:
        config.set_max_prefix(args.max_prefix)
    try:
        return args.func(args)
    except (TermParseError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except ResourceLimitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    except LevelOutOfRange as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_LEVEL
    except SeqMeasureError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    finally:
        config.set_max_prefix(saved)


if __name__ == "__main__":
    sys.exit(main())
