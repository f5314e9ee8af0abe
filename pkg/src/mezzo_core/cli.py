"""Command-line driver: ``check`` and ``run`` over ``.mz`` files."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .interp import RuntimeFault, eval_program
from .permcheck import Diagnostic, check_program
from .syntax import LexError, ParseError, parse_source

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_FAULT = 0, 1, 2, 3


def _dump_target(text: str):
    path, sep, line = text.rpartition(":")
    if not sep or not line.isdigit():
        raise argparse.ArgumentTypeError(f"expected FILE:LINE, got {text!r}")
    return path, int(line)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mzc", description="Permission checker and "
                                 "interpreter for Mezzo-core programs.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="type-check files")
    c.add_argument("files", nargs="+", metavar="FILE")
    c.add_argument("--dump-perms", type=_dump_target, action="append", default=[],
                   metavar="FILE:LINE",
                   help="print the permissions held just before the code on LINE")
    c.add_argument("--format", choices=("human", "json"), default="human")
    c.add_argument("-j", "--jobs", type=int, default=1,
                   help="check files in this many processes; output keeps input order")
    r = sub.add_parser("run", help="check, then evaluate an entry point")
    r.add_argument("file", metavar="FILE")
    r.add_argument("--entry", default="main")
    r.add_argument("--unchecked", action="store_true",
                   help="skip the checker (for demonstrating what it prevents)")
    return ap


def _use_color(stream) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def load(path: str):
    """Parse ``path``; return (program, None) or (None, diagnostic).
    Raises OSError when the file cannot be read."""
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    try:
        return parse_source(source), None
    except (LexError, ParseError) as err:
        return None, Diagnostic(path, err.loc.line, err.loc.col, "E-PARSE", err.message)


def _same_file(a: str, b: str) -> bool:
    try:
        return os.path.samefile(a, b)
    except OSError:
        return os.path.abspath(a) == os.path.abspath(b)


def check_file(path: str, lines=()):
    """Check one file; return (status, diagnostics, dumps, read error)."""
    try:
        prog, bad = load(path)
    except OSError as e:
        return EXIT_INPUT, [], [], f"{path}: cannot read file: {e.strerror}"
    if bad is not None:
        return EXIT_INPUT, [bad], [], None
    report = check_program(prog, path, lines)
    dumps = [{"file": path, "line": ln, "env": report.dumps.get(ln)} for ln in lines]
    return (EXIT_OK if report.ok else EXIT_CHECK), report.diagnostics, dumps, None


def _check_job(job):
    return check_file(*job)


def run_check(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    jobs = [(path, [ln for f, ln in args.dump_perms if _same_file(f, path)])
            for path in args.files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_check_job, jobs))
    else:
        results = [_check_job(j) for j in jobs]

    diags, dumps, status = [], [], EXIT_OK
    for code, ds, dps, problem in results:
        if problem:
            print(problem, file=err)
        diags.extend(ds)
        dumps.extend(dps)
        if code == EXIT_INPUT or (code == EXIT_CHECK and status == EXIT_OK):
            status = code

    if args.format == "json":
        print(json.dumps({"diagnostics": [d.to_dict() for d in diags], "dumps": dumps},
                         indent=2), file=out)
    else:
        color = _use_color(out)
        for d in diags:
            print(d.format(color), file=out)
        for dump in dumps:
            env = dump["env"]
            if env is None:
                env = "(no expression starts on this line)"
            print(f"{dump['file']}:{dump['line']}: {env}", file=out)
    return status


def run_exec(args, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        prog, bad = load(args.file)
    except OSError as e:
        print(f"{args.file}: cannot read file: {e.strerror}", file=err)
        return EXIT_INPUT
    if bad is not None:
        print(bad.format(_use_color(err)), file=err)
        return EXIT_INPUT
    if not args.unchecked:
        report = check_program(prog, args.file)
        if not report.ok:
            for d in report.diagnostics:
                print(d.format(_use_color(err)), file=err)
            return EXIT_CHECK
    try:
        value, interp = eval_program(prog, args.entry)
    except RuntimeFault as fault:
        print(f"{args.file}:{fault.loc.line}:{fault.loc.col}: runtime fault "
              f"[{fault.kind}]: {fault.message}", file=err)
        return EXIT_FAULT
    print(interp.render(value), file=out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return run_check(args)
    return run_exec(args)


if __name__ == "__main__":
    sys.exit(main())
