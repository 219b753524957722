"""``chiralcdr`` command line.

Exit codes: 0 when every check passes, 1 when any check fails, 2 for usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import re
import sys
from typing import List, Optional, TextIO

from ..cdr import Patch
from ..tduality import DualPairSetup
from .config import ConfigError, load_config
from .lang import LoweringError, ParseError, evaluate
from .report import FORMATS, Report, emit_report
from .suites import SUITES, run_all, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_DIRECTIVE = re.compile(r"%\s*(\w+)\s*(.*)$")


class UsageError(ValueError):
    pass


def _context_from_directive(kind: str, args: str):
    if kind == "patch":
        opts = dict(re.findall(r"(\w+)\s*=\s*(\d+)", args))
        unknown = set(opts) - {"n", "m"}
        if unknown:
            raise UsageError(f"unknown patch option(s) {sorted(unknown)}")
        P = Patch.standard(int(opts.get("n", 1)), int(opts.get("m", 0)))
        return P.ctx, P.structure.as_dict()
    if kind == "quotient":
        if args.strip() not in ("", "point"):
            raise UsageError("only '% quotient point' is supported")
        S = DualPairSetup.point()
        return S.Z.ctx, {}
    raise UsageError(f"unknown directive %{kind}")


def run_ope_file(lines: List[str], out: TextIO, name: str = "<input>") -> int:
    """Evaluate one query per line; ``% patch n=.. m=..`` switches the patch."""
    P = Patch.standard(1)
    ctx, env = P.ctx, P.structure.as_dict()
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DIRECTIVE.match(line)
        try:
            if m:
                ctx, env = _context_from_directive(m.group(1), m.group(2))
                continue
            result = evaluate(line, ctx, env)
        except ParseError as exc:
            col = f":{exc.pos + 1}" if exc.pos >= 0 else ""
            print(f"{name}:{lineno}{col}: syntax error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (LoweringError, UsageError) as exc:
            print(f"{name}:{lineno}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"{line}  =>  {result}", file=out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chiralcdr", description="Exact chiral de Rham and T-duality checks.")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("ope", help="evaluate lambda-bracket, circle and mode queries from a file")
    o.add_argument("expr_file", help="file with one query per line, or '-' for stdin")

    v = sub.add_parser("verify", help="run one verification suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("config", nargs="?", help="INI config (built-in default if omitted)")
    v.add_argument("--format", choices=FORMATS, default="text")

    c = sub.add_parser("character", help="print the base-point cohomology character grid")
    c.add_argument("config", nargs="?")

    r = sub.add_parser("report", help="run every suite and emit one report")
    r.add_argument("--format", choices=FORMATS, default="text")
    r.add_argument("--config")
    return p


def main(argv: Optional[List[str]] = None, out: TextIO = None) -> int:
    out = out or sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "ope":
            if args.expr_file == "-":
                lines = sys.stdin.read().splitlines()
            else:
                try:
                    with open(args.expr_file, encoding="utf-8") as fh:
                        lines = fh.read().splitlines()
                except OSError as exc:
                    print(f"chiralcdr: {exc}", file=sys.stderr)
                    return EXIT_USAGE
            return run_ope_file(lines, out, args.expr_file)
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"chiralcdr: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "verify":
        rep = run_suite(args.suite, cfg)
        out.write(emit_report(rep, args.format))
        return rep.exit_code()
    if args.command == "character":
        rep = run_suite("characters", cfg)
        for title in sorted(rep.tables):
            out.write(f"{title}\n{rep.tables[title]}\n\n")
        out.write(emit_report(Report(rep.records), "text"))
        return rep.exit_code()
    rep = run_all(cfg)
    out.write(emit_report(rep, args.format))
    return rep.exit_code()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
