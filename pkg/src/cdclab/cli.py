"""Command line entry point: ``cdclab {surface,simulate,share,verify,report}``.

Each invocation reads an optional JSON config (``--config``); explicit flags
override its keys. Exit status is 0 on pass, 1 on any failed check and 2 on
a configuration error. Output goes to ``--out``, else to a default file name
inside ``$CDCLAB_OUTPUT_DIR`` when that is set, else to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import harness
from .d3c import DecodeError, SchemeError, build_scheme, scheme_to_json
from .harness import ConfigError

OUTPUT_DIR_ENV = "CDCLAB_OUTPUT_DIR"
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("cdclab")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdclab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, argument_default=S)
        p.add_argument("--config", type=Path, help="JSON config; flags override its keys")
        p.add_argument("--out", type=Path, help="output file (default: stdout)")
        return p

    p = add("surface", "export the optimal tradeoff surface as CSV")
    p.add_argument("--K", type=int)
    p.add_argument("--r-step", dest="r_step")
    p.add_argument("--c-step", dest="c_step")
    p.add_argument("--float", dest="float_columns", action="store_true", help="add decimal columns")

    p = add("simulate", "run one D3C corner scheme end to end")
    for flag in ("K", "r", "g", "eta", "T", "F", "B", "seed"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--dump-scheme", type=Path, help="also write the scheme layout as JSON")
    p.add_argument("--timing", action="store_true", help="add wall-clock time to the report")

    p = add("share", "run a time/memory-shared mix of two corner schemes")
    p.add_argument("--K", type=int)
    p.add_argument("--a", help="first corner as 'r,g'")
    p.add_argument("--b", help="second corner as 'r,g'")
    p.add_argument("--alpha", help="share of files given to the first corner, 'p/q'")
    for flag in ("T", "F", "B", "seed"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--timing", action="store_true")

    p = add("verify", "check the converse counting bound on small instances")
    p.add_argument("--K", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--r", help="storage budget, 'p/q'")
    p.add_argument("--c", help="computation budget, 'p/q'")
    p.add_argument("--mode", choices=["exhaustive", "random"])
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true")

    p = add("report", "simulate every corner for a list of K and emit measured vs analytic CSV")
    p.add_argument("--Ks", type=int, nargs="+")
    for flag in ("F", "B", "seed"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--float", dest="float_columns", action="store_true")
    return parser


DEFAULT_NAMES = {
    "surface": "surface.csv",
    "simulate": "simulate.json",
    "share": "share.json",
    "verify": "verify.json",
    "report": "report.csv",
}


def _merge(args: argparse.Namespace) -> dict[str, Any]:
    data: dict[str, Any] = {}
    path = getattr(args, "config", None)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        data.pop("command", None)
    skip = {"command", "config", "out", "verbose", "dump_scheme", "timing"}
    data.update({k: v for k, v in vars(args).items() if k not in skip})
    return data


def _emit(text: str, args: argparse.Namespace) -> None:
    out = getattr(args, "out", None)
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / DEFAULT_NAMES[args.command]
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    log.info("wrote %s", out)


def _dump(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2) + "\n"


def run(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = harness.make_config(args.command, _merge(args))
    except ConfigError as exc:
        print(f"cdclab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    timing = getattr(args, "timing", False)
    try:
        if args.command == "surface":
            _emit(harness.write_csv(harness.surface_rows(cfg), cfg.float_columns), args)
            return EXIT_PASS
        if args.command == "report":
            rows, ok = harness.run_report(cfg)
            _emit(harness.write_csv(rows, cfg.float_columns), args)
            return EXIT_PASS if ok else EXIT_FAIL
        if args.command == "simulate":
            report = harness.run_simulate(cfg, timing)
            dump = getattr(args, "dump_scheme", None)
            if dump is not None:
                scheme = build_scheme(cfg.K, cfg.r, cfg.g, cfg.eta)
                Path(dump).write_text(json.dumps(scheme_to_json(scheme, cfg.T), indent=1) + "\n")
        elif args.command == "share":
            report = harness.run_share(cfg, timing)
        else:
            report = harness.run_verify(cfg, timing)
    except (SchemeError, DecodeError) as exc:
        print(f"cdclab: {exc}", file=sys.stderr)
        return EXIT_FAIL

    _emit(_dump(report), args)
    if not report["passed"]:
        if report.get("mismatches"):
            target, file = report["mismatches"][0]
            print(f"cdclab: decode mismatch at IVA v_{{{target},{file}}}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def main() -> None:
    try:
        code = run()
    except BrokenPipeError:
        # downstream closed the pipe (e.g. `| head`); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_PASS
    sys.exit(code)


if __name__ == "__main__":
    main()
