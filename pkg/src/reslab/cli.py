"""Command line: ``reslab run --config <path>`` and ``reslab validate --config <path>``.

Exit codes: 0 success, 1 configuration error, 2 solver or output error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import format_config, parse_config
from .errors import ParseError, ReslabError, ValidationError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("RESLAB_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError("config", f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reslab", description="Open quantum system resonance toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configuration and write results")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    r.add_argument("--threads", type=int, default=None, help="worker processes (env RESLAB_THREADS)")
    v = sub.add_parser("validate", help="check a configuration without running it")
    v.add_argument("--config", required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = _load(args.config)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        sys.stdout.write(format_config(cfg))
        return EXIT_OK

    from .output import emit_results
    from .runner import run

    try:
        out = run(cfg, threads=_threads(args.threads))
        paths = emit_results(out, cfg, args.out)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReslabError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
