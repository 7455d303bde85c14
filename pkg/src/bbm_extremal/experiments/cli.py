"""``bbm-extremal`` command line.

Exit status: 0 when the run completes and every checked criterion holds,
1 when it completes but a criterion fails, 2 on any configuration or
execution error (a JSON error record goes to stderr and, when the output
directory is known, to ``error.json`` there).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import traceback
from pathlib import Path

from . import config as config_mod
from .commands import COMMANDS, Run
from .manifest import (MANIFEST_NAME, RunManifest, inventory, load_manifest, staging, tool_version,
                       write_manifest)

EXIT_OK, EXIT_CRITERION, EXIT_ERROR = 0, 1, 2

# per-command defaults layered under the config file
COMMAND_DEFAULTS = {
    "sample-aux": {"replicas": 200},
    "sample-cluster": {"replicas": 200, "sampler": {"t": 8.0}},
    "compare-laplace": {"replicas": 500},
    "atom-window": {"replicas": 2000, "sampler": {"t": 16.0}},
    "genealogy-diagnostic": {"replicas": 50, "engine": {"horizon": 12.0}},
    "superposition": {"replicas": 500},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bbm-extremal", description="Extremal process of branching Brownian motion")
    p.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    sub = p.add_subparsers(dest="command")
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="YAML experiment config")
        s.add_argument("--seed", type=int)
        s.add_argument("--replicas", type=int)
        s.add_argument("--out", help=f"output root (default ${config_mod.OUT_ENV} or ./runs)")
        s.add_argument("--jobs", type=int, help="worker processes")
        s.add_argument("--format", choices=["csv", "json"], help="format of tabular outputs")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. --set fkpp.times=[50,100]")
    return p


def _error(exc: BaseException, out_dir: Path | None, command: str | None) -> int:
    rec = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc),
           "traceback": traceback.format_exception_only(type(exc), exc)[-1].strip()}
    text = json.dumps(rec)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return EXIT_ERROR


def execute(command: str, cfg: dict) -> tuple[int, Path]:
    """Run one subcommand with a resolved config; returns (exit status, output dir)."""
    out_dir = Path(cfg["out"]) / (cfg.get("experiment") or command)
    start = time.perf_counter()
    previous = []
    if (out_dir / MANIFEST_NAME).exists():
        previous = list(load_manifest(out_dir).outputs)
    with staging(out_dir) as stage:
        run = Run(cfg, stage)
        COMMANDS[command](run)
        files = list(dict.fromkeys(run.files))
    passed = all(c["passed"] for c in run.criteria.values())
    # outputs of an earlier run that this run did not rewrite would be orphaned
    for name in [*previous, "error.json"]:
        if name not in files and (out_dir / name).exists():
            (out_dir / name).unlink()
    manifest = RunManifest(command, config_mod.config_hash(cfg), tool_version(),
                           round(time.perf_counter() - start, 3), run.seeds, inventory(out_dir, files), cfg,
                           run.criteria, "ok" if passed else "criterion_failed")
    write_manifest(manifest, out_dir)
    return (EXIT_OK if passed else EXIT_CRITERION), out_dir


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print(json.dumps(config_mod.SCHEMA, indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_ERROR
    out_dir = None
    try:
        flags = {"seed": args.seed, "replicas": args.replicas, "out": args.out, "jobs": args.jobs,
                 "format": args.format}
        cfg = config_mod.load_config(args.config, args.set, flags, COMMAND_DEFAULTS.get(args.command))
        out_dir = Path(cfg["out"]) / (cfg.get("experiment") or args.command)
        status, out_dir = execute(args.command, cfg)
    except Exception as exc:  # every failure becomes a machine-readable record
        if out_dir is None:
            # the config did not load; fall back to the output root given on the command line
            out_dir = Path(args.out or os.environ.get(config_mod.OUT_ENV, "runs")) / args.command
        return _error(exc, out_dir, args.command)
    print(json.dumps({"status": "ok" if status == EXIT_OK else "criterion_failed", "command": args.command,
                      "out": str(out_dir)}))
    return status


if __name__ == "__main__":
    sys.exit(main())
