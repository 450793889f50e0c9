"""Command-line experiment runner.

Usage::

    slicekit <experiment> [--config cfg.json] [--method M ...] [--L n ...]
             [--seed s ...] [--input path ...] [--out dir]
    slicekit --list-methods

Flags override keys from the JSON config file; anything left unset falls
back to the experiment's defaults. Every run writes a fully resolved
``config.lock`` that can itself be passed back via ``--config``.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, RunConfig, config_from_dict, run_experiment
from .selectors import method_names


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicekit", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--list-methods", action="store_true", help="print all selector names and exit")
    sub = parser.add_subparsers(dest="experiment")
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="JSON config file (config.lock format accepted)")
        sp.add_argument("--method", action="append", dest="methods", metavar="NAME",
                        help="selector to run (repeatable)")
        sp.add_argument("--L", action="append", dest="budgets", type=int, metavar="N",
                        help="slice budget grid point (repeatable)")
        sp.add_argument("--seed", action="append", dest="seeds", type=int, metavar="S",
                        help="run seed (repeatable)")
        sp.add_argument("--input", action="append", dest="inputs", metavar="PATH",
                        help="input file (clouds in source/target pairs; two PPMs for style transfer)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--steps", type=int, help="flow steps override")
        sp.add_argument("--step-size", type=float, help="flow step size override")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    base["experiment"] = args.experiment
    for key in ("methods", "budgets", "seeds", "inputs", "out"):
        val = getattr(args, key, None)
        if val:
            base[key] = val
    cfg = config_from_dict(base)
    flow_overrides = {}
    if getattr(args, "steps", None):
        flow_overrides["steps"] = args.steps
    if getattr(args, "step_size", None):
        flow_overrides["step_size"] = args.step_size
    if flow_overrides:
        import dataclasses

        from .flows import FlowConfig

        current = dataclasses.asdict(cfg.flow)
        current.pop("checkpoints")
        current.update(flow_overrides)
        cfg.flow = FlowConfig(**current)
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_methods:
        for name in method_names():
            print(name)
        return 0
    if not args.experiment:
        parser.print_help()
        return 2
    try:
        cfg = _resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"slicekit: bad configuration: {exc}\n")
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
