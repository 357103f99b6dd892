"""Command line interface.

relaxlab run --config cfg.json [--out DIR] [--parallel N] [--plots]
relaxlab list-experiments
relaxlab plot --dir RUN_DIR

Exit status: 0 when every diagnostic check passes, 2 on a diagnostic
violation, 1 on configuration or runtime errors.  RELAXLAB_OUT overrides
the default output root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .experiments import REGISTRY, experiment_defaults, run_experiment

DEFAULT_OUT = "relaxlab-out"


def deep_merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; override wins, sub-dicts merge key-wise.
    Sub-dicts tagged by a differing 'kind' are replaced outright so stale
    sibling keys of the default variant cannot leak through."""
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            if val.get("kind", out[key].get("kind")) != out[key].get("kind"):
                out[key] = dict(val)
            else:
                out[key] = deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_config(text: str):
    """Merge the user document over its experiment's registry defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("$", f"invalid JSON: {err}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("name"), str):
        raise ConfigError("$.name", "experiment name is required")
    name = doc["name"]
    if name not in REGISTRY:
        raise ConfigError("$.name", f"unknown experiment {name!r}; "
                          f"known: {', '.join(sorted(REGISTRY))}")
    merged = deep_merge(experiment_defaults(name), doc)
    merged["name"] = name
    return parse_config(json.dumps(merged))


def _output_dir(cfg, cli_out):
    root = cli_out or cfg.outputs or os.environ.get("RELAXLAB_OUT") or DEFAULT_OUT
    return Path(root) / cfg.name


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 1
    try:
        cfg = resolve_config(text)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    out_dir = _output_dir(cfg, args.out)
    try:
        result = run_experiment(cfg, out_dir, parallel=args.parallel)
    except Exception as err:  # propagate numeric errors with run context
        print(f"error while running {cfg.name!r}: {err}", file=sys.stderr)
        return 1
    if args.plots:
        from . import plots
        plots.render_experiment(out_dir)
    for name in sorted(result.checks):
        entry = result.checks[name]
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"[{status}] {cfg.name}: {name} "
              f"(violation {entry['max_violation']:.3e}, tol {entry['tolerance']:.3e})")
    print(f"outputs: {out_dir}")
    return 0 if result.passed else 2


def cmd_list(_args) -> int:
    width = max(len(name) for name in REGISTRY)
    for name in sorted(REGISTRY):
        print(f"{name:<{width}}  {REGISTRY[name].description}")
    return 0


def cmd_plot(args) -> int:
    from . import plots
    out_dir = Path(args.dir)
    if not out_dir.is_dir():
        print(f"error: {out_dir} is not a directory", file=sys.stderr)
        return 1
    written = plots.render_experiment(out_dir)
    for path in written:
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaxlab",
        description="Finite-volume laboratory for a relaxing 2x2 system "
                    "with lattice-time source events.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a named experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON document")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.add_argument("--parallel", type=int, default=1,
                       help="max concurrent sweep members")
    p_run.add_argument("--plots", action="store_true",
                       help="render PNG figures next to the CSV outputs")
    p_run.set_defaults(fn=cmd_run)

    p_list = sub.add_parser("list-experiments", help="list registry entries")
    p_list.set_defaults(fn=cmd_list)

    p_plot = sub.add_parser("plot", help="render figures for a finished run")
    p_plot.add_argument("--dir", required=True, help="experiment output directory")
    p_plot.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
