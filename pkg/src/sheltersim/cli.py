"""Command-line front end: validate configs, run scenarios and sweeps, and
emit CSV tables plus a reproducibility manifest.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

from . import __version__
from .experiment import (
    ConfigError,
    ScenarioConfig,
    ScenarioSummary,
    run_scenario,
    sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

RESOURCE_COLUMNS = ("name", "avg_wait_days", "max_wait_days", "utilization_pct",
                    "pct_reneged", "ci_halfwidth_wait_days", "value")

FLOW_LABELS = {
    "arrivals": "youth_arrivals",
    "arrivals_bed_seeking": "youth_arrivals_bed_seeking",
    "arrivals_service_only": "youth_arrivals_service_only",
    "served_then_left": "youth_served_then_left",
    "left_unserved": "youth_left_unserved",
    "bed_renege_exit": "bed_renege_exit",
    "bed_renege_stayed": "bed_renege_stayed",
    "still_in_system": "youth_still_in_system",
}


def _fmt(value: float | None, decimals: int) -> str:
    if value is None:
        return ""
    return f"{value:.{decimals}f}"


def load_config(path: str | None) -> dict:
    """Read a JSON config file into a plain dict (defaults when no path)."""
    if path is None:
        return ScenarioConfig().to_dict()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file {path} is not valid JSON: {exc}"])
    if not isinstance(data, dict):
        raise ConfigError([f"config file {path} must contain a JSON object"])
    return data


def apply_set(data: dict, assignment: str) -> None:
    """Apply one ``--set key=value`` override to the config dict.

    Keys are dotted paths; a path segment under ``services`` selects the
    service with that name. Values parse as JSON, falling back to strings.
    """
    if "=" not in assignment:
        raise ConfigError([f"--set {assignment!r}: expected key=value"])
    key, raw = assignment.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError([f"--set {assignment!r}: empty key"])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        if isinstance(node, dict):
            if part not in node:
                raise ConfigError([f"{key}: no such field {part!r}"])
            node = node[part]
        elif isinstance(node, list):
            match = next((item for item in node
                          if isinstance(item, dict) and item.get("name") == part), None)
            if match is None:
                raise ConfigError([f"{key}: no service named {part!r}"])
            node = match
        else:
            raise ConfigError([f"{key}: cannot descend into {part!r}"])
    leaf = parts[-1]
    if not isinstance(node, dict):
        raise ConfigError([f"{key}: cannot assign into a non-object"])
    node[leaf] = value


def resolve_config(args) -> ScenarioConfig:
    data = load_config(args.config)
    for assignment in args.set or []:
        apply_set(data, assignment)
    config = ScenarioConfig.from_dict(data)
    if getattr(args, "seed", None) is not None:
        config = replace(config, master_seed=args.seed)
    if getattr(args, "reps", None) is not None:
        config = replace(config, replications=args.reps)
    config.validate()
    return config


def parse_values(text: str) -> list[int]:
    """Parse sweep values: ``start:stop:step`` (inclusive) or a comma list."""
    text = text.strip()
    if not text:
        raise ConfigError(["--values: must not be empty"])
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                start, stop, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                start, stop, step = parts
            else:
                raise ValueError
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError([f"--values {text!r}: expected start:stop:step or a comma list of integers"])


# -- output writing -----------------------------------------------------------


def _resource_row(name: str, summary: ScenarioSummary) -> dict:
    res = summary.resources[name]
    utilization_pct = None if res.utilization is None else 100.0 * res.utilization
    return {
        "name": name,
        "avg_wait_days": _fmt(res.avg_wait, 2),
        "max_wait_days": _fmt(res.max_wait, 2),
        "utilization_pct": _fmt(utilization_pct, 1),
        "pct_reneged": _fmt(res.renege_pct, 1),
        "ci_halfwidth_wait_days": _fmt(res.avg_wait_ci, 2),
        "value": "",
    }


def _flow_rows(summary: ScenarioSummary) -> list[dict]:
    rows = []
    for key, label in FLOW_LABELS.items():
        mean, _ci = summary.flows[key]
        rows.append({"name": label, "avg_wait_days": "", "max_wait_days": "",
                     "utilization_pct": "", "pct_reneged": "",
                     "ci_halfwidth_wait_days": "", "value": _fmt(mean, 2)})
    return rows


def write_scenario_csv(fh, summary: ScenarioSummary) -> None:
    writer = csv.DictWriter(fh, fieldnames=RESOURCE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for name in summary.resources:
        writer.writerow(_resource_row(name, summary))
    for row in _flow_rows(summary):
        writer.writerow(row)


def write_sweep_csv(fh, parameter: str, results: list[tuple[int, ScenarioSummary]]) -> None:
    columns = (parameter,) + RESOURCE_COLUMNS
    writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for value, summary in results:
        for name in summary.resources:
            row = _resource_row(name, summary)
            row[parameter] = str(value)
            writer.writerow(row)
        for row in _flow_rows(summary):
            row[parameter] = str(value)
            writer.writerow(row)


def write_manifest(out_path: str, command: str, config: ScenarioConfig) -> str:
    manifest_path = out_path + ".manifest.json"
    manifest = {
        "tool": "sheltersim",
        "version": __version__,
        "command": command,
        "config_digest": config.digest(),
        "master_seed": config.master_seed,
        "replications": config.replications,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": [os.path.abspath(out_path)],
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path


def print_summary_table(summary: ScenarioSummary, heading: str | None = None) -> None:
    if heading:
        print(heading)
    print(f"{'Resource':<24}{'Avg Wait (d)':>14}{'Max Wait (d)':>14}"
          f"{'Utilization':>14}{'Reneged':>10}")
    for name, res in summary.resources.items():
        util = "" if res.utilization is None else f"{100.0 * res.utilization:.1f}%"
        reneged = "" if res.renege_pct is None else f"{res.renege_pct:.1f}%"
        print(f"{name:<24}{_fmt(res.avg_wait, 2):>14}{_fmt(res.max_wait, 2):>14}"
              f"{util:>14}{reneged:>10}")
    n = len(summary.replications)
    print(f"Youth flow (means over {n} replication{'s' if n != 1 else ''}):")
    for key, label in FLOW_LABELS.items():
        mean, _ci = summary.flows[key]
        print(f"  {label:<30}{mean:>10.2f}")


# -- commands --------------------------------------------------------------------


def cmd_simulate(args) -> int:
    config = resolve_config(args)
    try:
        fh = open(args.out, "w", encoding="utf-8", newline="")
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        summary = run_scenario(config, jobs=args.jobs)
        write_scenario_csv(fh, summary)
    except BaseException:
        fh.close()
        os.unlink(args.out)
        raise
    fh.close()
    manifest_path = write_manifest(args.out, "simulate", config)
    print_summary_table(summary)
    print(f"Wrote {args.out} and {manifest_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = resolve_config(args)
    if not (args.param == "bed_capacity" or args.param.startswith("service:")):
        raise ConfigError(
            [f"--param {args.param!r}: expected bed_capacity or service:<name>"])
    values = parse_values(args.values)
    try:
        fh = open(args.out, "w", encoding="utf-8", newline="")
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        results = sweep(config, args.param, values, jobs=args.jobs)
        write_sweep_csv(fh, args.param, results)
    except ValueError as exc:
        fh.close()
        os.unlink(args.out)
        raise ConfigError([str(exc)])
    except BaseException:
        fh.close()
        os.unlink(args.out)
        raise
    fh.close()
    manifest_path = write_manifest(args.out, "sweep", config)
    for value, summary in results:
        print_summary_table(summary, heading=f"--- {args.param} = {value} ---")
    print(f"Wrote {args.out} and {manifest_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = resolve_config(args)
    print(json.dumps(config.to_dict(), indent=2))
    print(f"config digest: {config.digest()}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sheltersim",
        description="Simulate a youth crisis shelter and its capacity options.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out: bool):
        p.add_argument("--config", help="path to a JSON scenario config")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config field (repeatable)")
        if with_out:
            p.add_argument("--out", default="results.csv",
                           help="output CSV path (default: %(default)s)")
            p.add_argument("--seed", type=int, help="override master seed")
            p.add_argument("--reps", type=int, help="override replication count")
            p.add_argument("--jobs", type=int, default=1,
                           help="concurrent replication workers (default: 1)")

    p_sim = sub.add_parser("simulate", help="run one scenario")
    add_common(p_sim, with_out=True)
    p_sim.set_defaults(fn=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a one-parameter capacity sweep")
    add_common(p_sweep, with_out=True)
    p_sweep.add_argument("--param", required=True,
                         help="bed_capacity or service:<name>")
    p_sweep.add_argument("--values", required=True,
                         help="start:stop:step (inclusive) or comma list")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_val = sub.add_parser("validate", help="check a config and print it resolved")
    add_common(p_val, with_out=False)
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
