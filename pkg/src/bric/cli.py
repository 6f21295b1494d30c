"""Command line entry point: ``bric run|list-presets|validate|compare``."""
import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import PRESETS, build, get_preset, load_config, serialize
from .exceptions import ConfigError, FunnelViolation, NumericError
from .output import PENDULUM_STATE_NAMES, emit_csv, read_metrics
from .sim import compute_metrics, run_closed_loop

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_ENV = "BRIC_OUTPUT_DIR"

log = logging.getLogger("bric")


def resolve_config(ref):
    """Preset name or path to a JSON config. Returns ``(config, notes)``."""
    if ref in PRESETS:
        return get_preset(ref), []
    path = Path(ref)
    if not path.is_file():
        raise ConfigError([f"<input>: {ref!r} is neither a preset nor a readable file"])
    return load_config(path.read_text())


def output_root(cli_value=None, cfg=None):
    if cli_value:
        return Path(cli_value)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path("runs")


def run_config(cfg):
    plant, ctrl = build(cfg)
    traj = run_closed_loop(plant, ctrl, cfg.sim, cfg.x0, cfg.z0)
    return traj, compute_metrics(traj, cfg.envelope)


def run_scenario(ref, out=None):
    """Run a preset or config file and write ``trajectory.csv``, ``metrics.json``, ``run.log``.

    Returns the process exit code. Config errors write nothing.
    """
    try:
        cfg, notes = resolve_config(ref)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG

    run_dir = output_root(out, cfg) / cfg.name
    run_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(run_dir / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        log.info("scenario %s", cfg.name)
        for note in notes:
            log.info("note: %s", note)
        (run_dir / "config.json").write_text(serialize(cfg) + "\n")
        try:
            traj, metrics = run_config(cfg)
        except FunnelViolation as exc:
            log.error("%s", exc)
            report = {"status": "funnel_violation", "t": exc.t, "channel": exc.channel, "value": exc.value}
            (run_dir / "violation.json").write_text(json.dumps(report, indent=2) + "\n")
            print(f"violation: {exc}", file=sys.stderr)
            return EXIT_VIOLATION
        except NumericError as exc:
            log.error("numeric failure: %s", exc)
            print(f"numeric failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        names = PENDULUM_STATE_NAMES if cfg.plant.model == "pendulum" else None
        emit_csv(traj, metrics, run_dir / "trajectory.csv", run_dir / "metrics.json", names)
        log.info("rows=%d halvings=%d", len(traj), traj.meta.get("halvings", 0))
        for key, val in metrics.as_dict().items():
            log.info("%s = %s", key, val)
        print(run_dir)
        return EXIT_OK
    finally:
        log.removeHandler(handler)
        handler.close()


def compare_runs(dir_a, dir_b):
    """Ordering report for two run directories (lower error/effort and larger margin win)."""
    a, b = read_metrics(dir_a), read_metrics(dir_b)
    lines = []
    for key, better in (("final_error", min), ("final_sk_norm", min), ("effort", min), ("min_margin", max)):
        va, vb = a[key], b[key]
        if va == vb:
            verdict = "tie"
        else:
            verdict = "A" if better(va, vb) == va else "B"
        lines.append(f"{key:14s} A={va:.6g} B={vb:.6g} better={verdict}")
    return lines


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bric", description="Barrier integral control scenarios")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a preset or config file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help=f"output root (default ${OUTPUT_ENV} or ./runs)")
    sub.add_parser("list-presets", help="list built-in scenarios")
    p_val = sub.add_parser("validate", help="validate a config file or preset")
    p_val.add_argument("config")
    p_cmp = sub.add_parser("compare", help="compare two run directories")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    args = parser.parse_args(argv)

    if args.command == "run":
        return run_scenario(args.scenario, args.out)
    if args.command == "list-presets":
        for name in sorted(PRESETS):
            print(name)
        return EXIT_OK
    if args.command == "validate":
        try:
            _, notes = resolve_config(args.config)
        except ConfigError as exc:
            for d in exc.diagnostics:
                print(f"config error: {d}", file=sys.stderr)
            return EXIT_CONFIG
        for note in notes:
            print(f"note: {note}")
        print("ok")
        return EXIT_OK
    try:
        lines = compare_runs(args.run_a, args.run_b)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"compare failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("\n".join(lines))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
