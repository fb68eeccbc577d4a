"""Command line entry point: ``gbo-lab <subcommand> [options]``.

Exit status is 0 when every selected check passes, 1 when any check fails
and 2 when a run aborts (blow-up, step-size guard, boundary guard, bad
configuration).  Artifacts are plain JSON, CSV and GBO1 binary files with
no timestamps, so identical inputs give identical bytes.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, SUITES, config_from_dict, parse_config
from .diagnostics import GuardViolation
from .local import WeightError
from .positivity import InfeasibleError
from .solver import SimulationAbort, encode_state
from .suites import SUITE_FUNCS

SUBCOMMANDS = {
    "simulate": "conservation",
    "verify-monotonicity": "monotonicity",
    "verify-local": "local",
    "verify-positivity": "positivity",
    "verify-norms": "norms",
    "sweep": None,
}

EXIT_OK, EXIT_FAIL, EXIT_ABORT = 0, 1, 2
ABORTS = (SimulationAbort, GuardViolation, WeightError, InfeasibleError)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def _write(path, content):
    mode = "wb" if isinstance(content, (bytes, bytearray)) else "w"
    kwargs = {} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"}
    with open(path, mode, **kwargs) as fh:
        fh.write(content)


def run(config, out, suites=None, workers=1):
    """Execute ``suites`` (default: those in the config) and write artifacts to ``out``."""
    os.makedirs(out, exist_ok=True)
    for stale in ("abort.json", "last_state.gbo"):
        if os.path.exists(os.path.join(out, stale)):
            os.remove(os.path.join(out, stale))
    suites = list(config.suites if suites is None else suites)
    _write(os.path.join(out, "config.json"), dumps(config.to_dict()))
    summary = {"suites": {}, "status": EXIT_OK}
    for name in suites:
        func = SUITE_FUNCS[name]
        try:
            result = func(config, workers=workers) if name == "positivity" else func(config)
        except ABORTS as exc:
            abort = {"suite": name, "error": type(exc).__name__, "message": str(exc)}
            state = getattr(exc, "state", None)
            if state is not None:
                abort["t"] = state.t
                _write(os.path.join(out, "last_state.gbo"), encode_state(state))
            _write(os.path.join(out, "abort.json"), dumps(abort))
            summary["suites"][name] = "aborted"
            summary["status"] = EXIT_ABORT
            break
        for fname, content in sorted(result.artifacts.items()):
            _write(os.path.join(out, fname), content)
        _write(os.path.join(out, f"{name}.json"),
               dumps({"suite": name, "passed": result.passed, "report": result.report}))
        summary["suites"][name] = "passed" if result.passed else "failed"
        if not result.passed:
            summary["status"] = max(summary["status"], EXIT_FAIL)
    _write(os.path.join(out, "summary.json"), dumps(summary))
    return summary["status"]


def _sweep_task(args):
    raw, out, suites = args
    try:
        cfg = config_from_dict(raw)
    except ConfigError as exc:
        os.makedirs(out, exist_ok=True)
        _write(os.path.join(out, "abort.json"), dumps({"error": "ConfigError", "message": str(exc)}))
        return EXIT_ABORT
    return run(cfg, out, suites)


def sweep(raw, out, suites, workers=1):
    """Run every override in ``raw["sweep"]`` in its own subdirectory; status is the worst."""
    base = {k: v for k, v in raw.items() if k != "sweep"}
    tasks = []
    for i, override in enumerate(raw.get("sweep") or [{}]):
        merged = dict(base)
        merged.update(override)
        tasks.append((merged, os.path.join(out, f"run_{i:03d}"), suites))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            statuses = list(ex.map(_sweep_task, tasks))
    else:
        statuses = [_sweep_task(t) for t in tasks]
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "sweep.json"),
           dumps({"runs": [{"dir": os.path.basename(t[1]), "status": s}
                           for t, s in zip(tasks, statuses)]}))
    return max(statuses)


def build_parser():
    ap = argparse.ArgumentParser(prog="gbo-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (GBO_LAB_OUT takes precedence)")
        p.add_argument("--seed", type=int, help="seed for random ensembles and data")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--suite", nargs="+", choices=SUITES, help="suites to run")
    return ap


def _load_raw(path):
    if path is None:
        return {}
    parse_config(path)                      # full validation with file-level messages
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        raw = _load_raw(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed: must be an unsigned 64-bit integer")
            raw = dict(raw, seed=args.seed)
        config = config_from_dict(raw)
    except ConfigError as exc:
        print(f"gbo-lab: {exc}", file=sys.stderr)
        return EXIT_ABORT
    if args.seed is not None:
        config.sim = replace(config.sim, seed=args.seed)
    out = os.environ.get("GBO_LAB_OUT") or args.out or config.out
    workers = max(1, args.workers)
    if args.command == "sweep":
        status = sweep(raw, out, args.suite or config.suites, workers)
    else:
        suites = args.suite or [SUBCOMMANDS[args.command]]
        status = run(config, out, suites, workers)
    print(f"gbo-lab {args.command}: status {status} ({out})")
    return status


if __name__ == "__main__":
    sys.exit(main())
