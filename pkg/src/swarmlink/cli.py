"""Command-line entry points.

    swarmlink run <scenario.json | bundled name> [--out DIR] [--step H]
              [--mode MODE] [--seed K] [--integrator NAME]
    swarmlink gains <scenario.json | bundled name>
    swarmlink verify <trace dir>
    swarmlink scenarios
    swarmlink serve [--port P] [--host H] [--scenario NAME] [--frontend DIR]

Exit codes: 0 when every mandatory monitor check passes (run/verify) or the
gain selection certifies (gains); 1 otherwise; 2 on bad input. The
SWARMLINK_LOG environment variable sets log verbosity (DEBUG/INFO/...), and
controls nothing else.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import engine, monitor
from .engine import Scenario, ScenarioError


def _setup_logging() -> None:
    level = os.environ.get("SWARMLINK_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_scenario(ref: str) -> Scenario:
    p = Path(ref)
    if p.suffix == ".json" or p.exists():
        return Scenario.from_json(p)
    return engine.load_bundled(ref)


def _apply_overrides(sc: Scenario, args) -> Scenario:
    d = sc.to_dict()
    if args.step is not None:
        d["h"] = args.step
    if args.mode is not None:
        d["mode"] = args.mode
    if args.seed is not None:
        d["seed"] = args.seed
    if getattr(args, "integrator", None) is not None:
        d["integrator"] = args.integrator
    return Scenario.from_dict(d)


def cmd_run(args) -> int:
    sc = _apply_overrides(_load_scenario(args.scenario), args)
    res = engine.run(sc, out_dir=args.out)
    print(monitor.format_verdict(res.verdict))
    if args.out:
        print(f"trace written to {args.out}")
    return 0 if res.ok else 1


def cmd_gains(args) -> int:
    sc = _load_scenario(args.scenario)
    if sc.mode == "virtual_point":
        print("virtual_point mode has no certified gains (uncertified baseline)")
        return 0
    sel = engine.select_for_scenario(sc)   # infeasibility is a report, not a crash
    print(sel.certificate_json())
    return 0 if sel.feasible else 1


def cmd_verify(args) -> int:
    verdict = engine.verify_run(args.trace_dir)
    print(monitor.format_verdict(verdict))
    return 0 if verdict["ok"] else 1


def cmd_scenarios(_args) -> int:
    for name in engine.bundled_names():
        sc = engine.load_bundled(name)
        print(f"{name:20s} mode={sc.mode:13s} duration={sc.duration_s:g}s "
              f"robots={len(sc.initial_positions)}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(default_scenario=args.scenario, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    _setup_logging()
    ap = argparse.ArgumentParser(prog="swarmlink", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and print the verdict")
    p.add_argument("scenario")
    p.add_argument("--out", default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--mode", choices=engine.MODES, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--integrator", choices=("semi_implicit", "rk4"), default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gains", help="print the gain-selection certificate")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_gains)

    p = sub.add_parser("verify", help="re-run the monitor on a stored trace")
    p.add_argument("trace_dir")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.set_defaults(fn=cmd_scenarios)

    p = sub.add_parser("serve", help="run the teleoperation service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scenario", default="live_delayed")
    p.add_argument("--frontend", default=None)
    p.set_defaults(fn=cmd_serve)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
