"""Command-line entry point.

Subcommands::

    memhier l1        [options]            L1 capacity/associativity/linesize
    memhier cache     [options]            multi-level cache response + levels
    memhier tlb       [options]            TLB levels
    memhier all       [options]            full characterization
    memhier analyze   <curve.csv>          re-analyze a saved response curve
    memhier simulate  <config>             full characterization of a
                                           simulated hierarchy config file

Exit codes: 0 success, 1 probe error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional

from . import analysis, cacheprobe, l1probe, tlbprobe
from .backend import RealMemoryBackend
from .cacheprobe import curve_from_csv, curve_to_csv
from .errors import MemhierError
from .refstring import MachineEnv
from .simoracle import SimulatedBackend, load_config
from .timing import DEFAULT_WINDOW, calibrate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memhier",
                                     description="Empirical memory-hierarchy "
                                                 "characterization")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--backend", default="real",
                       help="'real' or 'sim:<config-file>' (default: real)")
        p.add_argument("--lb", type=int, default=None,
                       help="lower bound of the sweep in bytes")
        p.add_argument("--ub", type=int, default=None,
                       help="upper bound of the sweep in bytes")
        p.add_argument("--max-assoc", type=int, default=l1probe.DEFAULT_MAX_ASSOC)
        p.add_argument("--window", type=int, default=DEFAULT_WINDOW,
                       help="stability window (runs without a new minimum)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="write output to this path")

    for name in ("l1", "cache", "tlb", "all"):
        add_common(sub.add_parser(name))

    p = sub.add_parser("analyze")
    p.add_argument("curve", help="CSV response curve to analyze")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate")
    p.add_argument("config", help="simulator hierarchy config file")
    add_common(p)
    return parser


def _make_backend(spec: str):
    if spec == "real":
        return RealMemoryBackend(), None
    if spec.startswith("sim:"):
        config = load_config(spec[4:])
        return SimulatedBackend(config), config
    raise MemhierError("unknown backend %r (use 'real' or 'sim:<file>')" % spec)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _probe_env(backend, config) -> MachineEnv:
    if config is not None:
        return MachineEnv(pagesize=config.pagesize)
    return MachineEnv.host()


def _run_probes(args, which: str) -> dict:
    backend, config = _make_backend(args.backend)
    env = _probe_env(backend, config)
    cal = calibrate(env, backend)
    started = time.perf_counter()
    costs: dict = {}
    l1_report = None
    cache_curve = None
    tlb_levels = None

    if which in ("l1", "all"):
        params = l1probe.L1Params(lb=args.lb or l1probe.DEFAULT_LB,
                                  ub=args.ub or l1probe.DEFAULT_UB,
                                  max_assoc=args.max_assoc)
        l1_report = l1probe.run_l1_probe(params, env, cal, backend,
                                         window=args.window)
        env.l1_linesize = l1_report.linesize
        costs["l1"] = l1_report.cost

    if which in ("cache", "all"):
        points = cacheprobe.sample_points(args.lb or cacheprobe.DEFAULT_LB,
                                          args.ub or cacheprobe.DEFAULT_UB)
        cache_curve = cacheprobe.run_cache_sweep(points, env, cal, backend,
                                                 window=args.window,
                                                 seed=args.seed)
        costs["cache"] = cache_curve.cost

    if which in ("tlb", "all"):
        tlb_levels, _suspects, tlb_curve, tlb_cost = tlbprobe.run_tlb_probe(
            env, cal, backend,
            lb=args.lb if (which == "tlb" and args.lb) else 0,
            ub=args.ub if (which == "tlb" and args.ub) else tlbprobe.DEFAULT_UB,
            window=args.window, seed=args.seed)
        costs["tlb"] = tlb_cost

    costs["total"] = time.perf_counter() - started
    report = analysis.assemble_report(
        env, l1_report, cache_curve, tlb_levels, costs=costs,
        parameters={"window": args.window, "seed": args.seed,
                    "backend": args.backend, "max_assoc": args.max_assoc,
                    "lb": args.lb, "ub": args.ub})
    out = report.to_json_dict()
    if cache_curve is not None:
        out["cache_curve_csv"] = curve_to_csv(cache_curve)
    return out


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        if args.command == "analyze":
            with open(args.curve) as fh:
                curve = curve_from_csv(fh.read())
            levels = analysis.levels_from_curve(curve)
            payload = {"levels": [{"level": lv.index,
                                   "effective_capacity": lv.effective_capacity,
                                   "latency": lv.latency}
                                  for lv in levels]}
            _emit(args, json.dumps(payload, indent=2))
            return 0

        if args.command == "simulate":
            args.backend = "sim:" + args.config
            result = _run_probes(args, "all")
        else:
            result = _run_probes(args, args.command)

        if args.format == "csv" and "cache_curve_csv" in result:
            _emit(args, result["cache_curve_csv"])
        else:
            result.pop("cache_curve_csv", None)
            _emit(args, json.dumps(result, indent=2))
        return 0
    except MemhierError as exc:
        print("memhier: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("memhier: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
