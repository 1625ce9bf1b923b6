"""TLB probe: T(1,k) sweep over page counts, suspect-point detection, and
on-demand confirmation with the higher line-count strings T(2..4, k).

A rise in T(1,k) can come from a cache boundary instead of a TLB boundary;
only rises that T(2,k), T(3,k) and T(4,k) all reproduce at the same footprint
are reported, because a cache-edge artifact moves to a smaller footprint when
the lines-per-page count grows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Tuple

from .cacheprobe import ResponseCurve, octave_points, run_sweep
from .errors import InvalidGeometryError
from .refstring import MachineEnv, build_tlb_string
from .timing import (DEFAULT_RUN_CAP, DEFAULT_WINDOW, CycleCalibration,
                     measure_stable)

DEFAULT_LB_PAGES = 4
DEFAULT_UB = 8 * 1024 * 1024

#: A rise counts as a jump if it is at least this many cycles ...
JUMP_ABS = 0.5
#: ... or this fraction of the value before it, whichever is larger.
JUMP_REL = 0.10


@dataclass
class TlbSuspect:
    footprint: int  # bytes; the sample where the jump lands
    boundary: int   # bytes; the last sample before the rise
    confirmed: bool = False
    confirming_n: List[int] = field(default_factory=list)


@dataclass
class TlbLevelResult:
    level: int
    capacity: int  # bytes = entries * pagesize
    entries: int


def _is_jump(before: float, after: float) -> bool:
    return after >= before + max(JUMP_ABS, JUMP_REL * before)


def run_tlb_sweep(lb: int, ub: int, env: MachineEnv, cal: CycleCalibration,
                  backend, window: int = DEFAULT_WINDOW, seed: int = 0,
                  knockout: bool = True,
                  run_cap_per_point: int = DEFAULT_RUN_CAP) -> ResponseCurve:
    """Stability-disciplined sweep of T(1,k) over the page-count schedule."""
    if lb % env.pagesize or ub % env.pagesize:
        raise InvalidGeometryError("TLB bounds must be multiples of pagesize")
    pages = octave_points(lb // env.pagesize, ub // env.pagesize)
    footprints = [p * env.pagesize for p in pages]
    counter = [seed]

    def factory(footprint: int):
        counter[0] += 1
        return build_tlb_string(1, footprint, env, counter[0])

    return run_sweep(footprints, factory, cal, backend, window=window,
                     knockout=knockout, run_cap_per_point=run_cap_per_point,
                     kind="tlb:1")


def find_suspects(curve: ResponseCurve) -> List[TlbSuspect]:
    values = curve.values()
    fps = curve.footprints()
    out = []
    for i in range(1, len(values)):
        if _is_jump(values[i - 1], values[i]):
            out.append(TlbSuspect(footprint=fps[i], boundary=fps[i - 1]))
    return out


def confirm_suspect(suspect: TlbSuspect, env: MachineEnv,
                    cal: CycleCalibration, backend,
                    window: int = DEFAULT_WINDOW, seed: int = 0) -> TlbSuspect:
    """Measure T(n, boundary) and T(n, footprint) for n = 2, 3, 4; the
    suspect is confirmed only if every n reproduces the jump."""
    counter = [seed]

    def measure(n: int, footprint: int) -> float:
        def factory():
            counter[0] += 1
            return build_tlb_string(n, footprint, env, counter[0])
        return measure_stable(factory, cal, backend,
                              window=window).min_cycles_per_access

    for n in (2, 3, 4):
        before = measure(n, suspect.boundary)
        after = measure(n, suspect.footprint)
        if _is_jump(before, after):
            suspect.confirming_n.append(n)
    suspect.confirmed = suspect.confirming_n == [2, 3, 4]
    return suspect


def run_tlb_probe(env: MachineEnv, cal: CycleCalibration, backend,
                  lb: int = 0, ub: int = DEFAULT_UB,
                  window: int = DEFAULT_WINDOW, seed: int = 0,
                  run_cap_per_point: int = DEFAULT_RUN_CAP
                  ) -> Tuple[List[TlbLevelResult], List[TlbSuspect],
                             ResponseCurve, float]:
    """Full TLB test: sweep, suspects, confirmation, level report.

    Returns (levels, suspects, T(1,k) curve, cost_seconds).
    """
    started = time.perf_counter()
    lb = lb or DEFAULT_LB_PAGES * env.pagesize
    curve = run_tlb_sweep(lb, ub, env, cal, backend, window=window, seed=seed,
                          run_cap_per_point=run_cap_per_point)
    suspects = [confirm_suspect(s, env, cal, backend, window=window,
                                seed=seed + 7919 * i)
                for i, s in enumerate(find_suspects(curve))]
    levels = []
    for s in suspects:
        if s.confirmed:
            levels.append(TlbLevelResult(level=len(levels) + 1,
                                         capacity=s.boundary,
                                         entries=s.boundary // env.pagesize))
    return levels, suspects, curve, time.perf_counter() - started
