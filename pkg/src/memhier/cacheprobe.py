"""Multi-level cache response sweep with the knockout-revival optimization.

The sweep repeatedly measures every still-active sample footprint, ascending,
until each point's minimum has been stable for a full window.  After every
pass, interior points whose value agrees with both neighbors are knocked out
of the range; a point that later reaches a new minimum revives any knocked-out
immediate neighbor.  Sweeping ascending each pass distributes outside
interference across sizes instead of concentrating it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .errors import BudgetExceededError, InvalidGeometryError
from .refstring import MachineEnv, build_cache_string
from .timing import (DEFAULT_RUN_CAP, DEFAULT_WINDOW, EQUALITY_TOL,
                     CycleCalibration, run_once)

DEFAULT_LB = 1024
DEFAULT_UB = 32 * 1024 * 1024


@dataclass
class SamplePoint:
    footprint: int
    min_cycles: float = math.inf
    runs_since_min: int = 0
    knocked_out: bool = False
    runs: int = 0

    @property
    def measured(self) -> bool:
        return self.min_cycles < math.inf


@dataclass
class ResponseCurve:
    points: List[SamplePoint]
    kind: str  # "cache" or "tlb:<n>"
    total_string_runs: int = 0
    cost: float = 0.0

    def footprints(self) -> List[int]:
        return [p.footprint for p in self.points]

    def values(self) -> List[float]:
        """Per-point values with knocked-out points inheriting the nearest
        measured neighbor below (the form the analysis consumes)."""
        out: List[float] = []
        last = math.nan
        for p in self.points:
            if p.knocked_out and not math.isinf(p.min_cycles) and out:
                out.append(last)
            elif p.measured:
                out.append(p.min_cycles)
                last = p.min_cycles
            else:
                out.append(last)
        return out


def sample_points(lb: int = DEFAULT_LB, ub: int = DEFAULT_UB) -> List[int]:
    """The Range(LB, UB) schedule: 1-4KB uniformly, then each power of two
    with three uniformly spaced points in between, plus UB itself."""
    if lb <= 0 or lb > 4096 or ub < 4096 or lb >= ub:
        raise InvalidGeometryError("need 0 < LB <= 4KB <= UB and LB < UB")
    pts = {kb * 1024 for kb in (1, 2, 3, 4) if lb <= kb * 1024 <= ub}
    p = 4096
    while p < ub:
        for m in (4, 5, 6, 7):  # p, 1.25p, 1.5p, 1.75p
            v = p * m // 4
            if lb <= v <= ub:
                pts.add(v)
        p *= 2
    pts.add(ub)
    return sorted(pts)


def octave_points(lb: int, ub: int) -> List[int]:
    """Power-of-two-plus-three-intermediates schedule with no sub-4KB rule;
    used for gap sweeps and the page-count schedule of the TLB test."""
    if lb <= 0 or lb >= ub:
        raise InvalidGeometryError("need 0 < LB < UB")
    pts = set()
    p = 1 << (lb.bit_length() - 1)
    if p < lb:
        p <<= 1
    while p < ub:
        for m in (4, 5, 6, 7):
            v = p * m // 4
            if lb <= v <= ub and v * 4 == p * m:
                pts.add(v)
        p *= 2
    pts.add(ub)
    if lb not in pts:
        pts.add(lb)
    return sorted(pts)


def run_sweep(footprints: List[int],
              string_factory: Callable[[int], object],
              cal: CycleCalibration, backend,
              window: int = DEFAULT_WINDOW,
              knockout: bool = True,
              run_cap_per_point: int = DEFAULT_RUN_CAP,
              kind: str = "cache",
              tol: float = EQUALITY_TOL) -> ResponseCurve:
    """Stability-disciplined sweep over ``footprints``.

    ``string_factory(footprint)`` must return a freshly seeded reference
    string on every call.  With ``knockout`` disabled this degenerates to the
    exhaustive discipline (every point measured until stable on its own).
    """
    points = [SamplePoint(fp) for fp in sorted(footprints)]
    curve = ResponseCurve(points=points, kind=kind)
    cap = run_cap_per_point * len(points)
    started = time.perf_counter()
    while True:
        active = [p for p in points
                  if not p.knocked_out and p.runs_since_min < window]
        if not active:
            break
        for idx, p in enumerate(points):
            if p.knocked_out or p.runs_since_min >= window:
                continue
            rs = string_factory(p.footprint)
            t = run_once(rs, cal, backend)
            curve.total_string_runs += 1
            p.runs += 1
            if t < p.min_cycles:
                p.min_cycles = t
                p.runs_since_min = 0
                for j in (idx - 1, idx + 1):
                    if 0 <= j < len(points) and points[j].knocked_out:
                        points[j].knocked_out = False
                        points[j].runs_since_min = 0
            else:
                p.runs_since_min += 1
        if knockout:
            for idx in range(1, len(points) - 1):
                p = points[idx]
                below, above = points[idx - 1], points[idx + 1]
                if (not p.knocked_out and p.measured
                        and below.measured and above.measured
                        and abs(p.min_cycles - below.min_cycles) <= tol
                        and abs(p.min_cycles - above.min_cycles) <= tol):
                    p.knocked_out = True
                    # Treated as stable unless a neighbor revives it.
                    p.runs_since_min = window
        if curve.total_string_runs > cap:
            raise BudgetExceededError(
                "cache sweep exceeded %d total string runs" % cap)
    curve.cost = time.perf_counter() - started
    return curve


def run_cache_sweep(points: List[int], env: MachineEnv,
                    cal: CycleCalibration, backend,
                    window: int = DEFAULT_WINDOW, seed: int = 0,
                    knockout: bool = True,
                    run_cap_per_point: int = DEFAULT_RUN_CAP) -> ResponseCurve:
    """Sweep C(k) over the given footprints and return the response curve."""
    counter = [seed]

    def factory(footprint: int):
        counter[0] += 1
        return build_cache_string(footprint, env, counter[0])

    return run_sweep(points, factory, cal, backend, window=window,
                     knockout=knockout, run_cap_per_point=run_cap_per_point,
                     kind="cache")


# ---------------------------------------------------------------------------
# CSV curve export: footprint_bytes,cycles_per_access,knocked_out(0|1)
# ---------------------------------------------------------------------------

def curve_to_csv(curve: ResponseCurve) -> str:
    lines = ["footprint_bytes,cycles_per_access,knocked_out"]
    for p in curve.points:
        value = p.min_cycles if p.measured else float("nan")
        lines.append("%d,%.6f,%d" % (p.footprint, value, int(p.knocked_out)))
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str, kind: str = "cache") -> ResponseCurve:
    points: List[SamplePoint] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("footprint_bytes"):
            continue
        fp_s, val_s, ko_s = line.split(",")
        p = SamplePoint(footprint=int(fp_s), min_cycles=float(val_s),
                        knocked_out=bool(int(ko_s)))
        if math.isnan(p.min_cycles):
            p.min_cycles = math.inf
        points.append(p)
    points.sort(key=lambda p: p.footprint)
    return ResponseCurve(points=points, kind=kind)
