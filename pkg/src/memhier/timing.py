"""Cycle calibration and the minimum-of-trials stability discipline.

A "cycle" is the measured duration of one integer add.  All probe results are
expressed in cycles per access, which makes them comparable across clock
speeds and lets the simulator (1 simulated cycle per cycle) share the probe
code unchanged.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from .errors import BudgetExceededError, TimerTooCoarseError
from .refstring import MachineEnv, ReferenceString

#: A time is "above baseline" iff it exceeds it by at least this many cycles.
#: Single-miss deltas are sub-cycle once amortized over a whole traversal, so
#: the probes compare unrounded values against this margin.
DETECTION_MARGIN = 0.25

#: Knockout equality tolerance; same margin as detection.
EQUALITY_TOL = 0.25

DEFAULT_WINDOW = 25
DEFAULT_RUN_CAP = 1000


@dataclass
class CycleCalibration:
    seconds_per_cycle: float
    timer_resolution: float
    #: Baseline amortization: a timed run covers at least this many loads
    #: (and never fewer than two traversals of the string).
    loads_per_run: int


@dataclass
class Measurement:
    min_cycles_per_access: float
    runs_taken: int
    stable: bool


IDENTITY_CALIBRATION = CycleCalibration(seconds_per_cycle=1.0,
                                        timer_resolution=0.0,
                                        loads_per_run=0)


def timer_resolution() -> float:
    """Smallest positive delta observable from the monotonic timer."""
    best = float("inf")
    for _ in range(64):
        t0 = time.perf_counter()
        t1 = time.perf_counter()
        while t1 == t0:
            t1 = time.perf_counter()
        best = min(best, t1 - t0)
    return best


def calibrate(env: MachineEnv, backend) -> CycleCalibration:
    """Measure seconds-per-cycle for a real backend; identity for simulators."""
    if getattr(backend, "deterministic", False):
        return IDENTITY_CALIBRATION
    from .backend import _load_kernels

    res = timer_resolution()
    if res > 1e-3:
        raise TimerTooCoarseError(
            "monotonic timer resolution %.3g s is coarser than 1 ms" % res)
    add_chain = _load_kernels().add_chain
    n = 1 << 22
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        add_chain(n)
        t1 = time.perf_counter()
        best = min(best, (t1 - t0) / n)
    # The chain is one xor plus one add per iteration; call it one add's
    # worth of dependent latency after superscalar overlap.
    seconds_per_cycle = best
    # Size a timed run to last at least 1000x the timer resolution, assuming
    # a few cycles per load; run_once re-rounds per string.
    loads = max(1024, int(1000.0 * res / (3.0 * seconds_per_cycle)) + 1)
    return CycleCalibration(seconds_per_cycle=seconds_per_cycle,
                            timer_resolution=res, loads_per_run=loads)


def run_once(rs: ReferenceString, cal: CycleCalibration, backend) -> float:
    """One warm-up traversal plus one timed run; cycles per access."""
    n = rs.chain_length
    loads = max(cal.loads_per_run, 2 * n)
    loads = ((loads + n - 1) // n) * n  # whole traversals only
    elapsed, done = backend.run(rs, loads)
    return elapsed / done / cal.seconds_per_cycle


def measure_stable(rs_factory: Callable[[], ReferenceString],
                   cal: CycleCalibration, backend,
                   window: int = DEFAULT_WINDOW,
                   run_cap: int = DEFAULT_RUN_CAP) -> Measurement:
    """Re-measure fresh strings until the minimum is unchanged for ``window``
    consecutive runs.

    Each run rebuilds the string from the factory so that repeated runs
    sample different virtual-to-physical page mappings.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    best = float("inf")
    since_min = 0
    runs = 0
    while since_min < window:
        rs = rs_factory()
        t = run_once(rs, cal, backend)
        runs += 1
        if t < best:
            best = t
            since_min = 0
        else:
            since_min += 1
        if runs > run_cap:
            raise BudgetExceededError(
                "minimum did not stabilize within %d runs" % run_cap)
    return Measurement(min_cycles_per_access=best, runs_taken=runs, stable=True)
