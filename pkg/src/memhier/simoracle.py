"""Deterministic set-associative cache / TLB hierarchy simulator.

This is the oracle the probes are validated against: it executes a reference
string symbolically (walking slot offsets, not real memory) and returns the
exact average latency per access.  Caches are inclusive with LRU replacement;
TLBs are fully associative LRU, one per level.

The per-access cost model: an access costs the latency of the first cache
level that holds the line (or ``memory_latency`` if none does), plus, for each
TLB level that missed the translation, that level's miss penalty.  A full TLB
miss therefore costs the sum of all levels' penalties, which models the walk.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ConfigError
from .refstring import ReferenceString


@dataclass(frozen=True)
class CacheLevel:
    capacity: int
    associativity: int
    linesize: int
    latency: int


@dataclass(frozen=True)
class TlbLevel:
    entries: int
    #: Penalty in cycles added to an access that misses this level.
    latency: int


@dataclass
class SimConfig:
    cache_levels: List[CacheLevel]
    tlb_levels: List[TlbLevel] = field(default_factory=list)
    memory_latency: int = 100
    pagesize: int = 4096
    #: None for identity mapping, otherwise a seed for a random per-page
    #: virtual-to-physical permutation (page offsets always preserved).
    mapping_seed: Optional[int] = None

    def validate(self) -> None:
        if self.pagesize <= 0 or self.pagesize & (self.pagesize - 1):
            raise ConfigError("pagesize must be a power of two")
        prev_cap = prev_lat = 0
        for lvl in self.cache_levels:
            if lvl.capacity <= 0 or lvl.associativity <= 0 or lvl.linesize <= 0:
                raise ConfigError("cache level parameters must be positive")
            if lvl.capacity % (lvl.associativity * lvl.linesize):
                raise ConfigError(
                    "capacity %d not divisible by associativity*linesize" % lvl.capacity)
            if lvl.capacity <= prev_cap or lvl.latency <= prev_lat:
                raise ConfigError("cache levels must increase in capacity and latency")
            prev_cap, prev_lat = lvl.capacity, lvl.latency
        if self.cache_levels and self.memory_latency <= self.cache_levels[-1].latency:
            raise ConfigError("memory latency must exceed the last cache level's")
        prev_ent = 0
        for tl in self.tlb_levels:
            if tl.entries <= prev_ent:
                raise ConfigError("TLB levels must increase in entry count")
            if tl.latency < 0:
                raise ConfigError("TLB miss penalty must be non-negative")
            prev_ent = tl.entries


class _CacheState:
    __slots__ = ("latency", "linesize", "nsets", "assoc", "sets")

    def __init__(self, lvl: CacheLevel):
        self.latency = lvl.latency
        self.linesize = lvl.linesize
        self.assoc = lvl.associativity
        self.nsets = lvl.capacity // (lvl.associativity * lvl.linesize)
        self.sets = [dict() for _ in range(self.nsets)]


class _TlbState:
    __slots__ = ("entries", "latency", "pages")

    def __init__(self, lvl: TlbLevel):
        self.entries = lvl.entries
        self.latency = lvl.latency
        self.pages = dict()


def simulate(config: SimConfig, rs: ReferenceString, traversals: int) -> float:
    """Average cycles per access over ``traversals`` passes of the chain,
    after one untimed warm-up traversal."""
    if traversals < 1:
        raise ConfigError("traversals must be positive")
    total = _simulate_loads(config, rs, traversals * rs.chain_length)
    return total / (traversals * rs.chain_length)


def _simulate_loads(config: SimConfig, rs: ReferenceString, loads: int) -> int:
    """Total latency of ``loads`` accesses after one warm-up traversal."""
    config.validate()
    caches = [_CacheState(lvl) for lvl in config.cache_levels]
    tlbs = [_TlbState(lvl) for lvl in config.tlb_levels]
    mem_latency = config.memory_latency
    chain = rs.chain
    n = len(chain)
    if loads % n:
        raise ConfigError("simulated loads must be a whole number of traversals")

    page_shift = config.pagesize.bit_length() - 1
    page_mask = config.pagesize - 1
    if config.mapping_seed is None:
        paddrs = chain
    else:
        # Fresh page permutation per (config seed, string seed): each rebuild
        # samples a different virtual-to-physical mapping.
        rng = random.Random((config.mapping_seed << 32) ^ rs.seed)
        npages = (rs.footprint + config.pagesize - 1) >> page_shift
        perm = list(range(npages))
        rng.shuffle(perm)
        paddrs = [(perm[off >> page_shift] << page_shift) | (off & page_mask)
                  for off in chain]

    total = 0
    timing = False
    for sweep in range(loads // n + 1):
        for i in range(n):
            cost = 0
            if tlbs:
                vpage = chain[i] >> page_shift
                hit_at = len(tlbs)
                for ti, tl in enumerate(tlbs):
                    d = tl.pages
                    if vpage in d:
                        del d[vpage]
                        d[vpage] = None
                        hit_at = ti
                        break
                    cost += tl.latency
                for tl in tlbs[:hit_at]:
                    d = tl.pages
                    if vpage in d:
                        del d[vpage]
                    elif len(d) >= tl.entries:
                        del d[next(iter(d))]
                    d[vpage] = None
            paddr = paddrs[i]
            hit_at = len(caches)
            for ci, cs in enumerate(caches):
                line = paddr // cs.linesize
                s = cs.sets[line % cs.nsets]
                if line in s:
                    del s[line]
                    s[line] = None
                    cost += cs.latency
                    hit_at = ci
                    break
            else:
                cost += mem_latency
            for cs in caches[:hit_at]:
                line = paddr // cs.linesize
                s = cs.sets[line % cs.nsets]
                if line in s:
                    del s[line]
                elif len(s) >= cs.assoc:
                    del s[next(iter(s))]
                s[line] = None
            if timing:
                total += cost
        timing = True
    return total


class SimulatedBackend:
    """Backend that measures reference strings on a simulated hierarchy.

    Pure and deterministic: equal (config, string) pairs give bit-equal
    results, so it is freely shareable across threads and measurements.
    """

    deterministic = True

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config

    def run(self, rs: ReferenceString, loads: int):
        """Return (elapsed, loads) where elapsed is total cycles (one
        simulated cycle per calibration cycle)."""
        total = _simulate_loads(self.config, rs, loads)
        return float(total), loads


# ---------------------------------------------------------------------------
# Config file format: one directive per line, '#' comments.
#
#   pagesize 4096
#   cache <capacity> <associativity> <linesize> <latency>
#   tlb <entries> <miss_penalty>
#   memory <latency>
#   mapping identity | random <seed>
# ---------------------------------------------------------------------------

def parse_config(text: str) -> SimConfig:
    caches: List[CacheLevel] = []
    tlbs: List[TlbLevel] = []
    memory_latency = 100
    pagesize = 4096
    mapping_seed: Optional[int] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "pagesize" and len(parts) == 2:
                pagesize = int(parts[1])
            elif parts[0] == "cache" and len(parts) == 5:
                caches.append(CacheLevel(int(parts[1]), int(parts[2]),
                                         int(parts[3]), int(parts[4])))
            elif parts[0] == "tlb" and len(parts) == 3:
                tlbs.append(TlbLevel(int(parts[1]), int(parts[2])))
            elif parts[0] == "memory" and len(parts) == 2:
                memory_latency = int(parts[1])
            elif parts[0] == "mapping" and parts[1] == "identity":
                mapping_seed = None
            elif parts[0] == "mapping" and parts[1] == "random" and len(parts) == 3:
                mapping_seed = int(parts[2])
            else:
                raise ValueError(line)
        except (ValueError, IndexError):
            raise ConfigError("bad config directive at line %d: %r" % (lineno, raw))
    config = SimConfig(cache_levels=caches, tlb_levels=tlbs,
                       memory_latency=memory_latency, pagesize=pagesize,
                       mapping_seed=mapping_seed)
    config.validate()
    return config


def load_config(path: str) -> SimConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(config: SimConfig) -> str:
    lines = ["pagesize %d" % config.pagesize]
    for lvl in config.cache_levels:
        lines.append("cache %d %d %d %d" % (lvl.capacity, lvl.associativity,
                                            lvl.linesize, lvl.latency))
    for tl in config.tlb_levels:
        lines.append("tlb %d %d" % (tl.entries, tl.latency))
    lines.append("memory %d" % config.memory_latency)
    if config.mapping_seed is not None:
        lines.append("mapping random %d" % config.mapping_seed)
    return "\n".join(lines) + "\n"
