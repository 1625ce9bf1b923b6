"""Reference strings: circular pointer chains that realize fixed access patterns.

Three families are built here:

* gap strings   -- n slots spaced k bytes apart, the last one pushed out by an
                   extra offset o; used to stress a single associativity set
* cache strings -- one slot per L1-line-sized block per page, page-contiguous,
                   shuffled within and across pages; used for the multi-level
                   cache sweep
* TLB strings   -- n slots per page over the footprint; used for the TLB sweep
                   and its confirmatory tests

A string is represented symbolically as the sequence of byte offsets in
traversal order.  Backends turn that into real memory or simulated accesses.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Union

from .errors import InvalidGeometryError

DEFAULT_LINESIZE = 64

#: Largest buffer a reference string may span (bytes).
MAX_FOOTPRINT = 64 * 1024 * 1024


@dataclass
class MachineEnv:
    """Static facts about the machine (or simulated machine) under test."""

    pagesize: int
    word: int = 8
    l1_linesize: int = DEFAULT_LINESIZE

    def __post_init__(self):
        if self.pagesize <= 0 or self.pagesize & (self.pagesize - 1):
            raise InvalidGeometryError("pagesize must be a power of two")
        if self.word not in (4, 8):
            raise InvalidGeometryError("word must be 4 or 8 bytes")
        if self.l1_linesize < self.word:
            raise InvalidGeometryError("l1_linesize must be >= word")

    @classmethod
    def host(cls) -> "MachineEnv":
        try:
            pagesize = os.sysconf("SC_PAGE_SIZE")
        except (ValueError, OSError):
            import mmap

            pagesize = mmap.PAGESIZE
        import struct

        return cls(pagesize=pagesize, word=struct.calcsize("P"))


@dataclass(frozen=True)
class GapKind:
    n: int
    k: int
    o: int


@dataclass(frozen=True)
class CacheKind:
    footprint: int


@dataclass(frozen=True)
class TlbKind:
    lines_per_page: int
    footprint: int


Kind = Union[GapKind, CacheKind, TlbKind]


@dataclass
class ReferenceString:
    """A circular chain of pointer-sized slots over a contiguous footprint.

    ``chain`` lists the slot byte offsets in traversal order, starting at
    ``entry``; following it wraps back to ``entry`` after ``chain_length``
    steps.  Immutable by convention after construction.
    """

    footprint: int
    entry: int
    kind: Kind
    chain_length: int
    seed: int
    chain: list = field(repr=False)
    pagesize: int = 4096


def build_gap_string(n: int, k: int, o: int, env: MachineEnv,
                     limit: int = MAX_FOOTPRINT) -> ReferenceString:
    """Build G(n, k, o): slots at 0, k, 2k, ..., (n-2)k and (n-1)k + o.

    The chain is walked in address order; no shuffling, so the string
    deterministically stresses one associativity set.
    """
    if n < 2:
        raise InvalidGeometryError("gap string needs at least 2 slots")
    if k < env.word:
        raise InvalidGeometryError("gap must be at least one word")
    if o < 0 or o >= env.pagesize:
        raise InvalidGeometryError("offset must be in [0, pagesize)")
    footprint = (n - 1) * k + o + env.word
    if n * k > limit or footprint > limit:
        raise InvalidGeometryError(
            "gap string of %d x %d bytes exceeds the %d byte allocation limit"
            % (n, k, limit))
    offsets = [i * k for i in range(n - 1)]
    offsets.append((n - 1) * k + o)
    return ReferenceString(footprint=footprint, entry=0, kind=GapKind(n, k, o),
                           chain_length=n, seed=0, chain=offsets,
                           pagesize=env.pagesize)


def build_cache_string(footprint: int, env: MachineEnv, seed: int) -> ReferenceString:
    """Build C(k): one slot per L1-line block per page, page-contiguous.

    Row (page) order and within-row order are shuffled independently from
    ``seed``.  Footprints below one page are treated as a single truncated
    page covering footprint / l1_linesize lines.
    """
    if footprint < 2 * env.word:
        raise InvalidGeometryError("cache string footprint too small")
    if footprint % 1024:
        raise InvalidGeometryError("cache string footprint must be a multiple of 1KB")
    if footprint > MAX_FOOTPRINT:
        raise InvalidGeometryError("footprint exceeds allocation limit")
    ls = env.l1_linesize
    rng = random.Random(seed)
    full_pages, tail = divmod(footprint, env.pagesize)
    lines_per_page = env.pagesize // ls
    pages = list(range(full_pages))
    rng.shuffle(pages)
    if tail:
        # The truncated page always sorts last in address space but takes a
        # random position in the row order.
        pages.insert(rng.randrange(len(pages) + 1) if pages else 0, full_pages)
    chain = []
    for page in pages:
        count = lines_per_page if page < full_pages else tail // ls
        cols = list(range(count))
        rng.shuffle(cols)
        base = page * env.pagesize
        chain.extend(base + c * ls for c in cols)
    if len(chain) < 2:
        raise InvalidGeometryError("cache string needs at least 2 slots")
    return ReferenceString(footprint=footprint, entry=chain[0],
                           kind=CacheKind(footprint), chain_length=len(chain),
                           seed=seed, chain=chain, pagesize=env.pagesize)


def build_tlb_string(n: int, footprint: int, env: MachineEnv, seed: int) -> ReferenceString:
    """Build T(n, k): n slots in each page of a k-byte footprint.

    For n = 1 the line within each page is drawn from a shuffled column set,
    wrapping modularly, and pages are visited in shuffled order.  For n > 1
    each page gets n consecutive lines starting at a per-page variable offset,
    and the full access order is randomized.
    """
    ls = env.l1_linesize
    lines_per_page = env.pagesize // ls
    if n < 1 or n > lines_per_page:
        raise InvalidGeometryError("lines per page must be in [1, pagesize/linesize]")
    if footprint <= 0 or footprint % env.pagesize:
        raise InvalidGeometryError("TLB string footprint must be a multiple of pagesize")
    if footprint > MAX_FOOTPRINT:
        raise InvalidGeometryError("footprint exceeds allocation limit")
    npages = footprint // env.pagesize
    if n * npages < 2:
        raise InvalidGeometryError("TLB string needs at least 2 slots")
    rng = random.Random(seed)
    rows = list(range(npages))
    rng.shuffle(rows)
    chain = []
    if n == 1:
        cols = list(range(lines_per_page))
        rng.shuffle(cols)
        for j, page in enumerate(rows):
            chain.append(page * env.pagesize + cols[j % lines_per_page] * ls)
    else:
        for page in rows:
            base = (page * n) % lines_per_page
            for i in range(n):
                line = (base + i) % lines_per_page
                chain.append(page * env.pagesize + line * ls)
        rng.shuffle(chain)
    return ReferenceString(footprint=footprint, entry=chain[0],
                           kind=TlbKind(n, footprint), chain_length=len(chain),
                           seed=seed, chain=chain, pagesize=env.pagesize)


def verify_cycle(rs: ReferenceString) -> bool:
    """Check the single-cycle invariant and the per-kind placement rules."""
    chain = rs.chain
    if len(chain) != rs.chain_length or rs.chain_length < 2:
        return False
    if chain[0] != rs.entry:
        return False
    seen = set(chain)
    if len(seen) != len(chain):
        return False
    if min(chain) < 0 or max(chain) >= rs.footprint:
        return False
    kind = rs.kind
    if isinstance(kind, GapKind):
        expected = [i * kind.k for i in range(kind.n - 1)]
        expected.append((kind.n - 1) * kind.k + kind.o)
        return chain == expected
    if isinstance(kind, CacheKind):
        return _check_cache_placement(rs)
    if isinstance(kind, TlbKind):
        return _check_tlb_placement(rs, kind)
    return False


def _check_cache_placement(rs: ReferenceString) -> bool:
    # One slot per line block per page, pages never revisited once left, and
    # every page's blocks fully covered at one uniform line stride.
    pagesize = rs.pagesize
    by_page = {}
    page = None
    for off in rs.chain:
        p = off // pagesize
        if p != page:
            if p in by_page:
                return False
            by_page[p] = []
            page = p
        by_page[p].append(off - p * pagesize)
    full = [offs for offs in by_page.values() if len(offs) > 1]
    if not full:
        return False
    counts = {len(offs) for offs in by_page.values()}
    # At most two distinct slot counts: full pages and one truncated tail.
    if len(counts) > 2:
        return False
    lines_full = max(counts)
    ls = pagesize // lines_full if rs.footprint >= pagesize else rs.footprint // lines_full
    if ls <= 0:
        return False
    for offs in by_page.values():
        if sorted(offs) != [i * ls for i in range(len(offs))]:
            return False
    return True


def _check_tlb_placement(rs: ReferenceString, kind: TlbKind) -> bool:
    pagesize = rs.pagesize
    counts = {}
    for off in rs.chain:
        counts[off // pagesize] = counts.get(off // pagesize, 0) + 1
    if any(c != kind.lines_per_page for c in counts.values()):
        return False
    return len(counts) * pagesize == kind.footprint
