import pytest

from memhier import MachineEnv


@pytest.fixture
def env():
    return MachineEnv(pagesize=4096, word=8, l1_linesize=64)


def naive_single_level_cycles(rs, capacity, assoc, linesize, latency,
                              mem_latency, traversals=2):
    """Brute-force hit/miss counter for a single cache level with identity
    mapping, written independently of the simulator: a hit is an access whose
    line was touched more recently than `assoc` other distinct lines of the
    same set.  Scans the full access history instead of keeping LRU state.
    """
    nsets = capacity // (assoc * linesize)
    history = []  # (set, line) per access, in order
    total = 0
    accesses = rs.chain * (traversals + 1)
    for i, off in enumerate(accesses):
        line = off // linesize
        s = line % nsets
        distinct = set()
        hit = False
        for ps, pl in reversed(history):
            if ps != s:
                continue
            if pl == line:
                hit = len(distinct) < assoc
                break
            distinct.add(pl)
        history.append((s, line))
        if i >= len(rs.chain):  # first traversal is warm-up
            total += latency if hit else mem_latency
    return total / (traversals * len(rs.chain))
