import pytest

from memhier import AllocationFailureError, acquire_region

KB = 1024
MB = 1024 * 1024


class TestAcquireRegion:
    def test_one_page(self):
        pytest.importorskip("numpy")
        region = acquire_region(4 * KB)
        assert region.nbytes >= 4 * KB

    def test_within_cap(self):
        pytest.importorskip("numpy")
        region = acquire_region(32 * MB)
        assert region.nbytes >= 32 * MB

    def test_over_cap_rejected(self):
        with pytest.raises(AllocationFailureError):
            acquire_region(128 * MB)

    def test_nonpositive_rejected(self):
        with pytest.raises(AllocationFailureError):
            acquire_region(0)


class TestRealBackend:
    def test_chase_produces_plausible_latency(self, env):
        pytest.importorskip("numba")
        from memhier import RealMemoryBackend, build_gap_string, calibrate, run_once

        be = RealMemoryBackend()
        cal = calibrate(env, be)
        rs = build_gap_string(2, 512, 0, env)
        t = run_once(rs, cal, be)
        # An L1-resident dependent load is a handful of cycles on anything
        # this code runs on; the bound only guards against unit mistakes.
        assert 0.5 < t < 200.0
