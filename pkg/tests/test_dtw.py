import numpy as np
import pytest

from accdist.dtw import dtw_distance, frame_profile
from accdist.errors import BadWindow, DimMismatch
from accdist.signal import FrameMatrix


def matrix(rows, stride=10.0):
    return FrameMatrix(frames=np.asarray(rows, dtype=np.float32),
                       frame_stride_ms=stride)


def enumerate_paths(ta, tb):
    """All monotone step paths from (0,0) to (ta-1, tb-1)."""
    paths = []

    def extend(path):
        i, j = path[-1]
        if i == ta - 1 and j == tb - 1:
            paths.append(list(path))
            return
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + di, j + dj
            if ni < ta and nj < tb:
                path.append((ni, nj))
                extend(path)
                path.pop()

    extend([(0, 0)])
    return paths


def brute_force_best(a, b):
    """Minimum total cost over all monotone paths; ties broken by length."""
    local = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    best = None
    for path in enumerate_paths(len(a), len(b)):
        total = sum(local[i, j] for i, j in path)
        key = (total, len(path))
        if best is None or key < best:
            best = key
    return best  # (total, length)


class TestDtwDistance:
    def test_self_distance_zero(self):
        rng = np.random.default_rng(0)
        x = matrix(rng.normal(size=(7, 4)))
        trace = dtw_distance(x, x)
        assert trace.normalized_cost == 0.0
        assert trace.total_cost == 0.0

    def test_two_frames_to_one(self):
        a = matrix([[0.0], [2.0]])
        b = matrix([[1.0]])
        trace = dtw_distance(a, b)
        assert trace.total_cost == pytest.approx(2.0, abs=1e-12)
        assert trace.normalized_cost == pytest.approx(1.0, abs=1e-12)
        assert trace.path == [(0, 0), (1, 0)]

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            dtw_distance(matrix(np.zeros((3, 39))), matrix(np.zeros((3, 5))))

    def test_path_shape_invariants(self):
        rng = np.random.default_rng(5)
        a = matrix(rng.normal(size=(6, 2)))
        b = matrix(rng.normal(size=(9, 2)))
        trace = dtw_distance(a, b)
        path = trace.path
        assert path[0] == (0, 0)
        assert path[-1] == (5, 8)
        for (i0, j0), (i1, j1) in zip(path, path[1:]):
            assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}
        assert trace.normalized_cost == pytest.approx(
            trace.total_cost / len(path), abs=1e-15)

    def test_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = matrix(rng.normal(size=(rng.integers(1, 8), 3)))
            b = matrix(rng.normal(size=(rng.integers(1, 8), 3)))
            ab = dtw_distance(a, b)
            ba = dtw_distance(b, a)
            assert ab.normalized_cost == pytest.approx(ba.normalized_cost, abs=1e-12)
            assert set((j, i) for i, j, _ in ba.steps) == set(
                (i, j) for i, j, _ in ab.steps)

    def test_positive_for_generic_distinct_inputs(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            a = matrix(rng.normal(size=(rng.integers(1, 8), 3)))
            b = matrix(rng.normal(size=(rng.integers(1, 8), 3)))
            assert dtw_distance(a, b).normalized_cost > 0.0

    def test_scaling_monotone_invariance(self):
        rng = np.random.default_rng(13)
        pairs = [(matrix(rng.normal(size=(5, 2))), matrix(rng.normal(size=(6, 2))))
                 for _ in range(5)]
        base = [dtw_distance(a, b).normalized_cost for a, b in pairs]
        scale = 3.5
        scaled = [dtw_distance(matrix(a.frames * scale), matrix(b.frames * scale)
                               ).normalized_cost for a, b in pairs]
        for unscaled, s in zip(base, scaled):
            assert s == pytest.approx(scale * unscaled, rel=1e-5)
        assert np.argsort(base).tolist() == np.argsort(scaled).tolist()

    def test_oracle_small_battery(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            ta, tb = rng.integers(1, 6), rng.integers(1, 6)
            d = rng.integers(1, 4)
            a = rng.normal(size=(ta, d))
            b = rng.normal(size=(tb, d))
            trace = dtw_distance(matrix(a), matrix(b))
            best_total, best_len = brute_force_best(
                a.astype(np.float32).astype(np.float64),
                b.astype(np.float32).astype(np.float64))
            assert abs(trace.total_cost - best_total) <= 1e-12
            assert abs(trace.normalized_cost - best_total / best_len) <= 1e-12


class TestFrameProfile:
    def test_constant_costs(self):
        a = matrix(np.zeros((12, 2)))
        b = matrix(np.full((12, 2), 3.0))
        trace = dtw_distance(a, b)  # diagonal path, constant local cost
        per_frame, moving, counts, global_value = frame_profile(trace, 5)
        expected = float(np.sqrt(2) * 3.0)
        np.testing.assert_allclose(per_frame, expected)
        np.testing.assert_allclose(moving, expected)
        assert global_value == pytest.approx(expected)
        assert len(moving) == 12 - 5 + 1
        assert counts.tolist() == [1] * 12

    def test_window_length_arithmetic(self):
        rng = np.random.default_rng(1)
        a = matrix(rng.normal(size=(40, 3)))
        b = matrix(rng.normal(size=(40, 3)))
        trace = dtw_distance(a, b)
        per_frame, moving, counts, _ = frame_profile(trace, 9)
        assert len(per_frame) == 40
        assert len(moving) == 40 - 9 + 1 == 32
        assert counts.sum() == len(trace.steps)

    def test_even_window_rejected(self):
        a = matrix(np.zeros((10, 1)))
        trace = dtw_distance(a, a)
        with pytest.raises(BadWindow):
            frame_profile(trace, 10)

    def test_oversized_window_rejected(self):
        a = matrix(np.zeros((10, 1)))
        trace = dtw_distance(a, a)
        with pytest.raises(BadWindow):
            frame_profile(trace, 11)

    def test_multiplicity_counts_alignment_fanout(self):
        a = matrix([[0.0], [5.0]])
        b = matrix([[0.0], [0.1], [4.9], [5.0]])
        trace = dtw_distance(a, b)
        _, _, counts, _ = frame_profile(trace, 1)
        assert counts.sum() == len(trace.steps)
        assert counts.max() >= 2  # several b frames fold into one a frame
