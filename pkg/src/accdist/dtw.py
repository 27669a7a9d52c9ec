"""Dynamic time warping between frame matrices.

Full O(T_A * T_B) tables with Euclidean local cost, step set
{(1,0), (0,1), (1,1)}, no band or slope constraint. The reported distance is
the total path cost divided by the path length, so sequences of different
lengths remain comparable. Traceback ties prefer the diagonal, then the
(1,0) step, so traces are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import BadWindow, DimMismatch, EmptyInput
from .signal import FrameMatrix


@dataclass(frozen=True)
class AlignmentTrace:
    """Optimal monotone path with per-step local costs.

    ``steps`` holds (i, j, local_cost) triples from (0, 0) to
    (T_A - 1, T_B - 1); consecutive steps differ by (1,0), (0,1) or (1,1).
    ``normalized_cost`` is ``total_cost / len(steps)``.
    """

    steps: tuple
    total_cost: float
    normalized_cost: float

    @property
    def path(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _ in self.steps]


def dtw_distance(a: FrameMatrix, b: FrameMatrix) -> AlignmentTrace:
    """Align two frame matrices, minimizing accumulated Euclidean cost."""
    if a.dim != b.dim:
        raise DimMismatch(f"feature dims differ: {a.dim} vs {b.dim}")
    ta, tb = a.n_frames, b.n_frames
    if ta < 1 or tb < 1:
        raise EmptyInput("both inputs need at least one frame")

    local = cdist(a.frames.astype(np.float64), b.frames.astype(np.float64))
    acc = np.full((ta + 1, tb + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(ta):
        row = acc[i + 1]
        prev = acc[i]
        for j in range(tb):
            row[j + 1] = local[i, j] + min(prev[j], prev[j + 1], row[j])

    steps = []
    i, j = ta - 1, tb - 1
    while True:
        steps.append((i, j, float(local[i, j])))
        if i == 0 and j == 0:
            break
        best = acc[i, j]  # diagonal preferred
        move = (i - 1, j - 1)
        if i > 0 and j >= 0 and acc[i, j + 1] < best:
            best = acc[i, j + 1]
            move = (i - 1, j)
        if j > 0 and acc[i + 1, j] < best:
            best = acc[i + 1, j]
            move = (i, j - 1)
        if i == 0:
            move = (0, j - 1)
        elif j == 0:
            move = (i - 1, 0)
        i, j = move
    steps.reverse()

    total = float(acc[ta, tb])
    return AlignmentTrace(steps=tuple(steps), total_cost=total,
                          normalized_cost=total / len(steps))


def frame_profile(trace: AlignmentTrace, window: int):
    """Per-frame cost series along the first input's axis, plus moving average.

    The cost of each A-frame is the mean local cost of the path steps touching
    it; the multiplicity counts how many B-frames align to it (bullet sizes in
    plots). The centered moving average has length ``frames - window + 1``.

    Returns ``(per_frame_cost, moving_average, multiplicity, global_value)``.
    """
    n_frames = trace.steps[-1][0] + 1
    if window < 1 or window % 2 == 0 or window > n_frames:
        raise BadWindow(
            f"window must be odd and within 1..{n_frames}, got {window}"
        )
    sums = np.zeros(n_frames)
    counts = np.zeros(n_frames, dtype=int)
    for i, _, cost in trace.steps:
        sums[i] += cost
        counts[i] += 1
    per_frame = sums / counts
    kernel = np.ones(window) / window
    moving = np.convolve(per_frame, kernel, mode="valid")
    return per_frame, moving, counts, trace.normalized_cost
