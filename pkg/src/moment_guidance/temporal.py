"""Interval algebra for temporal moments and sliding windows.

Everything here is pure and deterministic; tie-breaking rules are fixed
so rankings are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, UsageError


@dataclass(frozen=True)
class Interval:
    """Closed temporal extent in seconds, start <= end."""

    start_s: float
    end_s: float

    def __post_init__(self):
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ConfigError(f"interval endpoints must be finite, got ({self.start_s}, {self.end_s})")
        if self.start_s < 0 or self.end_s < self.start_s:
            raise ConfigError(f"invalid interval ({self.start_s}, {self.end_s})")

    @property
    def length(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Window:
    """Fixed-length feature window; interval is frame coordinates / fps."""

    index: int
    interval: Interval
    frame_start: int
    frame_len: int


@dataclass
class ScoredMoment:
    """A predicted moment with a confidence score in [0, 1]."""

    interval: Interval
    score: float
    source_window: int | None = field(default=None)

    def __post_init__(self):
        if not math.isfinite(self.score) or not (0.0 <= self.score <= 1.0):
            raise ConfigError(f"moment score must be in [0, 1], got {self.score}")


def tiou(a: Interval, b: Interval) -> float:
    """Temporal intersection-over-union of two intervals.

    Two identical zero-length points have tIoU 1; any other zero-union
    configuration yields 0.
    """
    inter = min(a.end_s, b.end_s) - max(a.start_s, b.start_s)
    if inter < 0.0:
        inter = 0.0
    union = max(a.end_s, b.end_s) - min(a.start_s, b.start_s)
    if union <= 0.0:
        # Both zero-length: identical points overlap fully, otherwise not at all.
        return 1.0 if a.start_s == b.start_s else 0.0
    return inter / union


def generate_windows(
    num_frames: int,
    fps: float,
    window_len: int,
    stride: int | None = None,
) -> list[Window]:
    """Sliding windows with starts 0, stride, ... while start < num_frames.

    The default stride is window_len // 2. Tail windows that run past the
    last frame are kept at full frame_len; the feature loader zero-pads.
    """
    if window_len < 1:
        raise ConfigError(f"window_len must be >= 1, got {window_len}")
    if stride is None:
        stride = window_len // 2
    if not (1 <= stride <= window_len):
        raise ConfigError(f"stride must be in [1, window_len], got {stride}")
    if fps <= 0:
        raise ConfigError(f"fps must be positive, got {fps}")
    windows = []
    start = 0
    index = 0
    while start < num_frames:
        interval = Interval(start / fps, (start + window_len) / fps)
        windows.append(Window(index, interval, start, window_len))
        start += stride
        index += 1
    return windows


def assign_best_window(moment: Interval, windows: list[Window]) -> int:
    """Index of the window with maximal tIoU against moment.

    Ties (including the all-zero case) resolve to the lowest window index.
    """
    if not windows:
        raise UsageError("assign_best_window requires a non-empty window list")
    best_idx = 0
    best = -1.0
    for i, w in enumerate(windows):
        v = tiou(moment, w.interval)
        if v > best:
            best = v
            best_idx = i
    return best_idx


def _rank_key(item: tuple[int, ScoredMoment]):
    i, m = item
    return (-m.score, m.interval.start_s, m.interval.length, i)


def sort_by_score(moments: list[ScoredMoment]) -> list[ScoredMoment]:
    """Descending score; ties by earlier start, shorter length, input order."""
    return [m for _, m in sorted(enumerate(moments), key=_rank_key)]


def nms(moments: list[ScoredMoment], threshold: float) -> list[ScoredMoment]:
    """Greedy non-maximum suppression over 1-D intervals.

    Keeps moments in descending-score order and drops any remaining moment
    whose tIoU with a kept one strictly exceeds threshold.
    """
    ranked = sort_by_score(moments)
    kept: list[ScoredMoment] = []
    for cand in ranked:
        suppressed = False
        for k in kept:
            if tiou(cand.interval, k.interval) > threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(cand)
    return kept
