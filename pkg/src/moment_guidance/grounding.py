"""Pluggable grounding scorers and the long-form sliding-window driver.

A scorer sees one window's visual features plus the query tokens and
returns at most M scored moments in window-local seconds; the driver
shifts them into global time. Two desk-scale scorers are provided: a
cosine-similarity baseline and a controlled-difficulty noisy oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .data import GroundingDataset, QueryRecord, VideoRecord, slice_rows
from .errors import ConfigError, DataError, DimensionError, FormatError, MomentGuidanceError
from .rng import Rng, stable_key
from .temporal import Interval, ScoredMoment, Window, generate_windows, sort_by_score, tiou


@dataclass
class LongformConfig:
    window_len: int = 128
    stride: int | None = None
    max_moments: int = 10

    def __post_init__(self):
        if self.stride is None:
            self.stride = self.window_len // 2
        if self.window_len < 1 or self.max_moments < 1:
            raise ConfigError("window_len and max_moments must be >= 1")
        if not (1 <= self.stride <= self.window_len):
            raise ConfigError(f"stride must be in [1, window_len], got {self.stride}")


@dataclass
class NoisyOracleConfig:
    jitter_s: float = 0.0
    distractors: int = 0
    score_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.jitter_s < 0 or self.distractors < 0 or self.score_noise < 0:
            raise ConfigError("noisy oracle parameters must be non-negative")


class GroundingScorer:
    """Contract: score_window returns <= max_moments ScoredMoments whose
    intervals lie inside [0, window duration] (window-local seconds)."""

    def score_window(
        self,
        features: np.ndarray,
        tokens: np.ndarray | None,
        window: Window,
        fps: float,
        max_moments: int,
    ) -> list[ScoredMoment]:
        raise NotImplementedError


class SimilarityScorer(GroundingScorer):
    """Zero-shot baseline: cosine similarity between the mean-pooled query
    vector and each frame; runs of frames above the window's 75th
    percentile become proposals scored by (mean similarity + 1) / 2."""

    def score_window(self, features, tokens, window, fps, max_moments):
        if tokens is None:
            raise DataError("similarity scorer requires query tokens")
        if features.shape[1] != tokens.shape[1]:
            raise DimensionError(
                f"visual dim {features.shape[1]} != token dim {tokens.shape[1]}"
            )
        query = tokens.mean(axis=0)
        q_norm = np.linalg.norm(query)
        f_norms = np.linalg.norm(features, axis=1)
        sims = np.zeros(features.shape[0], dtype=np.float64)
        valid = (f_norms > 0) & (q_norm > 0)
        if valid.any():
            sims[valid] = (features[valid] @ query) / (f_norms[valid] * q_norm)
        threshold = float(np.percentile(sims, 75.0))
        above = sims > threshold
        proposals = []
        start = None
        for i in range(len(above) + 1):
            if i < len(above) and above[i]:
                if start is None:
                    start = i
            elif start is not None:
                run_score = (float(sims[start:i].mean()) + 1.0) / 2.0
                run_score = min(max(run_score, 0.0), 1.0)
                proposals.append(
                    ScoredMoment(Interval(start / fps, i / fps), run_score)
                )
                start = None
        return sort_by_score(proposals)[:max_moments]


class NoisyOracleScorer(GroundingScorer):
    """Test double that emits every in-window ground-truth moment with
    Gaussian boundary jitter, plus uniform-random distractor intervals."""

    def __init__(self, moments: list[Interval], cfg: NoisyOracleConfig, stream_key: int = 0):
        self.moments = moments
        self.cfg = cfg
        self._rng = Rng(cfg.seed)
        self._stream_key = stream_key

    def score_window(self, features, tokens, window, fps, max_moments):
        cfg = self.cfg
        rng = self._rng.child(self._stream_key, window.index)
        w = window.interval
        length = w.length
        proposals = []
        for gt in self.moments:
            if tiou(gt, w) <= 0.0:
                continue
            lo = gt.start_s - w.start_s + rng.normals(1)[0] * cfg.jitter_s
            hi = gt.end_s - w.start_s + rng.normals(1)[0] * cfg.jitter_s
            lo = min(max(lo, 0.0), length)
            hi = min(max(hi, 0.0), length)
            if hi < lo:
                lo, hi = hi, lo
            score = 0.9 + rng.normals(1)[0] * cfg.score_noise
            score = min(max(score, 0.0), 1.0)
            proposals.append(ScoredMoment(Interval(lo, hi), score))
        for _ in range(cfg.distractors):
            a = rng.uniform() * length
            b = rng.uniform() * length
            if b < a:
                a, b = b, a
            score = 0.4 + rng.uniform() * 0.4
            proposals.append(ScoredMoment(Interval(a, b), score))
        return sort_by_score(proposals)[:max_moments]


def run_longform(
    scorer: GroundingScorer,
    dataset: GroundingDataset,
    video: VideoRecord,
    query: QueryRecord | None,
    cfg: LongformConfig,
) -> list[ScoredMoment]:
    """Slide windows over the whole video and gather global-time predictions."""
    windows = generate_windows(video.num_frames, video.fps, cfg.window_len, cfg.stride)
    visual = dataset.visual(video.id)
    tokens = dataset.tokens(query) if query is not None else None
    out: list[ScoredMoment] = []
    for w in windows:
        features = slice_rows(visual, w.frame_start, w.frame_len)
        try:
            local = scorer.score_window(features, tokens, w, video.fps, cfg.max_moments)
        except MomentGuidanceError as exc:
            raise type(exc)(f"video {video.id} window {w.index}: {exc}") from exc
        for m in local:
            out.append(
                ScoredMoment(
                    Interval(w.interval.start_s + m.interval.start_s, w.interval.start_s + m.interval.end_s),
                    m.score,
                    source_window=w.index,
                )
            )
    return out


def make_scorer(kind: str, cfg_doc: dict, dataset: GroundingDataset, video_id: str) -> GroundingScorer:
    """Scorer factory keyed by config; oracle scorers see the video's moments."""
    if kind == "similarity":
        return SimilarityScorer()
    if kind == "noisy_oracle":
        cfg = NoisyOracleConfig(
            jitter_s=cfg_doc.get("jitter_s", 0.0),
            distractors=cfg_doc.get("distractors", 0),
            score_noise=cfg_doc.get("score_noise", 0.0),
            seed=cfg_doc.get("seed", 0),
        )
        moments = dataset.moments_by_video()[video_id]
        return NoisyOracleScorer(moments, cfg, stream_key=stable_key(video_id))
    raise ConfigError(f"unknown scorer kind {kind!r}")


def write_predictions(path: str, by_query: dict[str, list[ScoredMoment]]) -> None:
    """JSON-lines, one record per (query, prediction)."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, moments in by_query.items():
            for m in moments:
                rec = {
                    "query_id": query_id,
                    "start_s": m.interval.start_s,
                    "end_s": m.interval.end_s,
                    "score": m.score,
                    "source_window": m.source_window,
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_predictions(path: str) -> dict[str, list[ScoredMoment]]:
    by_query: dict[str, list[ScoredMoment]] = {}
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"predictions file {path} missing")
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise FormatError(f"{path}:{line_no}: invalid JSON line")
            score = rec.get("score")
            if score is None or not math.isfinite(score) or not (0.0 <= score <= 1.0):
                raise DataError(f"{path}:{line_no}: score {score!r} outside [0, 1]")
            by_query.setdefault(rec["query_id"], []).append(
                ScoredMoment(
                    Interval(rec["start_s"], rec["end_s"]),
                    score,
                    source_window=rec.get("source_window"),
                )
            )
    return by_query
