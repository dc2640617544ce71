"""Guided re-ranking: multiply each prediction's score by the plausibility
of its best-overlapping guidance window, then re-sort and apply NMS."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DataError, FormatError
from .temporal import Interval, ScoredMoment, Window, assign_best_window, nms

__all__ = [
    "GuidanceScores",
    "fuse_scores",
    "rerank_and_nms",
    "write_guidance",
    "read_guidance",
]


@dataclass
class GuidanceScores:
    """Per-window plausibility scores for one video (and one query when
    the guidance model is query-dependent)."""

    video_id: str
    scores: list[float]
    query_id: str | None = None


def fuse_scores(
    predictions: list[ScoredMoment],
    guidance: GuidanceScores,
    guidance_windows: list[Window],
) -> list[ScoredMoment]:
    """s* = s * p(best window); intervals and relative order untouched."""
    if len(guidance.scores) < len(guidance_windows):
        raise DataError(
            f"guidance for video {guidance.video_id} covers {len(guidance.scores)} windows, "
            f"need {len(guidance_windows)}"
        )
    fused = []
    for m in predictions:
        j = assign_best_window(m.interval, guidance_windows)
        fused.append(
            ScoredMoment(m.interval, m.score * guidance.scores[j], source_window=m.source_window)
        )
    return fused


def rerank_and_nms(fused: list[ScoredMoment], nms_threshold: float) -> list[ScoredMoment]:
    """Fixed order of operations: sort by fused score, then suppress."""
    return nms(fused, nms_threshold)


def write_guidance(path: str, window_len: int, stride: int, mode: str, records: list[GuidanceScores]) -> None:
    doc = {
        "window_len": window_len,
        "stride": stride,
        "mode": mode,
        "records": [
            {
                "video_id": r.video_id,
                **({"query_id": r.query_id} if r.query_id is not None else {}),
                "scores": r.scores,
            }
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_guidance(path: str) -> tuple[dict, dict[tuple[str, str | None], GuidanceScores]]:
    """Returns (meta, records keyed by (video_id, query_id))."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"guidance file {path} missing")
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})")
    for key in ("window_len", "stride", "mode", "records"):
        if key not in doc:
            raise FormatError(f"{path}: missing field {key!r}")
    records = {}
    for rec in doc["records"]:
        gs = GuidanceScores(rec["video_id"], rec["scores"], rec.get("query_id"))
        for s in gs.scores:
            if not (0.0 <= s <= 1.0):
                raise DataError(f"{path}: guidance score {s} outside [0, 1]")
        records[(gs.video_id, gs.query_id)] = gs
    meta = {"window_len": doc["window_len"], "stride": doc["stride"], "mode": doc["mode"]}
    return meta, records
