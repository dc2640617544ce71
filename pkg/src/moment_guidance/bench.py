"""Inference-cost accounting: exact forward-pass counts per mode plus
wall-clock timing of the guidance and grounding stages."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .config import RunConfig
from .data import GroundingDataset, QueryRecord, load_dataset
from .errors import MomentGuidanceError
from .grounding import GroundingScorer, LongformConfig, make_scorer, run_longform
from .guidance import (
    MODE_AGNOSTIC,
    GuidanceConfig,
    GuidanceModel,
    PassCounter,
    score_windows,
)
from .temporal import generate_windows
from .workflows import artifact, guidance_windows, ordered_map


@dataclass
class CostReport:
    mode: str
    guidance_passes: int
    grounding_passes: int
    query_count: int
    per_video_windows: dict[str, dict[str, int]]
    wall_clock: dict[str, float] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "mode": self.mode,
            "guidance_passes": self.guidance_passes,
            "grounding_passes": self.grounding_passes,
            "query_count": self.query_count,
            "per_video_windows": self.per_video_windows,
            "wall_clock": {k: round(v, 3) for k, v in self.wall_clock.items()},
        }


class _CountingScorer(GroundingScorer):
    """Delegating scorer that tallies window evaluations."""

    def __init__(self, inner: GroundingScorer, counter: PassCounter):
        self.inner = inner
        self.counter = counter

    def score_window(self, features, tokens, window, fps, max_moments):
        self.counter.add(1)
        return self.inner.score_window(features, tokens, window, fps, max_moments)


def count_cost(
    ds: GroundingDataset,
    mode: str,
    gcfg: GuidanceConfig,
    queries: list[QueryRecord],
    longform: LongformConfig,
) -> CostReport:
    """Closed-form pass counts; no model is evaluated."""
    g_windows = {}
    l_windows = {}
    for vid, video in ds.videos.items():
        g_windows[vid] = len(guidance_windows(video, gcfg.window_len, gcfg.stride))
        l_windows[vid] = len(
            generate_windows(video.num_frames, video.fps, longform.window_len, longform.stride)
        )
    videos_in_play = sorted({q.video_id for q in queries})
    if mode == MODE_AGNOSTIC:
        guidance_passes = sum(g_windows[v] for v in videos_in_play)
    else:
        guidance_passes = sum(g_windows[q.video_id] for q in queries)
    grounding_passes = sum(l_windows[q.video_id] for q in queries)
    per_video = {
        v: {"guidance": g_windows[v], "longform": l_windows[v]} for v in videos_in_play
    }
    return CostReport(
        mode=mode,
        guidance_passes=guidance_passes,
        grounding_passes=grounding_passes,
        query_count=len(queries),
        per_video_windows=per_video,
    )


def bench_cost(rc: RunConfig, model: GuidanceModel | None = None) -> CostReport:
    """Run both stages on the configured split, timing them, and verify the
    instrumented pass counts equal the closed-form formulas exactly."""
    ds = load_dataset(rc.dataset_root)
    if model is None:
        model = GuidanceModel(
            rc.guidance_config(),
            visual_dim=ds.visual_dim,
            audio_dim=ds.audio_dim,
            text_dim=ds.text_dim,
            token_len=ds.token_len,
            seed=rc.seed,
        )
    gcfg = model.config
    queries = ds.queries_for_split(rc.split)
    report = count_cost(ds, gcfg.mode, gcfg, queries, rc.longform)

    guidance_counter = PassCounter()
    if gcfg.mode == MODE_AGNOSTIC:
        items = [(v, None) for v in ds.videos_for_split(rc.split)]
    else:
        items = [(ds.videos[q.video_id], q) for q in queries]
    start = time.monotonic()
    ordered_map(
        lambda item: score_windows(
            model,
            ds,
            item[0],
            item[1],
            guidance_windows(item[0], gcfg.window_len, gcfg.stride),
            counter=guidance_counter,
        ),
        items,
        rc.threads,
    )
    guidance_s = time.monotonic() - start

    grounding_counter = PassCounter()

    def ground_query(q):
        scorer = _CountingScorer(make_scorer(rc.scorer["kind"], rc.scorer, ds, q.video_id), grounding_counter)
        return run_longform(scorer, ds, ds.videos[q.video_id], q, rc.longform)

    start = time.monotonic()
    ordered_map(ground_query, queries, rc.threads)
    grounding_s = time.monotonic() - start

    if guidance_counter.count != report.guidance_passes:
        raise MomentGuidanceError(
            f"instrumented guidance passes {guidance_counter.count} != formula {report.guidance_passes}"
        )
    if grounding_counter.count != report.grounding_passes:
        raise MomentGuidanceError(
            f"instrumented grounding passes {grounding_counter.count} != formula {report.grounding_passes}"
        )
    report.wall_clock = {"guidance_s": guidance_s, "grounding_s": grounding_s}
    return report


def cmd_bench(rc: RunConfig) -> dict:
    os.makedirs(rc.out_dir, exist_ok=True)
    model = None
    model_path = artifact(rc, "model.bin")
    if os.path.exists(model_path):
        from .guidance import load_model

        model = load_model(model_path)
    report = bench_cost(rc, model=model)
    with open(artifact(rc, "cost.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report.to_doc(), sort_keys=True, indent=2) + "\n")
    return {
        "cost": artifact(rc, "cost.json"),
        "guidance_passes": report.guidance_passes,
        "grounding_passes": report.grounding_passes,
    }
