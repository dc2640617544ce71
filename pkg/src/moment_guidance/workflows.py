"""Pipeline steps shared by the CLI and the test suite.

Each step reads/writes artifacts under the run's output directory and is
a pure function of (config, seed, inputs): re-running overwrites
identical bytes. Parallelism never changes results; work items are
mapped in a fixed order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .config import RunConfig
from .data import GroundingDataset, LabeledWindow, generate_synthetic, load_dataset
from .data import label_windows_query_agnostic, label_windows_query_dependent
from .errors import DataError
from .evaluation import MetricsReport, evaluate, write_metrics_csv, write_metrics_json
from .fusion import GuidanceScores, fuse_scores, read_guidance, rerank_and_nms, write_guidance
from .grounding import make_scorer, read_predictions, run_longform, write_predictions
from .guidance import (
    MODE_DEPENDENT,
    GuidanceConfig,
    GuidanceModel,
    PassCounter,
    load_model,
    save_model,
    score_windows,
    train_guidance,
    write_loss_curve,
)
from .temporal import ScoredMoment, Window, generate_windows


def artifact(rc: RunConfig, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(rc.out_dir, name)


def ordered_map(fn, items, threads: int):
    """Map preserving item order; thread count never affects results."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def guidance_windows(video, window_len: int, stride: int) -> list[Window]:
    return generate_windows(video.num_frames, video.fps, window_len, stride)


def build_labeled_windows(
    ds: GroundingDataset, split: str, gcfg: GuidanceConfig
) -> list[LabeledWindow]:
    """Supervision for one split under the configured guidance mode."""
    labeled: list[LabeledWindow] = []
    if gcfg.mode == MODE_DEPENDENT:
        for q in ds.queries_for_split(split):
            video = ds.videos[q.video_id]
            windows = guidance_windows(video, gcfg.window_len, gcfg.stride)
            labeled.extend(label_windows_query_dependent(windows, q.ground_truth, video.id, q.id))
    else:
        moments = ds.moments_by_video(splits=(split,))
        for video in ds.videos_for_split(split):
            windows = guidance_windows(video, gcfg.window_len, gcfg.stride)
            labeled.extend(label_windows_query_agnostic(windows, moments[video.id], video.id))
    return labeled


def cmd_gen_synth(rc: RunConfig) -> dict:
    ds = generate_synthetic(rc.synthetic, rc.dataset_root)
    return {
        "dataset_root": rc.dataset_root,
        "videos": len(ds.videos),
        "queries": len(ds.queries),
    }


def cmd_train_guidance(rc: RunConfig) -> dict:
    os.makedirs(rc.out_dir, exist_ok=True)
    ds = load_dataset(rc.dataset_root)
    gcfg = rc.guidance_config()
    labeled = build_labeled_windows(ds, "train", gcfg)
    val = build_labeled_windows(ds, "val", gcfg)
    model, losses = train_guidance(ds, labeled, gcfg, rc.train, val_labeled=val or None)
    save_model(model, artifact(rc, "model.bin"))
    write_loss_curve(artifact(rc, "loss.csv"), losses)
    return {
        "model": artifact(rc, "model.bin"),
        "epochs": len(losses),
        "final_loss": losses[-1],
        "train_windows": len(labeled),
    }


def _load_model_for(rc: RunConfig) -> GuidanceModel:
    path = artifact(rc, "model.bin")
    if not os.path.exists(path):
        raise DataError(f"model file {path} missing; run train-guidance first")
    return load_model(path)


def cmd_score_windows(rc: RunConfig, counter: PassCounter | None = None) -> dict:
    os.makedirs(rc.out_dir, exist_ok=True)
    ds = load_dataset(rc.dataset_root)
    model = _load_model_for(rc)
    gcfg = model.config

    if gcfg.mode == MODE_DEPENDENT:
        items = [(ds.videos[q.video_id], q) for q in ds.queries_for_split(rc.split)]
    else:
        items = [(v, None) for v in ds.videos_for_split(rc.split)]

    def score_item(item) -> GuidanceScores:
        video, query = item
        windows = guidance_windows(video, gcfg.window_len, gcfg.stride)
        scored = score_windows(model, ds, video, query, windows, counter=counter)
        return GuidanceScores(
            video.id,
            [p for _, p in scored],
            query_id=query.id if query is not None else None,
        )

    records = ordered_map(score_item, items, rc.threads)
    write_guidance(
        artifact(rc, "guidance.json"), gcfg.window_len, gcfg.stride, gcfg.mode, records
    )
    return {"guidance": artifact(rc, "guidance.json"), "records": len(records)}


def cmd_ground(rc: RunConfig) -> dict:
    os.makedirs(rc.out_dir, exist_ok=True)
    ds = load_dataset(rc.dataset_root)
    queries = ds.queries_for_split(rc.split)

    def ground_query(q) -> list[ScoredMoment]:
        scorer = make_scorer(rc.scorer["kind"], rc.scorer, ds, q.video_id)
        return run_longform(scorer, ds, ds.videos[q.video_id], q, rc.longform)

    results = ordered_map(ground_query, queries, rc.threads)
    by_query = {q.id: preds for q, preds in zip(queries, results)}
    write_predictions(artifact(rc, "predictions.jsonl"), by_query)
    total = sum(len(v) for v in by_query.values())
    return {"predictions": artifact(rc, "predictions.jsonl"), "queries": len(queries), "moments": total}


def cmd_fuse(rc: RunConfig) -> dict:
    ds = load_dataset(rc.dataset_root)
    by_query = read_predictions(artifact(rc, "predictions.jsonl"))
    meta, records = read_guidance(artifact(rc, "guidance.json"))
    queries = ds.queries_for_split(rc.split)
    dependent = meta["mode"] == MODE_DEPENDENT

    def fuse_query(q) -> list[ScoredMoment]:
        video = ds.videos[q.video_id]
        key = (video.id, q.id if dependent else None)
        rec = records.get(key)
        if rec is None:
            raise DataError(f"no guidance scores for video {video.id}" + (f" query {q.id}" if dependent else ""))
        windows = guidance_windows(video, meta["window_len"], meta["stride"])
        fused = fuse_scores(by_query.get(q.id, []), rec, windows)
        return rerank_and_nms(fused, rc.eval.nms_threshold)

    results = ordered_map(fuse_query, queries, rc.threads)
    fused_by_query = {q.id: preds for q, preds in zip(queries, results)}
    write_predictions(artifact(rc, "predictions_fused.jsonl"), fused_by_query)
    return {"predictions": artifact(rc, "predictions_fused.jsonl"), "queries": len(queries)}


def cmd_eval(rc: RunConfig) -> tuple[dict, MetricsReport]:
    ds = load_dataset(rc.dataset_root)
    queries = ds.queries_for_split(rc.split)
    by_query = read_predictions(artifact(rc, rc.predictions_file))

    def rank_query(q) -> list[ScoredMoment]:
        return rerank_and_nms(by_query.get(q.id, []), rc.eval.nms_threshold)

    results = ordered_map(rank_query, queries, rc.threads)
    ranked = {q.id: preds for q, preds in zip(queries, results)}
    report = evaluate(queries, ranked, rc.eval)
    write_metrics_json(artifact(rc, "metrics.json"), report)
    write_metrics_csv(artifact(rc, "metrics.csv"), report, rc.eval)
    summary = {
        "metrics": artifact(rc, "metrics.json"),
        "mr_all": report.mr_all,
        "queries": report.query_count,
        "subset": report.subset,
    }
    return summary, report


def run_full_pipeline(rc: RunConfig) -> MetricsReport:
    """gen-synth (if needed), train, score, ground, fuse, eval."""
    if not os.path.exists(os.path.join(rc.dataset_root, "annotations.json")):
        cmd_gen_synth(rc)
    cmd_train_guidance(rc)
    cmd_score_windows(rc)
    cmd_ground(rc)
    cmd_fuse(rc)
    _, report = cmd_eval(rc)
    return report
