"""Recall@K-IoU metrics, their means, and the report writer."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .data import QueryRecord
from .errors import ConfigError, UsageError
from .temporal import Interval, ScoredMoment, tiou

log = logging.getLogger(__name__)


@dataclass
class EvalConfig:
    k_values: tuple[int, ...] = (1, 5, 10, 50, 100)
    iou_thresholds: tuple[float, ...] = (0.1, 0.3, 0.5)
    nms_threshold: float = 0.3
    subset: str = "all"

    def __post_init__(self):
        self.k_values = tuple(self.k_values)
        self.iou_thresholds = tuple(self.iou_thresholds)
        if list(self.k_values) != sorted(self.k_values) or len(set(self.k_values)) != len(self.k_values):
            raise ConfigError(f"k_values must be strictly ascending, got {self.k_values}")
        if not self.k_values or min(self.k_values) < 1:
            raise ConfigError("k_values must be non-empty positive integers")
        if any(not (0.0 < t <= 1.0) for t in self.iou_thresholds) or not self.iou_thresholds:
            raise ConfigError(f"iou_thresholds must lie in (0, 1], got {self.iou_thresholds}")
        if not (0.0 <= self.nms_threshold <= 1.0):
            raise ConfigError(f"nms_threshold must be in [0, 1], got {self.nms_threshold}")
        if self.subset not in ("all", "actionless"):
            raise ConfigError(f"subset must be 'all' or 'actionless', got {self.subset!r}")


@dataclass
class MetricsReport:
    recall: dict[float, dict[int, float]]  # theta -> k -> percent
    mr_at_k: dict[int, float]
    mr_all: float
    query_count: int
    subset: str = "all"
    warnings: list[str] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "recall": {f"{t:g}": {str(k): v for k, v in row.items()} for t, row in self.recall.items()},
            "mr_at_k": {str(k): v for k, v in self.mr_at_k.items()},
            "mr_all": self.mr_all,
            "query_count": self.query_count,
            "subset": self.subset,
        }


def recall_at_k(
    ranked: dict[str, list[ScoredMoment]],
    ground_truth: dict[str, Interval],
    k: int,
    theta: float,
) -> float:
    """Percent of queries whose top-k predictions contain one with
    tIoU >= theta against the single ground truth."""
    if not ground_truth:
        raise UsageError("recall_at_k requires at least one query")
    hits = 0
    for qid, gt in ground_truth.items():
        preds = ranked.get(qid, [])
        for m in preds[:k]:
            if tiou(m.interval, gt) >= theta:
                hits += 1
                break
    return 100.0 * hits / len(ground_truth)


def mean_recall_k(recalls_by_theta: dict[float, float], thetas: tuple[float, ...]) -> float:
    """Arithmetic mean of R@K over the IoU threshold set."""
    missing = [t for t in thetas if t not in recalls_by_theta]
    if missing:
        raise UsageError(f"missing recall entries for thresholds {missing}")
    if not thetas:
        raise UsageError("empty threshold set")
    return sum(recalls_by_theta[t] for t in thetas) / len(thetas)


def mean_recall_all(mr_at_k: dict[int, float]) -> float:
    """Mean of mR@K over the K values present (absent columns excluded)."""
    if not mr_at_k:
        raise UsageError("mean_recall_all needs at least one K column")
    return sum(mr_at_k.values()) / len(mr_at_k)


def evaluate(
    queries: list[QueryRecord],
    ranked: dict[str, list[ScoredMoment]],
    cfg: EvalConfig,
) -> MetricsReport:
    """Full (K, theta) recall grid plus mR@K and mR_all.

    `ranked` holds the final per-query prediction lists (already fused,
    sorted and suppressed). Queries without predictions count as misses.
    """
    if cfg.subset == "actionless":
        queries = [q for q in queries if q.actionless]
        if not queries:
            raise UsageError("actionless filter selected but the split has no flagged queries")
    if not queries:
        raise UsageError("evaluation requires at least one query")

    warnings = []
    for q in queries:
        if not ranked.get(q.id):
            msg = f"query {q.id} has no predictions; counted as a miss"
            warnings.append(msg)
            log.warning(msg)

    gt = {q.id: q.ground_truth for q in queries}
    recall: dict[float, dict[int, float]] = {}
    for theta in cfg.iou_thresholds:
        recall[theta] = {k: recall_at_k(ranked, gt, k, theta) for k in cfg.k_values}
    mr_at_k = {
        k: mean_recall_k({t: recall[t][k] for t in cfg.iou_thresholds}, cfg.iou_thresholds)
        for k in cfg.k_values
    }
    return MetricsReport(
        recall=recall,
        mr_at_k=mr_at_k,
        mr_all=mean_recall_all(mr_at_k),
        query_count=len(queries),
        subset=cfg.subset,
        warnings=warnings,
    )


def auroc(labels: list[bool], scores: list[float]) -> float:
    """Area under the ROC curve via the rank statistic, ties averaged."""
    if len(labels) != len(scores):
        raise UsageError("labels and scores must have equal length")
    n_pos = sum(1 for y in labels if y)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UsageError("AUROC needs both classes present")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    rank_sum = sum(r for r, y in zip(ranks, labels) if y)
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def write_metrics_json(path: str, report: MetricsReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report.to_doc(), sort_keys=True, indent=2) + "\n")


def write_metrics_csv(path: str, report: MetricsReport, cfg: EvalConfig) -> None:
    """Grid CSV: one row per IoU threshold, one column per K."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta," + ",".join(str(k) for k in cfg.k_values) + "\n")
        for theta in cfg.iou_thresholds:
            row = ",".join(f"{report.recall[theta][k]:.4f}" for k in cfg.k_values)
            fh.write(f"{theta:g},{row}\n")


def aggregate_recall_rows(doc: dict) -> list[tuple[str, float]]:
    """mR_all per named row of an {name -> mR@K} table document."""
    rows = doc.get("rows")
    if not rows:
        raise UsageError("aggregate document has no rows")
    out = []
    for row in rows:
        mr = {int(k): float(v) for k, v in row.get("mr_at_k", {}).items() if v is not None}
        out.append((row.get("name", "?"), mean_recall_all(mr)))
    return out
