"""Guidance-score re-ranking for localizing language queries in long videos.

Two stages: a trainable multimodal classifier scores fixed-length temporal
windows by how likely they are to contain a queryable moment, and those
scores multiplicatively re-rank a base grounding model's predictions
before NMS and Recall@K-IoU evaluation.
"""

from .data import (
    GroundingDataset,
    LabeledWindow,
    QueryRecord,
    SyntheticConfig,
    VideoRecord,
    generate_synthetic,
    load_dataset,
    read_embeddings,
    write_embeddings,
)
from .evaluation import EvalConfig, MetricsReport, auroc, evaluate, mean_recall_all, mean_recall_k, recall_at_k
from .fusion import GuidanceScores, fuse_scores, rerank_and_nms
from .grounding import (
    GroundingScorer,
    LongformConfig,
    NoisyOracleConfig,
    NoisyOracleScorer,
    SimilarityScorer,
    run_longform,
)
from .guidance import (
    GuidanceConfig,
    GuidanceModel,
    ModalityMask,
    TrainConfig,
    load_model,
    save_model,
    score_windows,
    train_guidance,
)
from .rng import Rng
from .temporal import Interval, ScoredMoment, Window, assign_best_window, generate_windows, nms, tiou

__version__ = "0.1.0"
