"""Dataset model, on-disk formats, window labeling, and synthetic data.

On-disk layout: {root}/annotations.json plus {root}/features/*.emb, where
.emb files use the EMB1 format: magic "EMB1", u32-LE rows, u32-LE cols,
then rows*cols float32-LE values in row-major order.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, FormatError
from .rng import Rng
from .temporal import Interval, Window, tiou

_MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")


def write_embeddings(path: str, matrix: np.ndarray) -> None:
    """Write a 2-D float32 matrix in EMB1 format."""
    if matrix.ndim != 2:
        raise ConfigError(f"embeddings must be 2-D, got shape {matrix.shape}")
    data = np.ascontiguousarray(matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, matrix.shape[0], matrix.shape[1]))
        fh.write(data.tobytes())


def read_embeddings(path: str) -> np.ndarray:
    """Read an EMB1 file into a float32 matrix."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, rows, cols = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        payload = fh.read(4 * rows * cols + 1)
    if len(payload) != 4 * rows * cols:
        raise FormatError(
            f"{path}: payload holds {len(payload) // 4} floats, header declares {rows * cols}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()


def slice_rows(matrix: np.ndarray, start: int, count: int) -> np.ndarray:
    """Rows [start, start+count); rows past the end come back zero-padded."""
    rows = matrix.shape[0]
    end = min(start + count, rows)
    chunk = matrix[start:end]
    if chunk.shape[0] == count:
        return chunk
    padded = np.zeros((count, matrix.shape[1]), dtype=matrix.dtype)
    padded[: chunk.shape[0]] = chunk
    return padded


@dataclass
class VideoRecord:
    id: str
    fps: float
    num_frames: int
    visual_features: str
    audio_features: str | None = None

    @property
    def duration_s(self) -> float:
        return self.num_frames / self.fps


@dataclass
class QueryRecord:
    id: str
    video_id: str
    tokens: str
    ground_truth: Interval
    actionless: bool = False
    split: str = "train"


@dataclass
class LabeledWindow:
    video_id: str
    window: Window
    label: bool
    query_id: str | None = None


@dataclass
class GroundingDataset:
    root: str
    visual_dim: int = 512
    audio_dim: int = 512
    text_dim: int = 512
    token_len: int = 4
    videos: dict[str, VideoRecord] = field(default_factory=dict)
    queries: list[QueryRecord] = field(default_factory=list)

    def __post_init__(self):
        self._cache: dict[str, np.ndarray] = {}

    def _path(self, rel: str) -> str:
        return os.path.join(self.root, rel)

    def _load(self, rel: str) -> np.ndarray:
        mat = self._cache.get(rel)
        if mat is None:
            mat = read_embeddings(self._path(rel))
            self._cache[rel] = mat
        return mat

    def visual(self, video_id: str) -> np.ndarray:
        return self._load(self.videos[video_id].visual_features)

    def audio(self, video_id: str) -> np.ndarray:
        rel = self.videos[video_id].audio_features
        if rel is None:
            raise DataError(f"video {video_id} has no audio features")
        return self._load(rel)

    def tokens(self, query: QueryRecord) -> np.ndarray:
        return self._load(query.tokens)

    def queries_for_split(self, split: str) -> list[QueryRecord]:
        return [q for q in self.queries if q.split == split]

    def videos_for_split(self, split: str) -> list[VideoRecord]:
        ids = sorted({q.video_id for q in self.queries if q.split == split})
        return [self.videos[v] for v in ids]

    def moments_by_video(self, splits: tuple[str, ...] | None = None) -> dict[str, list[Interval]]:
        out: dict[str, list[Interval]] = {v: [] for v in self.videos}
        for q in self.queries:
            if splits is None or q.split in splits:
                out[q.video_id].append(q.ground_truth)
        return out


def label_windows_query_dependent(
    windows: list[Window], ground_truth: Interval, video_id: str, query_id: str
) -> list[LabeledWindow]:
    """Positive iff the window overlaps this query's moment (tIoU > 0)."""
    return [
        LabeledWindow(video_id, w, tiou(w.interval, ground_truth) > 0.0, query_id)
        for w in windows
    ]


def label_windows_query_agnostic(
    windows: list[Window], moments: list[Interval], video_id: str
) -> list[LabeledWindow]:
    """Positive iff the window overlaps any moment of the video."""
    return [
        LabeledWindow(video_id, w, any(tiou(w.interval, m) > 0.0 for m in moments))
        for w in windows
    ]


def make_shortform_setup(
    video: VideoRecord, moments: list[Interval], window_len_s: float
) -> list[tuple[Interval, Interval]]:
    """Split a video into consecutive clips and pair each with the moment
    of maximal raw overlap; clips overlapping nothing are dropped.

    Ties go to the earliest-starting moment, then input order.
    """
    if window_len_s <= 0:
        raise ConfigError(f"clip length must be positive, got {window_len_s}")
    duration = video.duration_s
    out = []
    start = 0.0
    while start < duration:
        clip = Interval(start, min(start + window_len_s, duration))
        best = None
        best_overlap = 0.0
        for m in moments:
            overlap = min(clip.end_s, m.end_s) - max(clip.start_s, m.start_s)
            if overlap > best_overlap or (
                overlap == best_overlap and overlap > 0.0 and best is not None and m.start_s < best.start_s
            ):
                best = m
                best_overlap = overlap
        if best is not None and best_overlap > 0.0:
            out.append((clip, best))
        start += window_len_s
    return out


def _canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_annotations(root: str, doc: dict) -> None:
    with open(os.path.join(root, "annotations.json"), "w", encoding="utf-8") as fh:
        fh.write(_canonical_json(doc))


def dataset_to_doc(ds: GroundingDataset) -> dict:
    """Canonical annotation document for a dataset (round-trips losslessly)."""
    return {
        "dims": {
            "visual": ds.visual_dim,
            "audio": ds.audio_dim,
            "text": ds.text_dim,
            "token_len": ds.token_len,
        },
        "videos": [
            {
                "id": v.id,
                "fps": v.fps,
                "num_frames": v.num_frames,
                "visual": v.visual_features,
                "audio": v.audio_features,
            }
            for v in sorted(ds.videos.values(), key=lambda v: v.id)
        ],
        "queries": [
            {
                "id": q.id,
                "video_id": q.video_id,
                "tokens": q.tokens,
                "start_s": q.ground_truth.start_s,
                "end_s": q.ground_truth.end_s,
                "actionless": q.actionless,
                "split": q.split,
            }
            for q in ds.queries
        ],
    }


def load_dataset(root: str, check_features: bool = True) -> GroundingDataset:
    """Load and validate a dataset from {root}/annotations.json."""
    path = os.path.join(root, "annotations.json")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no annotations.json under {root}")
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})")

    dims = doc.get("dims", {})
    for key in ("visual", "audio", "text", "token_len"):
        if key not in dims:
            raise FormatError(f"{path}: dims.{key} missing")
    ds = GroundingDataset(
        root=root,
        visual_dim=dims["visual"],
        audio_dim=dims["audio"],
        text_dim=dims["text"],
        token_len=dims["token_len"],
    )
    if ds.token_len < 1:
        raise FormatError(f"{path}: dims.token_len must be >= 1")

    for v in doc.get("videos", []):
        rec = VideoRecord(
            id=v["id"],
            fps=v.get("fps", 5.0),
            num_frames=v["num_frames"],
            visual_features=v["visual"],
            audio_features=v.get("audio"),
        )
        if rec.fps <= 0 or rec.num_frames < 0:
            raise FormatError(f"video {rec.id}: bad fps/num_frames")
        ds.videos[rec.id] = rec

    for q in doc.get("queries", []):
        if q["video_id"] not in ds.videos:
            raise DataError(f"query {q['id']}: unknown video_id {q['video_id']}")
        if not q["end_s"] > q["start_s"]:
            raise FormatError(f"query {q['id']}: requires end_s > start_s")
        video = ds.videos[q["video_id"]]
        if q["start_s"] < 0 or q["end_s"] > video.duration_s + 1e-9:
            raise FormatError(f"query {q['id']}: ground truth outside [0, video duration]")
        ds.queries.append(
            QueryRecord(
                id=q["id"],
                video_id=q["video_id"],
                tokens=q["tokens"],
                ground_truth=Interval(q["start_s"], q["end_s"]),
                actionless=bool(q.get("actionless", False)),
                split=q.get("split", "train"),
            )
        )

    if check_features:
        for v in ds.videos.values():
            _check_shape(ds, v.visual_features, v.num_frames, ds.visual_dim, f"video {v.id} visual")
            if v.audio_features is not None:
                _check_shape(ds, v.audio_features, v.num_frames, ds.audio_dim, f"video {v.id} audio")
        for q in ds.queries:
            _check_shape(ds, q.tokens, None, ds.text_dim, f"query {q.id} tokens")
    return ds


def _check_shape(ds: GroundingDataset, rel: str, rows: int | None, cols: int, what: str) -> None:
    path = os.path.join(ds.root, rel)
    try:
        with open(path, "rb") as fh:
            header = fh.read(_HEADER.size)
    except FileNotFoundError:
        raise DataError(f"{what}: feature file {rel} missing")
    if len(header) < _HEADER.size:
        raise FormatError(f"{what}: {rel} truncated header")
    magic, file_rows, file_cols = _HEADER.unpack(header)
    if magic != _MAGIC:
        raise FormatError(f"{what}: {rel} bad magic")
    if rows is not None and file_rows != rows:
        raise FormatError(f"{what}: {rel} declares {file_rows} rows, expected {rows}")
    if file_rows < 1:
        raise FormatError(f"{what}: {rel} has no rows")
    if file_cols != cols:
        raise FormatError(f"{what}: {rel} declares {file_cols} cols, expected {cols}")


@dataclass
class SyntheticConfig:
    """Planted-signal dataset: each moment carries a random unit signature
    mixed into the features, and its query tokens encode the same signature."""

    num_videos: int = 20
    frames_per_video: int = 512
    moments_per_video: int = 3
    visual_dim: int = 512
    audio_dim: int = 512
    text_dim: int = 512
    token_len: int = 4
    signature_dim: int = 8
    signal_strength: float = 2.0
    noise_scale: float = 1.0
    fps: float = 5.0
    min_moment_frames: int = 25
    max_moment_frames: int = 75
    actionless_fraction: float = 0.25
    val_videos: int = 4
    test_videos: int = 4
    seed: int = 0

    def validate(self) -> None:
        if self.signal_strength < 0 or self.noise_scale <= 0:
            raise ConfigError("signal_strength must be >= 0 and noise_scale > 0")
        if self.num_videos < 1 or self.frames_per_video < 1:
            raise ConfigError("num_videos and frames_per_video must be >= 1")
        if self.val_videos + self.test_videos >= self.num_videos:
            raise ConfigError("val + test videos must leave at least one training video")
        if not (self.min_moment_frames <= self.max_moment_frames <= self.frames_per_video):
            raise ConfigError("moment length bounds out of range")


def _place_moments(rng: Rng, cfg: SyntheticConfig) -> list[tuple[int, int]]:
    """Non-overlapping (start, end) frame spans, sorted by start."""
    spans: list[tuple[int, int]] = []
    for _ in range(cfg.moments_per_video):
        for _attempt in range(200):
            length = cfg.min_moment_frames + rng.randint(
                cfg.max_moment_frames - cfg.min_moment_frames + 1
            )
            start = rng.randint(cfg.frames_per_video - length + 1)
            end = start + length
            if all(end + 4 <= s or e + 4 <= start for s, e in spans):
                spans.append((start, end))
                break
        else:
            raise ConfigError("could not place non-overlapping moments; reduce count or length")
    return sorted(spans)


def generate_synthetic(cfg: SyntheticConfig, out_dir: str) -> GroundingDataset:
    """Write a synthetic dataset under out_dir and return it loaded.

    Deterministic: the same config always produces byte-identical files.
    """
    cfg.validate()
    rng = Rng(cfg.seed)
    features_dir = os.path.join(out_dir, "features")
    try:
        os.makedirs(features_dir, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output dir {out_dir}: {exc}")

    # Fixed per-dataset mixing maps; visual and text share one map when the
    # dims agree so similarity between query and frame vectors is meaningful.
    mix_visual = rng.normal_matrix(cfg.visual_dim, cfg.signature_dim, std=1.0 / np.sqrt(cfg.visual_dim))
    mix_audio = rng.normal_matrix(cfg.audio_dim, cfg.signature_dim, std=1.0 / np.sqrt(cfg.audio_dim))
    if cfg.text_dim == cfg.visual_dim:
        mix_text = mix_visual
    else:
        mix_text = rng.normal_matrix(cfg.text_dim, cfg.signature_dim, std=1.0 / np.sqrt(cfg.text_dim))

    order = rng.permutation(cfg.num_videos)
    split_of = {}
    for rank, vid_idx in enumerate(order):
        if rank < cfg.test_videos:
            split_of[vid_idx] = "test"
        elif rank < cfg.test_videos + cfg.val_videos:
            split_of[vid_idx] = "val"
        else:
            split_of[vid_idx] = "train"

    videos = []
    queries = []
    for vid_idx in range(cfg.num_videos):
        video_id = f"v{vid_idx:03d}"
        visual = rng.normal_matrix(cfg.frames_per_video, cfg.visual_dim, std=cfg.noise_scale)
        audio = rng.normal_matrix(cfg.frames_per_video, cfg.audio_dim, std=cfg.noise_scale)
        spans = _place_moments(rng, cfg)
        for m_idx, (start, end) in enumerate(spans):
            signature = rng.normals(cfg.signature_dim)
            signature /= np.linalg.norm(signature)
            visual[start:end] += cfg.signal_strength * (mix_visual @ signature)
            audio[start:end] += cfg.signal_strength * (mix_audio @ signature)
            token_base = mix_text @ signature
            tokens = np.tile(token_base, (cfg.token_len, 1))
            tokens += rng.normal_matrix(cfg.token_len, cfg.text_dim, std=0.1)
            query_id = f"{video_id}_q{m_idx}"
            tokens_rel = os.path.join("features", f"{query_id}_tokens.emb")
            write_embeddings(os.path.join(out_dir, tokens_rel), tokens.astype(np.float32))
            queries.append(
                {
                    "id": query_id,
                    "video_id": video_id,
                    "tokens": tokens_rel,
                    "start_s": start / cfg.fps,
                    "end_s": end / cfg.fps,
                    "actionless": bool(rng.uniform() < cfg.actionless_fraction),
                    "split": split_of[vid_idx],
                }
            )
        visual_rel = os.path.join("features", f"{video_id}_visual.emb")
        audio_rel = os.path.join("features", f"{video_id}_audio.emb")
        write_embeddings(os.path.join(out_dir, visual_rel), visual.astype(np.float32))
        write_embeddings(os.path.join(out_dir, audio_rel), audio.astype(np.float32))
        videos.append(
            {
                "id": video_id,
                "fps": cfg.fps,
                "num_frames": cfg.frames_per_video,
                "visual": visual_rel,
                "audio": audio_rel,
            }
        )

    doc = {
        "dims": {
            "visual": cfg.visual_dim,
            "audio": cfg.audio_dim,
            "text": cfg.text_dim,
            "token_len": cfg.token_len,
        },
        "videos": videos,
        "queries": queries,
    }
    write_annotations(out_dir, doc)
    return load_dataset(out_dir)
