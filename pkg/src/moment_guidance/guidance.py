"""The describable-window classifier.

A transformer encoder over projected multimodal window features with a
CLS read-out scoring how likely the window is to contain a queryable
moment. Supports a query-dependent mode (text tokens in the input) and a
query-agnostic mode (video/audio only, one pass per video).
"""

from __future__ import annotations

import json
import logging
import math
import os
import struct
import threading
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import GroundingDataset, LabeledWindow, QueryRecord, VideoRecord, slice_rows
from .errors import ConfigError, DataError, FormatError, NumericError
from .nn import AdamW, FeedForward, LayerNorm, Linear, MultiHeadAttention, Parameter, dropout
from .rng import Rng
from .temporal import Window

log = logging.getLogger(__name__)

MODE_AGNOSTIC = "agnostic"
MODE_DEPENDENT = "dependent"


@dataclass
class ModalityMask:
    visual: bool = True
    audio: bool = True
    text: bool = True


@dataclass
class GuidanceConfig:
    hidden_dim: int = 256
    layers: int = 6
    heads: int = 8
    ffn_dim: int | None = None
    dropout: float = 0.1
    window_len: int = 64
    mode: str = MODE_DEPENDENT
    modalities: ModalityMask = field(default_factory=ModalityMask)

    def __post_init__(self):
        if self.ffn_dim is None:
            self.ffn_dim = 4 * self.hidden_dim
        self.validate()

    @property
    def stride(self) -> int:
        return self.window_len // 2

    def validate(self) -> None:
        if self.mode not in (MODE_AGNOSTIC, MODE_DEPENDENT):
            raise ConfigError(f"mode must be '{MODE_AGNOSTIC}' or '{MODE_DEPENDENT}', got {self.mode!r}")
        if self.mode == MODE_DEPENDENT and not self.modalities.text:
            raise ConfigError("query-dependent mode requires the text modality")
        if self.mode == MODE_AGNOSTIC and self.modalities.text:
            raise ConfigError("query-agnostic mode must disable the text modality")
        if not (self.modalities.visual or self.modalities.audio):
            raise ConfigError("at least one of visual/audio must be enabled")
        if self.hidden_dim % self.heads != 0:
            raise ConfigError(f"hidden_dim {self.hidden_dim} not divisible by {self.heads} heads")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.window_len < 1 or self.layers < 1:
            raise ConfigError("window_len and layers must be >= 1")


@dataclass
class TrainConfig:
    epochs: int = 100
    lr: float = 1e-4
    weight_decay: float = 1e-4
    batch_size: int = 512
    seed: int = 0
    eval_every: int = 10
    positive_weight: float = 1.0

    def validate(self) -> None:
        if min(self.epochs, self.batch_size, self.eval_every) < 1:
            raise ConfigError("epochs, batch_size and eval_every must be >= 1")
        if self.lr <= 0 or self.weight_decay < 0 or self.positive_weight <= 0:
            raise ConfigError("lr and positive_weight must be > 0, weight_decay >= 0")


def sinusoidal_table(length: int, dim: int, dtype=np.float32) -> np.ndarray:
    """Fixed sin/cos positional table with base 10000 over positions 0..length-1."""
    position = np.arange(length, dtype=np.float64)[:, None]
    div = np.power(10000.0, np.arange(0, dim, 2, dtype=np.float64) / dim)
    angles = position / div
    table = np.zeros((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles[:, : dim // 2])
    return table.astype(dtype)


def stable_sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def bce_with_logits(logit: float, label: float) -> tuple[float, float]:
    """Numerically stable BCE from the logit; gradient is sigmoid(z) - y."""
    # softplus(z) - y*z, with softplus(z) = max(z, 0) + log1p(exp(-|z|))
    loss = max(logit, 0.0) + math.log1p(math.exp(-abs(logit))) - label * logit
    return loss, stable_sigmoid(logit) - label


def bce_with_logits_array(logits: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized stable BCE; returns (losses, d_logits), both float64."""
    z = logits.astype(np.float64)
    y = labels.astype(np.float64)
    losses = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y * z
    sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    return losses, sig - y


class _EncoderLayer:
    """Post-norm transformer encoder block: attention, then FFN."""

    def __init__(self, name: str, dim: int, heads: int, ffn_dim: int, dtype):
        self.attn = MultiHeadAttention(f"{name}.attn", dim, heads, dtype)
        self.norm_attn = LayerNorm(f"{name}.norm_attn", dim, dtype=dtype)
        self.ffn = FeedForward(f"{name}.ffn", dim, ffn_dim, dtype)
        self.norm_ffn = LayerNorm(f"{name}.norm_ffn", dim, dtype=dtype)

    def init(self, rng: Rng, std: float):
        self.attn.init(rng, std)
        self.ffn.init(rng, std)
        return self

    def parameters(self):
        return (
            self.attn.parameters()
            + self.norm_attn.parameters()
            + self.ffn.parameters()
            + self.norm_ffn.parameters()
        )

    def forward(self, x: np.ndarray):
        a, a_cache = self.attn.forward(x)
        n1, n1_cache = self.norm_attn.forward(x + a)
        f, f_cache = self.ffn.forward(n1)
        y, n2_cache = self.norm_ffn.forward(n1 + f)
        return y, (a_cache, n1_cache, f_cache, n2_cache)

    def backward(self, d_y: np.ndarray, cache):
        a_cache, n1_cache, f_cache, n2_cache = cache
        d_r2 = self.norm_ffn.backward(d_y, n2_cache)
        d_n1 = d_r2 + self.ffn.backward(d_r2, f_cache)
        d_r1 = self.norm_attn.backward(d_n1, n1_cache)
        return d_r1 + self.attn.backward(d_r1, a_cache)


class _ModalityProjection:
    """Linear projection to the shared space, layer norm, dropout, position."""

    def __init__(self, name: str, in_dim: int, hidden_dim: int, dtype):
        self.linear = Linear(f"{name}.proj", in_dim, hidden_dim, dtype)
        self.norm = LayerNorm(f"{name}.norm", hidden_dim, dtype=dtype)

    def init(self, rng: Rng, std: float):
        self.linear.init(rng, std)
        return self

    def parameters(self):
        return self.linear.parameters() + self.norm.parameters()

    def forward(self, x: np.ndarray, pos: np.ndarray, p: float, rng, training: bool):
        if x.shape[-2] != pos.shape[0]:
            raise ConfigError(f"expected {pos.shape[0]} rows, got {x.shape[-2]}")
        z, lin_cache = self.linear.forward(x)
        n, norm_cache = self.norm.forward(z)
        d, mask = dropout(n, p, rng, training)
        return d + pos, (lin_cache, norm_cache, mask)

    def backward(self, d_y: np.ndarray, cache):
        lin_cache, norm_cache, mask = cache
        d_n = self.norm.backward(d_y * mask, norm_cache)
        return self.linear.backward(d_n, lin_cache)


class GuidanceModel:
    """All learnable state of the describable-window classifier."""

    def __init__(
        self,
        config: GuidanceConfig,
        visual_dim: int = 512,
        audio_dim: int = 512,
        text_dim: int = 512,
        token_len: int = 4,
        seed: int = 0,
        dtype=np.float32,
    ):
        config.validate()
        self.config = config
        self.visual_dim = visual_dim
        self.audio_dim = audio_dim
        self.text_dim = text_dim
        self.token_len = token_len
        self.seed = seed
        self.dtype = dtype
        d = config.hidden_dim
        m = config.modalities

        rng = Rng(seed)
        std = 0.02
        self.proj_visual = (
            _ModalityProjection("visual", visual_dim, d, dtype).init(rng, std) if m.visual else None
        )
        self.proj_audio = (
            _ModalityProjection("audio", audio_dim, d, dtype).init(rng, std) if m.audio else None
        )
        self.proj_text = (
            _ModalityProjection("text", text_dim, d, dtype).init(rng, std) if m.text else None
        )
        # Video positions are fixed sinusoids (never optimized); audio and
        # text positions are learnable tables.
        self.pos_visual = sinusoidal_table(config.window_len, d, dtype) if m.visual else None
        self.pos_audio = (
            Parameter("pos_audio", rng.normal_matrix(config.window_len, d, std).astype(dtype))
            if m.audio
            else None
        )
        self.pos_text = (
            Parameter("pos_text", rng.normal_matrix(token_len, d, std).astype(dtype))
            if m.text
            else None
        )
        self.cls = Parameter("cls", rng.normal_matrix(1, d, std).astype(dtype))
        self.encoder = [
            _EncoderLayer(f"layer{i}", d, config.heads, config.ffn_dim, dtype).init(rng, std)
            for i in range(config.layers)
        ]
        self.head_hidden = Linear("head.hidden", d, d, dtype).init(rng, std)
        self.head_out = Linear("head.out", d, 1, dtype).init(rng, std)

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        for proj in (self.proj_visual, self.proj_audio, self.proj_text):
            if proj is not None:
                params.extend(proj.parameters())
        for pos in (self.pos_audio, self.pos_text):
            if pos is not None:
                params.append(pos)
        params.append(self.cls)
        for layer in self.encoder:
            params.extend(layer.parameters())
        params.extend(self.head_hidden.parameters())
        params.extend(self.head_out.parameters())
        return params

    def param_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def sequence_length(self) -> int:
        m = self.config.modalities
        length = 1
        if m.visual:
            length += self.config.window_len
        if m.audio:
            length += self.config.window_len
        if m.text:
            length += self.token_len
        return length

    def _check_modalities(self, visual, audio, text) -> None:
        m = self.config.modalities
        for name, enabled, value in (
            ("visual", m.visual, visual),
            ("audio", m.audio, audio),
            ("text", m.text, text),
        ):
            if enabled and value is None:
                raise ConfigError(f"enabled modality '{name}' missing from input")
            if not enabled and value is not None:
                raise ConfigError(f"disabled modality '{name}' was supplied")

    def build_input(
        self,
        visual: np.ndarray | None = None,
        audio: np.ndarray | None = None,
        text: np.ndarray | None = None,
        training: bool = False,
        rng: Rng | None = None,
    ):
        """Project enabled modalities and stack [CLS; video; audio; text].

        Inputs are either single windows (rows, dim) or stacked batches
        (batch, rows, dim); all enabled modalities must agree.
        """
        self._check_modalities(visual, audio, text)
        supplied = [v for v in (visual, audio, text) if v is not None]
        ndims = {v.ndim for v in supplied}
        if len(ndims) != 1 or ndims - {2, 3}:
            raise ConfigError(f"modality inputs must all be 2-D or all 3-D, got {ndims}")
        batched = supplied[0].ndim == 3
        if batched:
            sizes = {v.shape[0] for v in supplied}
            if len(sizes) != 1:
                raise ConfigError(f"modality batch sizes disagree: {sizes}")
            batch = supplied[0].shape[0]
            parts = [np.broadcast_to(self.cls.value, (batch, 1, self.config.hidden_dim))]
        else:
            parts = [self.cls.value]
        caches = []
        p = self.config.dropout
        for proj, pos, value, name in (
            (self.proj_visual, self.pos_visual, visual, "visual"),
            (self.proj_audio, self.pos_audio, audio, "audio"),
            (self.proj_text, self.pos_text, text, "text"),
        ):
            if proj is None:
                continue
            pos_value = pos if isinstance(pos, np.ndarray) else pos.value
            out, cache = proj.forward(value.astype(self.dtype, copy=False), pos_value, p, rng, training)
            parts.append(out)
            caches.append((name, proj, pos, out.shape[-2], cache))
        return np.concatenate(parts, axis=-2), caches

    def _backward_input(self, d_in: np.ndarray, input_caches) -> dict[str, np.ndarray]:
        d_cls = d_in[..., 0:1, :]
        self.cls.grad += d_cls.sum(axis=0) if d_cls.ndim == 3 else d_cls
        grads: dict[str, np.ndarray] = {}
        offset = 1
        for name, proj, pos, length, cache in input_caches:
            d_rows = d_in[..., offset : offset + length, :]
            if isinstance(pos, Parameter):
                pos.grad += d_rows.sum(axis=0) if d_rows.ndim == 3 else d_rows
            grads[name] = proj.backward(d_rows, cache)
            offset += length
        return grads

    def forward(
        self,
        visual: np.ndarray | None = None,
        audio: np.ndarray | None = None,
        text: np.ndarray | None = None,
        training: bool = False,
        rng: Rng | None = None,
    ):
        """Full pass to the pre-sigmoid logit.

        Returns (logit, cache) for a single window, or (logits[batch],
        cache) for a stacked batch.
        """
        x, input_caches = self.build_input(visual, audio, text, training, rng)
        batched = x.ndim == 3
        layer_caches = []
        for layer in self.encoder:
            x, cache = layer.forward(x)
            layer_caches.append(cache)
        summary = x[:, 0, :] if batched else x[0:1]
        h, hidden_cache = self.head_hidden.forward(summary)
        h_act = np.maximum(h, 0.0)
        out, out_cache = self.head_out.forward(h_act)
        cache = (input_caches, layer_caches, hidden_cache, h, out_cache, x.shape, batched)
        if batched:
            logits = out[:, 0].astype(np.float64)
            if not np.isfinite(logits).all():
                raise NumericError("non-finite logit in guidance forward")
            return logits, cache
        logit = float(out[0, 0])
        if not math.isfinite(logit):
            raise NumericError("non-finite logit in guidance forward")
        return logit, cache

    def backward(self, d_logit, cache) -> dict[str, np.ndarray]:
        """Accumulate parameter gradients; returns input-feature gradients.

        d_logit is a float for single-window caches or an array of
        per-window values for batched caches.
        """
        input_caches, layer_caches, hidden_cache, h, out_cache, shape, batched = cache
        if batched:
            d_out = np.asarray(d_logit, dtype=self.dtype)[:, None]
        else:
            d_out = np.array([[d_logit]], dtype=self.dtype)
        d_h_act = self.head_out.backward(d_out, out_cache)
        d_h = d_h_act * (h > 0.0)
        d_summary = self.head_hidden.backward(d_h, hidden_cache)
        d_x = np.zeros(shape, dtype=self.dtype)
        if batched:
            d_x[:, 0, :] = d_summary
        else:
            d_x[0:1] = d_summary
        for layer, lcache in zip(reversed(self.encoder), reversed(layer_caches)):
            d_x = layer.backward(d_x, lcache)
        return self._backward_input(d_x, input_caches)

    def predict(
        self,
        visual: np.ndarray | None = None,
        audio: np.ndarray | None = None,
        text: np.ndarray | None = None,
    ) -> float:
        """Inference-mode probability, strictly inside (0, 1)."""
        logit, _ = self.forward(visual, audio, text, training=False)
        p = stable_sigmoid(logit)
        return min(max(p, 1e-12), 1.0 - 1e-12)

    def predict_batch(
        self,
        visual: np.ndarray | None = None,
        audio: np.ndarray | None = None,
        text: np.ndarray | None = None,
    ) -> np.ndarray:
        """Inference-mode probabilities for a stacked batch of windows."""
        logits, _ = self.forward(visual, audio, text, training=False)
        probs = np.where(
            logits >= 0,
            1.0 / (1.0 + np.exp(-np.abs(logits))),
            np.exp(-np.abs(logits)) / (1.0 + np.exp(-np.abs(logits))),
        )
        return np.clip(probs, 1e-12, 1.0 - 1e-12)


def prepare_tokens(tokens: np.ndarray, token_len: int) -> np.ndarray:
    """Pad with zero rows or truncate so the matrix has exactly token_len rows."""
    if tokens.shape[0] == token_len:
        return tokens
    if tokens.shape[0] > token_len:
        return tokens[:token_len]
    padded = np.zeros((token_len, tokens.shape[1]), dtype=tokens.dtype)
    padded[: tokens.shape[0]] = tokens
    return padded


def assemble_window_inputs(
    model: GuidanceModel,
    dataset: GroundingDataset,
    video: VideoRecord,
    window: Window,
    query: QueryRecord | None,
) -> dict[str, np.ndarray]:
    """Slice (and zero-pad) the feature rows one window needs."""
    m = model.config.modalities
    inputs: dict[str, np.ndarray] = {}
    if m.visual:
        inputs["visual"] = slice_rows(dataset.visual(video.id), window.frame_start, window.frame_len)
    if m.audio:
        if video.audio_features is None:
            raise DataError(f"video {video.id}: audio modality enabled but no audio features")
        inputs["audio"] = slice_rows(dataset.audio(video.id), window.frame_start, window.frame_len)
    if m.text:
        if query is None:
            raise ConfigError("query-dependent scoring requires a query")
        inputs["text"] = prepare_tokens(dataset.tokens(query), model.token_len)
    return inputs


class PassCounter:
    """Thread-safe forward-pass tally used by the cost benchmark."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def add(self, n: int) -> None:
        with self._lock:
            self.count += n


def score_windows(
    model: GuidanceModel,
    dataset: GroundingDataset,
    video: VideoRecord,
    query: QueryRecord | None,
    windows: list[Window],
    counter: PassCounter | None = None,
) -> list[tuple[int, float]]:
    """One plausibility score per window, dropout disabled, deterministic.

    Windows are evaluated in ascending-index order internally, so the
    (ordinal -> score) map does not depend on the caller's ordering.
    """
    if model.config.mode == MODE_DEPENDENT and query is None:
        raise ConfigError("query-dependent model needs a query to score windows")
    if model.config.mode == MODE_AGNOSTIC and query is not None:
        raise ConfigError("query-agnostic model does not take a query")
    if not windows:
        return []
    ordered = sorted(windows, key=lambda w: w.index)
    stacks: dict[str, list[np.ndarray]] = {}
    for w in ordered:
        for name, arr in assemble_window_inputs(model, dataset, video, w, query).items():
            stacks.setdefault(name, []).append(arr)
    batch = {name: np.stack(arrs) for name, arrs in stacks.items()}
    probs = model.predict_batch(**batch)
    by_index = {w.index: float(p) for w, p in zip(ordered, probs)}
    if counter is not None:
        counter.add(len(windows))
    return [(w.index, by_index[w.index]) for w in windows]


def train_guidance(
    dataset: GroundingDataset,
    labeled: list[LabeledWindow],
    gcfg: GuidanceConfig,
    tcfg: TrainConfig,
    val_labeled: list[LabeledWindow] | None = None,
) -> tuple[GuidanceModel, list[float]]:
    """Mini-batch AdamW training over shuffled labeled windows.

    Returns the trained model and the per-epoch mean training loss.
    """
    tcfg.validate()
    n_pos = sum(1 for lw in labeled if lw.label)
    if n_pos == 0 or n_pos == len(labeled):
        raise ConfigError(
            f"training needs both classes, got {n_pos} positives / {len(labeled)} windows"
        )

    master = Rng(tcfg.seed)
    model = GuidanceModel(
        gcfg,
        visual_dim=dataset.visual_dim,
        audio_dim=dataset.audio_dim,
        text_dim=dataset.text_dim,
        token_len=dataset.token_len,
        seed=master.child(0).seed,
    )
    shuffle_rng = master.child(1)
    dropout_rng = master.child(2)
    optimizer = AdamW(model.parameters(), lr=tcfg.lr, weight_decay=tcfg.weight_decay)
    query_map = {q.id: q for q in dataset.queries}

    losses: list[float] = []
    for epoch in range(tcfg.epochs):
        order = shuffle_rng.permutation(len(labeled))
        total = 0.0
        for batch_start in range(0, len(order), tcfg.batch_size):
            batch = order[batch_start : batch_start + tcfg.batch_size]
            optimizer.zero_grad()
            inv = 1.0 / len(batch)
            for idx in batch:
                lw = labeled[int(idx)]
                video = dataset.videos[lw.video_id]
                query = query_map[lw.query_id] if lw.query_id is not None else None
                inputs = assemble_window_inputs(model, dataset, video, lw.window, query)
                logit, cache = model.forward(**inputs, training=True, rng=dropout_rng)
                loss, d_logit = bce_with_logits(logit, 1.0 if lw.label else 0.0)
                if lw.label and tcfg.positive_weight != 1.0:
                    loss *= tcfg.positive_weight
                    d_logit *= tcfg.positive_weight
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch} batch {batch_start // tcfg.batch_size}"
                    )
                total += loss
                model.backward(d_logit * inv, cache)
            optimizer.step()
        losses.append(total / len(labeled))
        if val_labeled and (epoch + 1) % tcfg.eval_every == 0:
            log.info("epoch %d: train loss %.4f", epoch + 1, losses[-1])
    return model, losses


def write_loss_curve(path: str, losses: list[float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,mean_loss\n")
        for i, loss in enumerate(losses, start=1):
            fh.write(f"{i},{loss:.6f}\n")


_MODEL_MAGIC = "GMDL1"


def _as_2d(value: np.ndarray) -> np.ndarray:
    return value if value.ndim == 2 else value.reshape(1, -1)


def save_model(model: GuidanceModel, path: str) -> None:
    """Single-file serialization: JSON header line, then raw float32 tensors."""
    params = model.parameters()
    header = {
        "format": _MODEL_MAGIC,
        "config": {
            "hidden_dim": model.config.hidden_dim,
            "layers": model.config.layers,
            "heads": model.config.heads,
            "ffn_dim": model.config.ffn_dim,
            "dropout": model.config.dropout,
            "window_len": model.config.window_len,
            "mode": model.config.mode,
            "modalities": asdict(model.config.modalities),
        },
        "dims": {
            "visual": model.visual_dim,
            "audio": model.audio_dim,
            "text": model.text_dim,
            "token_len": model.token_len,
        },
        "seed": model.seed,
        "tensors": [
            {"name": p.name, "rows": _as_2d(p.value).shape[0], "cols": _as_2d(p.value).shape[1]}
            for p in params
        ],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for p in params:
            mat = _as_2d(p.value)
            fh.write(struct.pack("<4sII", b"EMB1", mat.shape[0], mat.shape[1]))
            fh.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())


def load_model(path: str) -> GuidanceModel:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError:
            raise FormatError(f"{path}: bad model header")
        if header.get("format") != _MODEL_MAGIC:
            raise FormatError(f"{path}: unknown model format {header.get('format')!r}")
        cfg_doc = header["config"]
        config = GuidanceConfig(
            hidden_dim=cfg_doc["hidden_dim"],
            layers=cfg_doc["layers"],
            heads=cfg_doc["heads"],
            ffn_dim=cfg_doc["ffn_dim"],
            dropout=cfg_doc["dropout"],
            window_len=cfg_doc["window_len"],
            mode=cfg_doc["mode"],
            modalities=ModalityMask(**cfg_doc["modalities"]),
        )
        dims = header["dims"]
        model = GuidanceModel(
            config,
            visual_dim=dims["visual"],
            audio_dim=dims["audio"],
            text_dim=dims["text"],
            token_len=dims["token_len"],
            seed=header.get("seed", 0),
        )
        by_name = {p.name: p for p in model.parameters()}
        for entry in header["tensors"]:
            raw_header = fh.read(12)
            if len(raw_header) < 12:
                raise FormatError(f"{path}: truncated tensor block for {entry['name']}")
            magic, rows, cols = struct.unpack("<4sII", raw_header)
            if magic != b"EMB1" or rows != entry["rows"] or cols != entry["cols"]:
                raise FormatError(f"{path}: tensor header mismatch for {entry['name']}")
            payload = fh.read(4 * rows * cols)
            if len(payload) != 4 * rows * cols:
                raise FormatError(f"{path}: truncated tensor payload for {entry['name']}")
            param = by_name.get(entry["name"])
            if param is None:
                raise FormatError(f"{path}: unknown tensor {entry['name']}")
            values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
            param.value[:] = values.reshape(param.value.shape)
    return model
