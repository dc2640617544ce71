"""Run configuration: a single JSON document validated as a whole.

Unknown keys are rejected with their dot paths; command-line --set
overrides are applied to the raw document before validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .data import SyntheticConfig
from .errors import ConfigError
from .evaluation import EvalConfig
from .grounding import LongformConfig
from .guidance import MODE_AGNOSTIC, MODE_DEPENDENT, GuidanceConfig, ModalityMask, TrainConfig

_TOP_KEYS = {
    "dataset_root",
    "out_dir",
    "seed",
    "split",
    "threads",
    "mode",
    "modalities",
    "guidance",
    "train",
    "longform",
    "eval",
    "scorer",
    "synthetic",
}
_MODALITY_KEYS = {"visual", "audio", "text"}
_GUIDANCE_KEYS = {"hidden_dim", "layers", "heads", "ffn_dim", "dropout", "window_len"}
_TRAIN_KEYS = {"epochs", "lr", "weight_decay", "batch_size", "seed", "eval_every", "positive_weight"}
_LONGFORM_KEYS = {"window_len", "stride", "max_moments"}
_EVAL_KEYS = {"k_values", "iou_thresholds", "nms_threshold", "subset", "predictions_file"}
_SCORER_KEYS = {"kind", "jitter_s", "distractors", "score_noise", "seed"}
_SYNTH_KEYS = {
    "num_videos",
    "frames_per_video",
    "moments_per_video",
    "visual_dim",
    "audio_dim",
    "text_dim",
    "token_len",
    "signature_dim",
    "signal_strength",
    "noise_scale",
    "fps",
    "min_moment_frames",
    "max_moment_frames",
    "actionless_fraction",
    "val_videos",
    "test_videos",
    "seed",
}


def _check_keys(doc: dict, allowed: set[str], prefix: str) -> None:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        dotted = ", ".join(f"{prefix}{k}" if prefix else k for k in unknown)
        raise ConfigError(f"unknown config keys: {dotted}")


@dataclass
class RunConfig:
    dataset_root: str
    out_dir: str
    seed: int = 0
    split: str = "test"
    threads: int = 1
    mode: str = MODE_DEPENDENT
    modalities: ModalityMask = field(default_factory=ModalityMask)
    guidance_doc: dict = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    longform: LongformConfig = field(default_factory=LongformConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    predictions_file: str = "predictions_fused.jsonl"
    scorer: dict = field(default_factory=lambda: {"kind": "similarity"})
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)

    def guidance_config(self) -> GuidanceConfig:
        return GuidanceConfig(mode=self.mode, modalities=self.modalities, **self.guidance_doc)


def parse_run_config(doc: dict) -> RunConfig:
    """Validate the whole document and build a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "")
    for req in ("dataset_root", "out_dir"):
        if req not in doc:
            raise ConfigError(f"run config missing required key {req!r}")

    seed = doc.get("seed", 0)
    mode = doc.get("mode", MODE_DEPENDENT)
    if mode not in (MODE_AGNOSTIC, MODE_DEPENDENT):
        raise ConfigError(f"mode must be '{MODE_AGNOSTIC}' or '{MODE_DEPENDENT}', got {mode!r}")

    modal_doc = doc.get("modalities")
    if modal_doc is None:
        modalities = ModalityMask(text=(mode == MODE_DEPENDENT))
    else:
        _check_keys(modal_doc, _MODALITY_KEYS, "modalities.")
        modalities = ModalityMask(**modal_doc)

    guidance_doc = dict(doc.get("guidance", {}))
    _check_keys(guidance_doc, _GUIDANCE_KEYS, "guidance.")

    train_doc = dict(doc.get("train", {}))
    _check_keys(train_doc, _TRAIN_KEYS, "train.")
    train_doc.setdefault("seed", seed)
    train = TrainConfig(**train_doc)
    train.validate()

    longform_doc = dict(doc.get("longform", {}))
    _check_keys(longform_doc, _LONGFORM_KEYS, "longform.")
    longform = LongformConfig(**longform_doc)

    eval_doc = dict(doc.get("eval", {}))
    _check_keys(eval_doc, _EVAL_KEYS, "eval.")
    predictions_file = eval_doc.pop("predictions_file", "predictions_fused.jsonl")
    if "k_values" in eval_doc:
        eval_doc["k_values"] = tuple(eval_doc["k_values"])
    if "iou_thresholds" in eval_doc:
        eval_doc["iou_thresholds"] = tuple(eval_doc["iou_thresholds"])
    eval_cfg = EvalConfig(**eval_doc)

    scorer_doc = dict(doc.get("scorer", {"kind": "similarity"}))
    _check_keys(scorer_doc, _SCORER_KEYS, "scorer.")
    if scorer_doc.get("kind", "similarity") not in ("similarity", "noisy_oracle"):
        raise ConfigError(f"scorer.kind must be 'similarity' or 'noisy_oracle', got {scorer_doc.get('kind')!r}")
    scorer_doc.setdefault("kind", "similarity")
    scorer_doc.setdefault("seed", seed)

    synth_doc = dict(doc.get("synthetic", {}))
    _check_keys(synth_doc, _SYNTH_KEYS, "synthetic.")
    synth_doc.setdefault("seed", seed)
    synthetic = SyntheticConfig(**synth_doc)
    synthetic.validate()

    threads = doc.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads!r}")

    rc = RunConfig(
        dataset_root=doc["dataset_root"],
        out_dir=doc["out_dir"],
        seed=seed,
        split=doc.get("split", "test"),
        threads=threads,
        mode=mode,
        modalities=modalities,
        guidance_doc=guidance_doc,
        train=train,
        longform=longform,
        eval=eval_cfg,
        predictions_file=predictions_file,
        scorer=scorer_doc,
        synthetic=synthetic,
    )
    rc.guidance_config()  # validate guidance block + modality/mode coupling up front
    return rc


def load_run_config(path: str, overrides: list[str] | None = None, threads: int | None = None) -> RunConfig:
    """Read a config file, apply --set dot-path overrides, validate."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key.path=value, got {item!r}")
        key, raw = item.split("=", 1)
        set_dot_path(doc, key.strip(), _parse_literal(raw))
    if threads is not None:
        doc["threads"] = threads
    return parse_run_config(doc)


def _parse_literal(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def set_dot_path(doc: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {dotted!r} crosses a non-object value")
    node[parts[-1]] = value
