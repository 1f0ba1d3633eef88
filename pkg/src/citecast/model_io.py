"""Versioned JSON serialization of model configuration and parameters.

Layout: ``{"format_version": 1, "config": {...}, "blocks": [{"name",
"shape", "values"}, ...], "metadata": {...}}``. Values are hex-float
strings, so the round trip is bit-exact and the file stays diffable.
Writes go through a temp file and an atomic rename; a reader never
sees a partial model.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import DataError
from .network import ModelConfig, ModelParams, validate_params

FORMAT_VERSION = 1


def save_model(
    path: str,
    config: ModelConfig,
    params: ModelParams,
    metadata: dict | None = None,
) -> None:
    """Write config + parameters as versioned JSON, atomically."""
    validate_params(config, params)
    blocks = [
        {
            "name": name,
            "shape": list(block.shape),
            "values": [float(v).hex() for v in block.reshape(-1)],
        }
        for name, block in params.named_blocks()
    ]
    doc = {
        "format_version": FORMAT_VERSION,
        "config": config.as_dict(),
        "blocks": blocks,
        "metadata": metadata or {},
    }
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write model file {path}: {exc}") from exc
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _parse_values(name: str, shape: list[int], values: list) -> np.ndarray:
    expected = int(np.prod(shape)) if shape else 1
    if len(values) != expected:
        raise DataError(
            f"block {name}: {len(values)} values for shape {tuple(shape)}"
        )
    try:
        flat = np.array([float.fromhex(v) for v in values], dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DataError(f"block {name}: bad value encoding: {exc}") from None
    if not np.all(np.isfinite(flat)):
        raise DataError(f"block {name} contains non-finite values")
    return flat.reshape(shape)


def load_model(path: str) -> tuple[ModelConfig, ModelParams, dict]:
    """Read and validate a model file written by save_model."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid model file: {exc}") from None

    if not isinstance(doc, dict):
        raise DataError(f"{path}: not a valid model file: top level is not an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported format_version {version!r}, "
            f"expected {FORMAT_VERSION}"
        )
    for key in ("config", "blocks"):
        if key not in doc:
            raise DataError(f"{path}: missing {key!r} section")

    try:
        config = ModelConfig.from_dict(doc["config"])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad config: {exc}") from None

    blocks: dict[str, np.ndarray] = {}
    for entry in doc["blocks"]:
        if not isinstance(entry, dict) or not {"name", "shape", "values"} <= set(entry):
            raise DataError(f"{path}: malformed block entry")
        name = entry["name"]
        if name in blocks:
            raise DataError(f"{path}: duplicate block {name}")
        if not isinstance(entry["shape"], list) or not all(
            isinstance(d, int) and d > 0 for d in entry["shape"]
        ):
            raise DataError(f"{path}: block {name}: bad shape {entry['shape']!r}")
        blocks[name] = _parse_values(name, entry["shape"], entry["values"])

    params = ModelParams(blocks)
    try:
        validate_params(config, params)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise DataError(f"{path}: metadata is not an object")
    return config, params, metadata


def _float_hex_or_none(value):
    return None if value is None else float(value).hex()


def training_metadata(seed: int, tcfg, final_val_loss: float | None) -> dict:
    """Standard metadata block recorded by the train subcommand."""
    return {
        "seed": seed,
        "train_config": {
            "epochs": tcfg.epochs,
            "batch_size": tcfg.batch_size,
            "rho": tcfg.rho,
            "eps": tcfg.eps,
            "early_stop_patience": tcfg.early_stop_patience,
            "clip_norm": tcfg.clip_norm,
        },
        "final_val_loss": None
        if final_val_loss is None or not math.isfinite(final_val_loss)
        else final_val_loss,
    }
