"""Checkpoints: a YAML manifest plus a little-endian float64 parameter blob"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Type, Union

import numpy as np
import yaml

from ..baselines.vanilla_transformer import VanillaTransformer
from ..errors import CheckpointError, ConfigError, ShapeError
from ..model.base import BeamformingModel
from ..model.decoder import DecoderConfig
from ..model.hpe_transformer import HPETransformer
from ..model.params import EncoderHyper, ModelParams

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
MANIFEST_NAME = "model.manifest"
BLOB_NAME = "model.bin"

MODEL_KINDS: Dict[str, Type[BeamformingModel]] = {
    HPETransformer.kind: HPETransformer,
    VanillaTransformer.kind: VanillaTransformer,
}

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    """A model together with its training metadata"""

    model: BeamformingModel
    metadata: Dict[str, Any] = field(default_factory=dict)


def build_model(
    kind: str, hyper: EncoderHyper, n_antennas: int, decoder: DecoderConfig, seed: int = 0
) -> BeamformingModel:
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    return MODEL_KINDS[kind].create(hyper, n_antennas, decoder, seed)


def save_checkpoint(model: BeamformingModel, directory: PathLike, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write model.manifest and model.bin into a directory

    Args:
        model: Model to store
        directory: Target directory (created if missing)
        metadata: Extra plain-data entries for the manifest

    Returns:
        The directory path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    entries, offset = [], 0
    for name, value in model.params.arrays.items():
        entries.append({"name": name, "shape": list(value.shape), "offset": offset})
        offset += value.size * 8

    manifest = {"version": CHECKPOINT_VERSION, **model.manifest(), "parameters": entries, "metadata": metadata or {}}
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, default_flow_style=False, sort_keys=False)
    model.params.flatten().astype("<f8").tofile(directory / BLOB_NAME)
    logger.info(f"Checkpoint written to {directory} ({model.params.size} parameters)")
    return directory


def load_checkpoint(directory: PathLike, expected_hyper: Optional[EncoderHyper] = None) -> Checkpoint:
    """
    Read a checkpoint and validate it against its declared architecture

    Args:
        directory: Checkpoint directory
        expected_hyper: If given, the stored architecture must match it

    Raises:
        CheckpointError: Missing files, unknown version or kind, or any shape mismatch
    """
    directory = Path(directory)
    manifest_path, blob_path = directory / MANIFEST_NAME, directory / BLOB_NAME
    if not manifest_path.exists() or not blob_path.exists():
        raise CheckpointError(f"{directory} does not contain {MANIFEST_NAME} and {BLOB_NAME}")

    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = yaml.safe_load(f) or {}
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {manifest.get('version')} is not {CHECKPOINT_VERSION}")

    kind = manifest.get("model")
    if kind not in MODEL_KINDS:
        raise CheckpointError(f"unknown model kind {kind!r}")
    try:
        hyper = EncoderHyper(**manifest["encoder"])
        decoder = DecoderConfig(**manifest["decoder"])
        n_antennas = int(manifest["n_antennas"])
    except (KeyError, TypeError, ConfigError) as e:
        raise CheckpointError(f"invalid architecture in {manifest_path}: {e}") from e
    if expected_hyper is not None and hyper != expected_hyper:
        raise CheckpointError(f"checkpoint architecture {hyper} does not match expected {expected_hyper}")

    expected = MODEL_KINDS[kind].expected_shapes(hyper, n_antennas)
    stored = {entry["name"]: tuple(entry["shape"]) for entry in manifest.get("parameters", [])}
    for name, shape in expected.items():
        if stored.get(name) != shape:
            raise CheckpointError(f"parameter {name}: stored shape {stored.get(name)}, architecture needs {shape}")
    if len(stored) != len(expected):
        raise CheckpointError(f"checkpoint has {len(stored)} parameters, architecture needs {len(expected)}")

    blob = np.fromfile(blob_path, dtype="<f8")
    try:
        params = ModelParams.unflatten(expected, blob.astype(np.float64))
        model = MODEL_KINDS[kind](params, hyper, n_antennas, decoder)
    except ShapeError as e:
        raise CheckpointError(f"{blob_path}: {e}") from e
    logger.info(f"Loaded {kind} checkpoint from {directory}")
    return Checkpoint(model=model, metadata=manifest.get("metadata") or {})
