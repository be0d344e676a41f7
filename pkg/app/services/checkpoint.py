"""Checkpoint file format.

    offset  size  field
    0       4     magic b"SAVD"
    4       4     format version (uint32)
    8       4     base_channels (uint32)
    12      4     max_channels (uint32)
    16      4     spatial_stages (uint32)
    20      4     bottleneck_channels (uint32, 0 = default)
    24      4     stride T (uint32)
    28      4     flags (uint32): bit 0 clamp_output, bit 1 skip connections off
    32      8     training step count (uint64)
    40      8     RNG seed (uint64)
    48      4     parameter count (uint32)
    52      ...   parameter arrays in declared order, each:
                  uint16 name length, UTF-8 name, uint8 ndim, ndim × uint32 dims,
                  little-endian float32 data

All integers are little-endian. Parameters are stored as float32, so a model
trained in float32 round-trips bit-exactly.
"""
import logging
import os
import struct
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import CheckpointFormatError
from ..models.model_config import ModelConfig
from .autodiff import Tensor
from .network import ModelParams, parameter_layout

logger = logging.getLogger(__name__)

MAGIC = b"SAVD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIIIQQI")
FLAG_CLAMP = 1
FLAG_NO_SKIPS = 2


class Checkpoint(BaseModel):
    """A trained network plus the bookkeeping needed to reproduce it."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: ModelParams
    step: int = Field(0, json_schema_extra={"description": "Optimizer steps taken."}, ge=0)
    seed: int = Field(0, json_schema_extra={"description": "Seed the run was started with."}, ge=0)

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def _flags(config: ModelConfig) -> int:
    return (FLAG_CLAMP if config.clamp_output else 0) | (0 if config.skip_connections else FLAG_NO_SKIPS)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    config = checkpoint.config
    parts = [
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            config.base_channels,
            config.max_channels,
            config.spatial_stages,
            config.bottleneck_channels or 0,
            config.stride,
            _flags(config),
            checkpoint.step,
            checkpoint.seed,
            len(checkpoint.params),
        )
    ]
    for name, tensor in checkpoint.params.tensors.items():
        encoded_name = name.encode("utf-8")
        shape = tensor.shape
        parts.append(struct.pack("<H", len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack(f"<B{len(shape)}I", len(shape), *shape))
        parts.append(np.ascontiguousarray(tensor.data, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            raise CheckpointFormatError(f"checkpoint truncated while reading {what}")
        chunk = self.payload[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(payload: bytes) -> Checkpoint:
    reader = _Reader(payload)
    if len(payload) < 4 or payload[:4] != MAGIC:
        raise CheckpointFormatError("not a checkpoint: bad magic")
    (
        _magic,
        version,
        base_channels,
        max_channels,
        stages,
        bottleneck,
        stride,
        flags,
        step,
        seed,
        count,
    ) = reader.unpack(_HEADER.format, "header")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    try:
        config = ModelConfig(
            base_channels=base_channels,
            max_channels=max_channels,
            spatial_stages=stages,
            bottleneck_channels=bottleneck or None,
            stride=stride,
            clamp_output=bool(flags & FLAG_CLAMP),
            skip_connections=not flags & FLAG_NO_SKIPS,
        )
    except ValueError as exc:
        raise CheckpointFormatError(f"checkpoint header holds an invalid model config: {exc}") from exc

    layout = parameter_layout(config)
    if count != len(layout):
        raise CheckpointFormatError(f"checkpoint lists {count} parameters, config implies {len(layout)}")
    tensors = {}
    for expected_name, expected_shape, _ in layout:
        (name_length,) = reader.unpack("<H", "parameter name length")
        name = reader.take(name_length, "parameter name").decode("utf-8")
        (ndim,) = reader.unpack("<B", f"rank of {name}")
        shape = reader.unpack(f"<{ndim}I", f"shape of {name}")
        if name != expected_name or tuple(shape) != expected_shape:
            raise CheckpointFormatError(
                f"parameter {name}{tuple(shape)} does not match expected {expected_name}{expected_shape}"
            )
        size = int(np.prod(shape)) * 4
        data = np.frombuffer(reader.take(size, f"data of {name}"), dtype="<f4").astype(np.float32).reshape(shape)
        tensors[name] = Tensor.parameter(data, name=name)
    if reader.offset != len(payload):
        raise CheckpointFormatError(f"{len(payload) - reader.offset} unexpected trailing bytes")
    return Checkpoint(params=ModelParams(config=config, tensors=tensors), step=step, seed=seed)


def save_checkpoint(checkpoint: Checkpoint, path: str | os.PathLike) -> None:
    """Writes atomically: the file at ``path`` is either the old or the new checkpoint."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = target.with_name(target.name + ".tmp")
    staging.write_bytes(encode_checkpoint(checkpoint))
    os.replace(staging, target)
    logger.debug("checkpoint (step %d) written to %s", checkpoint.step, target)


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())
